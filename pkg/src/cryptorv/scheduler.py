"""Workload descriptions and the programs that process them.

Two shapes are supported:

* ``LongMessage``: one (or two interleaved) long messages. The host image is
  streamed into two DM halves by DMA while the previous chunk is hashed, and
  the buffer's two message regions alternate so each block load overlaps the
  compression of the previous block.
* ``ManyHash``: many short independent inputs. DM holds an 8-slot ring; each
  slot is refilled by DMA one slot ahead of the one being processed and
  digests land in an 8-entry output ring.

``plan_*`` return a :class:`Plan` (program plus layout); :func:`execute` runs
it and decodes the outputs; :func:`analyze` splits a trace into compute, DMA
and overlap time.
"""

import math
import random
from dataclasses import dataclass, field

from cryptorv.core import Simulator
from cryptorv.errors import AnalysisError, ConfigError, LayoutError
from cryptorv.isa import BUFFER_WORDS, DM_WORDS, MAX_BULK, MAX_DMA, RC_BASE, assemble
from cryptorv.modes import HARAKA_INPUT, KECCAK_RATE, Algorithm
from cryptorv.primitives import digest as reference_digest
from cryptorv.primitives.haraka import STANDARD_RC, haraka_rc_derive
from cryptorv.primitives.keccak import sponge_pad
from cryptorv.primitives.md import initial_state, md_blocks
from cryptorv.units import (
    block_words, bytes_to_words, md_state_words, state_words, words_to_bytes,
)

RING_SLOTS = 8
CHUNK_STEPS = 4          # steps per long-message DMA chunk; must be even
INIT_WORDS = 128         # DM words reserved for IV / zero state / key / constants

# SHAKE output used when a workload does not set one
DEFAULT_SHAKE_OUT = {Algorithm.SHAKE128: 32, Algorithm.SHAKE256: 64}


class Shape:
    pass


@dataclass(frozen=True)
class LongMessage(Shape):
    total_bytes: int
    streams: int = 1

    def __post_init__(self):
        if self.total_bytes < 0:
            raise LayoutError("message length must be non-negative")
        if self.streams not in (1, 2):
            raise LayoutError("a long-message workload has 1 or 2 streams")


@dataclass(frozen=True)
class ManyHash(Shape):
    instances: int
    bytes_per_instance: int

    def __post_init__(self):
        if self.instances < 1:
            raise LayoutError("need at least one instance")
        if self.bytes_per_instance < 0:
            raise LayoutError("instance size must be non-negative")


@dataclass
class Workload:
    """What to process. ``messages`` defaults to seeded random data of the shape's size."""

    algorithm: Algorithm
    shape: Shape
    seeded_rc: tuple | None = None      # (sk, pk) for Haraka
    key: bytes | None = None            # AES key (random from seed if unset)
    out_len: int | None = None          # SHAKE output bytes
    dual_lane: bool = False
    messages: list | None = None
    seed: int = 0

    def __post_init__(self):
        self.algorithm = Algorithm.parse(self.algorithm)
        alg = self.algorithm
        if self.dual_lane and alg not in (Algorithm.SHA256, Algorithm.SM3):
            raise LayoutError(f"dual-lane mode needs SHA-256 or SM3, not {alg.label}")
        if self.seeded_rc is not None and not alg.name.startswith("HARAKA"):
            raise LayoutError("seeded round constants only apply to Haraka")
        if self.key is not None and alg is not Algorithm.AES128:
            raise LayoutError("a key only applies to AES-128")
        if self.out_len is not None and alg not in DEFAULT_SHAKE_OUT:
            raise LayoutError("out_len only applies to SHAKE")
        if self.out_len is not None and self.out_len < 1:
            raise LayoutError("out_len must be positive")

    @property
    def output_len(self):
        alg = self.algorithm
        if alg in DEFAULT_SHAKE_OUT:
            return self.out_len or DEFAULT_SHAKE_OUT[alg]
        return {Algorithm.SHA256: 32, Algorithm.SM3: 32, Algorithm.SHA512: 64,
                Algorithm.SHA3_256: 32, Algorithm.AES128: 16, Algorithm.HARAKA256: 32,
                Algorithm.HARAKA512: 32}[alg]

    def inputs(self):
        """The concrete input messages (generated from ``seed`` when not given)."""
        if self.messages is not None:
            return [bytes(m) for m in self.messages]
        rng = random.Random(self.seed)
        shape = self.shape
        if isinstance(shape, LongMessage):
            return [rng.randbytes(shape.total_bytes) for _ in range(shape.streams)]
        return [rng.randbytes(shape.bytes_per_instance) for _ in range(shape.instances)]

    def aes_key(self):
        if self.key is not None:
            return bytes(self.key)
        return random.Random(self.seed ^ 0x6B6579).randbytes(16)

    def expected(self):
        """Reference outputs computed by the software primitives."""
        alg = self.algorithm
        kw = {}
        if alg is Algorithm.AES128:
            kw["key"] = self.aes_key()
        elif alg in DEFAULT_SHAKE_OUT:
            kw["out_len"] = self.output_len
        elif alg.name.startswith("HARAKA") and self.seeded_rc is not None:
            kw["rc"] = haraka_rc_derive(*self.seeded_rc)
        return [reference_digest(alg, m, **kw) for m in self.inputs()]


# ---------------------------------------------------------------- packing

def steps_for(algorithm, message):
    """Padded per-dispatch word groups of one message (hash modes only)."""
    alg = Algorithm(algorithm)
    if alg.is_md:
        return [bytes_to_words(b) for b in md_blocks(alg, message)]
    padded = sponge_pad(alg, message)
    rate = KECCAK_RATE[alg]
    return [bytes_to_words(padded[k:k + rate], little=True) for k in range(0, len(padded), rate)]


def _fixed_input(alg, data):
    """Words of one AES block or Haraka input."""
    size = 16 if alg is Algorithm.AES128 else HARAKA_INPUT[alg]
    if len(data) != size:
        raise LayoutError(f"{alg.label} inputs are exactly {size} bytes, got {len(data)}")
    return bytes_to_words(data)


def out_words(workload):
    alg = workload.algorithm
    if alg.is_md:
        return state_words(alg)
    return math.ceil(workload.output_len / 8)


def _decode_output(workload, words):
    alg = workload.algorithm
    if alg.is_keccak:
        return words_to_bytes(words, little=True)[:workload.output_len]
    return words_to_bytes(words)[:workload.output_len]


# ---------------------------------------------------------------- layout and plan

@dataclass
class Layout:
    """Where things live. Regions map a name to (base, words)."""

    dm: dict = field(default_factory=dict)
    buffer: dict = field(default_factory=dict)
    host_words: int = 0
    slot_words: int = 0

    def describe(self):
        lines = ["DM:"]
        for name, (base, n) in sorted(self.dm.items(), key=lambda kv: kv[1][0]):
            lines.append(f"  {name:<10} [{base:4d}, {base + n:4d})")
        lines.append("buffer:")
        for name, (base, n) in sorted(self.buffer.items(), key=lambda kv: kv[1][0]):
            lines.append(f"  {name:<10} [{base:4d}, {base + n:4d})")
        lines.append(f"host image: {self.host_words} words")
        return "\n".join(lines)


@dataclass
class Plan:
    workload: Workload
    program: object
    layout: Layout
    source: str
    instances: int
    out_words: int

    @property
    def watch(self):
        return self.layout.dm["out"]

    def simulator(self, config=None, detail=False):
        return Simulator(self.program, config, detail=detail, watch=self.watch)

    def outputs(self, sim):
        """Decode digests from the words the program stored into the output region."""
        values = [w for _, _, w in sim.outbox]
        n = self.out_words
        if len(values) < n * self.instances:
            raise AnalysisError(
                f"program stored {len(values)} output words; expected {n * self.instances}")
        return [_decode_output(self.workload, values[k * n:(k + 1) * n])
                for k in range(self.instances)]


@dataclass(frozen=True)
class ScheduleTrace:
    t_compute: int
    t_dma: int
    t_total: int
    overlap: int

    @property
    def ratio(self):
        return self.t_total / self.t_compute if self.t_compute else math.inf


@dataclass
class Result:
    plan: Plan
    outputs: list
    state: object
    trace: object
    schedule: ScheduleTrace
    last_store: int

    @property
    def cycles(self):
        """Measured interval: up to the cycle the last output word lands in DM."""
        return self.last_store

    @property
    def total_cycles(self):
        return len(self.trace)


def analyze(trace):
    """Compute/DMA/overlap split of a completed run."""
    if not trace.complete:
        raise AnalysisError("trace is incomplete (the run did not reach halt)")
    compute = dma = both = 0
    engine_mask = 0b111
    for f in trace.flags:
        e = f & engine_mask
        d = f & 0b1000
        if e:
            compute += 1
        if d:
            dma += 1
            if e:
                both += 1
    return ScheduleTrace(compute, dma, len(trace.flags), both)


def execute(plan, config=None, detail=False, limit=None, skip=True):
    sim = plan.simulator(config, detail)
    state, trace = sim.run(limit, skip)
    last = sim.outbox[-1][0] if sim.outbox else len(trace)
    return Result(plan, plan.outputs(sim), state, trace, analyze(trace), last)


# ---------------------------------------------------------------- code generation

class _Asm:
    def __init__(self):
        self.lines = []
        self.n = 0

    def __call__(self, *lines):
        self.lines.extend(lines)

    def label(self, stem):
        self.n += 1
        return f"{stem}_{self.n}"

    def place(self, name):
        self.lines.append(f"{name}:")

    def text(self):
        out = []
        for line in self.lines:
            out.append(line if line.endswith(":") or line.startswith(".") else "    " + line)
        return "\n".join(out) + "\n"


def _dm_directive(addr, words):
    out = []
    for k in range(0, len(words), 8):
        chunk = " ".join(f"0x{w:x}" for w in words[k:k + 8])
        out.append(f".dm {addr + k} {chunk}")
    return out


def _host_directive(words):
    out = []
    end = 0
    for k in range(0, len(words), 8):
        if any(words[k:k + 8]):
            chunk = " ".join(f"0x{w:x}" for w in words[k:k + 8])
            out.append(f".host {k} {chunk}")
            end = min(k + 8, len(words))
    if end < len(words):
        # the assembler sizes the image by its highest written address
        out.append(f".host {len(words) - 1} 0")
    return out


class _HashCode:
    """Emits state init, absorb/compress steps and the final store for one mode."""

    def __init__(self, alg, streams, dual):
        self.alg = alg
        self.streams = streams
        self.dual = dual
        self.eng = alg.engine.name.lower()
        sw = state_words(alg) * streams
        self.state = (0, sw)
        self.ma = max(sw, 8)
        self.block = block_words(alg)
        self.w = self.block * streams
        self.mb = self.ma + self.w
        if self.mb + self.w > BUFFER_WORDS:
            raise LayoutError("message regions do not fit in the buffer")

    @property
    def mode(self):
        return self.alg.name.lower()

    def regions(self):
        return {"state": self.state, "msg_a": (self.ma, self.w), "msg_b": (self.mb, self.w)}

    def dispatch(self, a, region):
        m = self.mode
        if self.alg.is_keccak:
            a(f"crypto_dispatch {m}, b0, b{region}")
        elif self.streams == 1:
            a(f"crypto_dispatch {m}, b0, b{region}")
        elif self.dual:
            a(f"crypto_dispatch {m}.dual, b0, b{region}")
        else:
            sw = state_words(self.alg)
            a(f"crypto_dispatch {m}, b0, b{region}",
              f"crypto_dispatch {m}, b{sw}, b{region + self.block}")

    def unrolled(self, a, nsteps, ptr="r13", rest_wait=False):
        """Load-and-dispatch ``nsteps`` steps starting at DM[ptr].

        ``rest_wait``: steps after the first are still arriving by DMA.
        """
        for j in range(nsteps):
            region = self.ma if j % 2 == 0 else self.mb
            if j == 1 and rest_wait:
                a("dma_wait")
            a(f"buf_load b{region}, dm:0({ptr}), {self.w}")
            self.dispatch(a, region)
            if j < nsteps - 1:
                a(f"addi {ptr}, {ptr}, {self.w}")

    def loop(self, a, count="r12", ptr="r13"):
        """Steps counted by ``count`` (>= 1), alternating message regions."""
        top, done = a.label("blk"), a.label("blkdone")
        a.place(top)
        a(f"buf_load b{self.ma}, dm:0({ptr}), {self.w}")
        self.dispatch(a, self.ma)
        a(f"addi {ptr}, {ptr}, {self.w}", f"addi {count}, {count}, -1",
          f"beq {count}, r0, {done}")
        a(f"buf_load b{self.mb}, dm:0({ptr}), {self.w}")
        self.dispatch(a, self.mb)
        a(f"addi {ptr}, {ptr}, {self.w}", f"addi {count}, {count}, -1",
          f"bne {count}, r0, {top}")
        a.place(done)

    def finish(self, a, total_out, out="r24", tmp="r16"):
        """Wait for the last step and store ``total_out`` words at DM[out]."""
        a(f"crypto_wait {self.eng}")
        if self.alg.is_md:
            a(f"buf_store b0, dm:0({out}), {total_out}")
            return
        rate = KECCAK_RATE[self.alg] // 8
        remaining = total_out
        a(f"mv {tmp}, {out}")
        while True:
            k = min(rate, remaining)
            a(f"buf_store b0, dm:0({tmp}), {k}")
            remaining -= k
            if not remaining:
                break
            a(f"addi {tmp}, {tmp}, {k}",
              f"crypto_dispatch {self.mode}.perm, b0, b0",
              f"crypto_wait {self.eng}")


def _init_words(alg, copies):
    if alg.is_md:
        return md_state_words(alg, initial_state(alg)) * copies
    return [0] * 25


def _check_dm(layout):
    end = max(b + n for b, n in layout.dm.values())
    if end > DM_WORDS:
        raise LayoutError(f"layout needs {end} DM words; data memory has {DM_WORDS}")


def _finish_plan(workload, a, layout, instances, ow):
    source = a.text()
    program = assemble(source)
    return Plan(workload, program, layout, source, instances, ow)


def plan_long_message(workload):
    """Program for a LongMessage workload (hash modes only)."""
    alg = workload.algorithm
    shape = workload.shape
    if not isinstance(shape, LongMessage):
        raise LayoutError("plan_long_message needs a LongMessage shape")
    if not alg.is_hash:
        raise LayoutError(f"{alg.label} is not a hash mode; use a many-hash workload")
    streams = shape.streams
    if streams == 2 and not alg.is_md:
        raise LayoutError("two-stream long messages need a Merkle-Damgard mode")
    msgs = workload.inputs()
    if len(msgs) != streams:
        raise LayoutError(f"expected {streams} message(s), got {len(msgs)}")
    per = [steps_for(alg, m) for m in msgs]
    if len({len(p) for p in per}) != 1:
        raise LayoutError("interleaved streams must pad to the same number of blocks")
    nsteps = len(per[0])
    code = _HashCode(alg, streams, workload.dual_lane)
    w = code.w
    host = []
    for j in range(nsteps):
        for p in per:
            host.extend(p[j])

    ow = out_words(workload)
    init = _init_words(alg, streams)
    layout = Layout(buffer=code.regions())
    layout.dm["init"] = (0, len(init))
    layout.dm["out"] = (INIT_WORDS, ow * streams)
    if ow * streams > MAX_BULK * 4:
        raise LayoutError("requested output does not fit the output region")
    a = _Asm()
    a(*_dm_directive(0, init))
    out_base = INIT_WORDS
    half0 = INIT_WORDS + 128
    if nsteps <= CHUNK_STEPS:
        # short message: one DMA, straight-line code
        layout.dm["chunk0"] = (half0, nsteps * w)
        layout.host_words = len(host)
        _check_dm(layout)
        # the first block travels alone so compression starts as early as possible
        a(f"li r13, {half0}",
          f"dma_start r0, r13, {w}",
          f"buf_load b0, dm:0(r0), {len(init)}", f"li r24, {out_base}")
        if nsteps > 1:
            a(f"li r14, {w}", f"addi r15, r13, {w}", "dma_wait",
              f"dma_start r14, r15, {(nsteps - 1) * w}")
        else:
            a("dma_wait")
        code.unrolled(a, nsteps, rest_wait=nsteps > 1)
    else:
        cw = CHUNK_STEPS * w
        half1 = half0 + cw
        layout.dm["chunk0"] = (half0, cw)
        layout.dm["chunk1"] = (half1, cw)
        host.extend([0] * (-len(host) % cw))
        layout.host_words = len(host)
        _check_dm(layout)
        chunk, full, nopf = a.label("chunk"), a.label("full"), a.label("nopf")
        a(f"li r22, {half0}", f"li r23, {half1}", f"li r21, {nsteps}", f"li r24, {out_base}",
          f"dma_start r0, r22, {cw}", f"li r20, {cw}",
          f"buf_load b0, dm:0(r0), {len(init)}")
        a.place(chunk)
        a("dma_wait", f"li r12, {CHUNK_STEPS}", f"bge r21, r12, {full}", "mv r12, r21")
        a.place(full)
        a("sub r21, r21, r12", f"beq r21, r0, {nopf}",
          f"dma_start r20, r23, {cw}", f"addi r20, r20, {cw}")
        a.place(nopf)
        a("mv r13, r22")
        code.loop(a)
        a("mv r1, r22", "mv r22, r23", "mv r23, r1", f"bne r21, r0, {chunk}")
    if alg.is_md:
        code.finish(a, ow * streams)
    else:
        code.finish(a, ow)
    a("halt")
    a(*_host_directive(host))
    # each stream's digest is stored contiguously, so the plan has `streams` outputs
    return _finish_plan(workload, a, layout, streams, ow)


def plan_many_hash(workload):
    """Program for a ManyHash workload over the 8-slot DM ring."""
    alg = workload.algorithm
    shape = workload.shape
    if not isinstance(shape, ManyHash):
        raise LayoutError("plan_many_hash needs a ManyHash shape")
    msgs = workload.inputs()
    if len(msgs) != shape.instances:
        raise LayoutError(f"expected {shape.instances} messages, got {len(msgs)}")
    if any(len(m) > shape.bytes_per_instance for m in msgs):
        raise LayoutError("a message is longer than the workload's bytes_per_instance")
    ow = out_words(workload)
    if alg.is_hash:
        return _plan_many_hashes(workload, msgs, ow)
    return _plan_many_fixed(workload, msgs, ow)


def _ring_prologue(a, layout, sw, groups, host_words):
    ring_base, ring_n = layout.dm["ring"]
    out_base, out_n = layout.dm["out"]
    a(f"li r27, {ring_base}", f"li r26, {ring_base + ring_n}",
      f"li r29, {out_base}", f"li r28, {out_base + out_n}",
      "mv r10, r27", "mv r24, r29", f"li r11, {groups}",
      f"dma_start r0, r10, {sw}", f"li r20, {sw}")


def _ring_head(a):
    grp = a.label("grp")
    a.place(grp)
    a("dma_wait")
    return grp


def _ring_prefetch(a, sw):
    """DMA the next instance into the following slot. Emitted after the current
    slot has been read into the buffer, so the transfer runs under compute."""
    nopf, wrap = a.label("nopf"), a.label("wrap")
    a("addi r11, r11, -1", f"beq r11, r0, {nopf}",
      f"addi r15, r10, {sw}", f"bne r15, r26, {wrap}", "mv r15, r27")
    a.place(wrap)
    a(f"dma_start r20, r15, {sw}", f"addi r20, r20, {sw}")
    a.place(nopf)


def _ring_tail(a, grp, sw, out_step):
    w1, w2 = a.label("wrap"), a.label("wrap")
    a(f"addi r24, r24, {out_step}", f"bne r24, r28, {w1}", "mv r24, r29")
    a.place(w1)
    a(f"addi r10, r10, {sw}", f"bne r10, r26, {w2}", "mv r10, r27")
    a.place(w2)
    a(f"bne r11, r0, {grp}")


def _plan_many_hashes(workload, msgs, ow):
    alg = workload.algorithm
    g = 2 if workload.dual_lane else 1
    if g == 2 and len(msgs) % 2:
        msgs = msgs + [bytes(len(msgs[-1]))]     # dummy partner, discarded
    per = [steps_for(alg, m) for m in msgs]
    code = _HashCode(alg, g, workload.dual_lane)
    groups = len(msgs) // g
    cap = len(steps_for(alg, bytes(workload.shape.bytes_per_instance)))
    sw = 1 + cap * code.w
    host = []
    for k in range(groups):
        members = per[k * g:(k + 1) * g]
        n = max(len(p) for p in members)
        if any(len(p) != n for p in members):
            # both lanes compress in the same dispatch, so they must step together
            raise LayoutError("dual-lane partners must pad to the same number of blocks")
        slot = [n]
        for j in range(n):
            for p in members:
                slot.extend(p[j])
        slot.extend([0] * (sw - len(slot)))
        host.extend(slot)

    init = _init_words(alg, g)
    slots = RING_SLOTS // g
    layout = Layout(buffer=code.regions(), host_words=len(host), slot_words=sw)
    layout.dm["init"] = (0, len(init))
    layout.dm["out"] = (INIT_WORDS, RING_SLOTS * ow)
    layout.dm["ring"] = (INIT_WORDS + RING_SLOTS * ow, slots * sw)
    if sw > MAX_DMA:
        raise LayoutError("instance slot larger than one DMA transfer")
    _check_dm(layout)

    a = _Asm()
    a(*_dm_directive(0, init))
    if groups == 1:
        a(f"li r10, {layout.dm['ring'][0]}", f"li r24, {layout.dm['out'][0]}",
          f"dma_start r0, r10, {sw}", f"buf_load b0, dm:0(r0), {len(init)}",
          "dma_wait", "addi r13, r10, 1")
        code.unrolled(a, host[0])
        code.finish(a, ow * g)
    else:
        _ring_prologue(a, layout, sw, groups, len(host))
        grp = _ring_head(a)
        a("ld r12, 0(r10)", f"buf_load b0, dm:0(r0), {len(init)}", "addi r13, r10, 1")
        code.loop(a)
        _ring_prefetch(a, sw)
        code.finish(a, ow * g)
        _ring_tail(a, grp, sw, ow * g)
    a("halt")
    a(*_host_directive(host))
    return _finish_plan(workload, a, layout, len(workload.inputs()), ow)


def _plan_many_fixed(workload, msgs, ow):
    alg = workload.algorithm
    data = [_fixed_input(alg, m) for m in msgs]
    iw = len(data[0])
    host = [w for d in data for w in d]
    layout = Layout(host_words=len(host), slot_words=iw)
    a = _Asm()
    init = []
    if alg is Algorithm.AES128:
        init = bytes_to_words(workload.aes_key())
        layout.buffer = {"key": (0, 2), "block": (2, 2)}
        job_in = job_out = 2
        state = 0
    else:
        job_in, job_out, state = 0, 8, 8
        layout.buffer = {"input": (0, iw), "output": (8, 4)}
        nrc = 40 if alg is Algorithm.HARAKA256 else 80
        if workload.seeded_rc is None:
            init = bytes_to_words(STANDARD_RC.to_bytes())[:nrc]
            layout.buffer["rc"] = (RC_BASE, nrc)
        else:
            sk, pk = (bytes(x) for x in workload.seeded_rc)
            if len(sk) != len(pk) or len(sk) % 8 or not 8 <= len(sk) <= 32:
                raise LayoutError("Haraka seeds must be equal-length multiples of 8 bytes, at most 32")
            init = bytes_to_words(sk) + bytes_to_words(pk)
            n = len(sk) // 8
            layout.buffer.update(sk=(16, n), pk=(20, n), rc=(RC_BASE, 80))
    if init:
        layout.dm["init"] = (0, len(init))
    layout.dm["out"] = (INIT_WORDS, RING_SLOTS * ow)
    layout.dm["ring"] = (INIT_WORDS + RING_SLOTS * ow, RING_SLOTS * iw)
    _check_dm(layout)
    a(*_dm_directive(0, init))
    # constants
    if alg is Algorithm.AES128:
        a("buf_load b0, dm:0(r0), 2")
    elif workload.seeded_rc is None:
        a(f"buf_load b{RC_BASE}, dm:0(r0), {len(init)}")
    else:
        n = len(init) // 2
        a(f"buf_load b16, dm:0(r0), {n}", f"buf_load b20, dm:{n}(r0), {n}",
          f"haraka_rc b16, b20, {n}")
    m = alg.name.lower()

    def body(prefetch):
        a(f"buf_load b{job_in}, dm:0(r10), {iw}",
          f"crypto_dispatch {m}, b{state}, b{job_in}")
        if prefetch:
            _ring_prefetch(a, iw)
        a("crypto_wait aes",
          f"buf_store b{job_out}, dm:0(r24), {ow}")

    if len(data) == 1:
        a(f"li r10, {layout.dm['ring'][0]}", f"li r24, {layout.dm['out'][0]}",
          f"dma_start r0, r10, {iw}", "dma_wait")
        body(False)
    else:
        _ring_prologue(a, layout, iw, len(data), len(host))
        grp = _ring_head(a)
        body(True)
        _ring_tail(a, grp, iw, ow)
    a("halt")
    a(*_host_directive(host))
    return _finish_plan(workload, a, layout, len(data), ow)


def plan(workload):
    if isinstance(workload.shape, LongMessage):
        return plan_long_message(workload)
    return plan_many_hash(workload)


# ---------------------------------------------------------------- workload files

def parse_workload(text, source="<workload>"):
    """Parse ``key = value`` lines into a Workload.

    Keys: algorithm, shape (long | many), bytes, instances, streams, dual_lane,
    out_len, key (hex), sk / pk (hex), seed.
    """
    kv = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        kv[key.strip().lower()] = (value.strip(), lineno)
    allowed = {"algorithm", "shape", "bytes", "instances", "streams", "dual_lane",
               "out_len", "key", "sk", "pk", "seed"}
    for k, (_, lineno) in kv.items():
        if k not in allowed:
            raise ConfigError(f"{source}:{lineno}: unknown key {k!r}")

    def get(k, conv=str, default=None):
        if k not in kv:
            return default
        value, lineno = kv[k]
        try:
            return conv(value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {k}: {exc}") from None

    if "algorithm" not in kv:
        raise ConfigError(f"{source}: missing 'algorithm'")
    shape_name = get("shape", str, "many").lower()
    size = get("bytes", int, 64)
    if shape_name == "long":
        shape = LongMessage(size, get("streams", int, 1))
    elif shape_name == "many":
        shape = ManyHash(get("instances", int, 1), size)
    else:
        raise ConfigError(f"{source}: shape must be 'long' or 'many', not {shape_name!r}")
    seeded = None
    if ("sk" in kv) != ("pk" in kv):
        raise ConfigError(f"{source}: sk and pk must be given together")
    if "sk" in kv:
        seeded = (get("sk", bytes.fromhex), get("pk", bytes.fromhex))
    try:
        return Workload(get("algorithm", Algorithm.parse), shape, seeded_rc=seeded,
                        key=get("key", bytes.fromhex), out_len=get("out_len", int),
                        dual_lane=get("dual_lane", _flag, False), seed=get("seed", int, 0))
    except LayoutError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def _flag(text):
    t = text.lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")
