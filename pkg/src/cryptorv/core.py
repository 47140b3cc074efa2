"""Five-stage in-order pipeline (IF, ID, EXE, MEM, WB) driving memory and engines.

Timing rules:

* ALU results are forwarded (no stall); a load or ``crypto_read`` followed by
  a consumer costs ``hazard.load_use`` bubbles.
* Branches and jumps resolve in EXE; a taken one squashes the two younger
  instructions (``hazard.branch_flush`` cycles in total).
* ``buf_load``/``buf_store`` occupy MEM for their transfer cost and freeze the
  stages behind them.
* ``crypto_wait``/``dma_wait`` hold in ID until the unit signals done. Done
  is raised during a unit's final busy cycle, so the waiting instruction
  enters EXE exactly when the results have landed.
* ``crypto_dispatch`` and ``haraka_rc`` interlock the same way on their
  engine, so back-to-back jobs leave no idle cycle between them. They and
  ``dma_start`` act in EXE; ``dma_start`` on a busy channel traps.
* ``halt`` stops fetch when decoded; the run ends when it retires.

Each cycle evaluates WB, MEM, EXE, ID, IF in that order, records the trace
entry, then ticks the DMA channel and the engines once.

Every cycle WB either retires an instruction or drains a bubble tagged with
the cause that created it, so ``cycles == retired + sum(bubbles)``.
"""

import math
from dataclasses import dataclass

from cryptorv.config import Config, TimingConfig
from cryptorv.errors import (
    CryptoRVError, DmaConflictError, IllegalInstructionError, OutOfBoundsError, RunawayError,
    TrapError,
)
from cryptorv.isa import Op, Program, decode
from cryptorv.memsys import DataMemory, DmaChannel, InternalBuffer
from cryptorv.modes import Engine
from cryptorv.units import EngineJob, EngineSet, ExecutionUnit, compute

MASK64 = (1 << 64) - 1
SIGN64 = 1 << 63

FILL, LOADUSE, WAIT, MEM, FLUSH, DRAIN = "fill", "loaduse", "wait", "mem", "flush", "drain"
CAUSES = (FILL, LOADUSE, WAIT, MEM, FLUSH, DRAIN)
_CAUSE_CODE = {c: i + 1 for i, c in enumerate(CAUSES)}
_CODE_CAUSE = {v: k for k, v in _CAUSE_CODE.items()}

# trace flag bits
F_MD, F_AES, F_KECCAK, F_DMA, F_RETIRE = 1, 2, 4, 8, 16
_ENGINE_BIT = {Engine.MD: F_MD, Engine.AES_HARAKA: F_AES, Engine.KECCAK: F_KECCAK}


def _signed(x):
    return x - (1 << 64) if x & SIGN64 else x


_ALU = {
    Op.ADD: lambda a, b: a + b,
    Op.SUB: lambda a, b: a - b,
    Op.SLL: lambda a, b: a << (b & 63),
    Op.SLT: lambda a, b: int(_signed(a) < _signed(b)),
    Op.SLTU: lambda a, b: int(a < b),
    Op.XOR: lambda a, b: a ^ b,
    Op.SRL: lambda a, b: a >> (b & 63),
    Op.SRA: lambda a, b: _signed(a) >> (b & 63),
    Op.OR: lambda a, b: a | b,
    Op.AND: lambda a, b: a & b,
}
_IMM_ALU = {
    Op.ADDI: Op.ADD, Op.SLTI: Op.SLT, Op.SLTIU: Op.SLTU, Op.XORI: Op.XOR, Op.ORI: Op.OR,
    Op.ANDI: Op.AND, Op.SLLI: Op.SLL, Op.SRLI: Op.SRL, Op.SRAI: Op.SRA,
}
_BRANCH = {
    Op.BEQ: lambda a, b: a == b,
    Op.BNE: lambda a, b: a != b,
    Op.BLT: lambda a, b: _signed(a) < _signed(b),
    Op.BGE: lambda a, b: _signed(a) >= _signed(b),
    Op.BLTU: lambda a, b: a < b,
    Op.BGEU: lambda a, b: a >= b,
}
_LOADLIKE = (Op.LD, Op.CRYPTO_READ)


def alu(op, a, b):
    """Shared 64-bit ALU semantics (operands and result unsigned)."""
    return _ALU[op](a, b) & MASK64


def _imm_operand(instr):
    if instr.op in (Op.SLLI, Op.SRLI, Op.SRAI):
        return instr.imm
    return instr.imm & MASK64


class _Illegal:
    __slots__ = ("word", "message")

    def __init__(self, word, message):
        self.word = word
        self.message = message


class _Slot:
    """An instruction in flight."""

    __slots__ = ("instr", "pc", "addr", "cost", "value")

    def __init__(self, instr, pc):
        self.instr = instr
        self.pc = pc
        self.addr = 0
        self.cost = 1
        self.value = 0


def _label(item):
    if item is None:
        return "-"
    if type(item) is str:
        return item
    return str(item.pc)


# ---------------------------------------------------------------- trace

@dataclass(frozen=True)
class TraceRecord:
    cycle: int
    retired: bool
    stall: str | None
    md_busy: bool
    aes_busy: bool
    keccak_busy: bool
    dma_busy: bool
    stages: tuple | None = None


class ExecutionTrace:
    """Append-only per-cycle record.

    Text export columns: ``cycle retired stall md aes keccak dma`` and, with
    stage detail, ``if_id id_ex ex_mem mem_wb wb`` latch contents (instruction
    index or bubble cause). ``stall`` is the cause of the bubble leaving WB.
    """

    def __init__(self, detail=False):
        self.flags = bytearray()
        self.stages = [] if detail else None
        self.complete = False

    def __len__(self):
        return len(self.flags)

    @property
    def detail(self):
        return self.stages is not None

    def record(self, cycle):
        flags = self.flags[cycle - 1]
        code = flags >> 5
        return TraceRecord(
            cycle, bool(flags & F_RETIRE), _CODE_CAUSE.get(code),
            bool(flags & F_MD), bool(flags & F_AES), bool(flags & F_KECCAK), bool(flags & F_DMA),
            self.stages[cycle - 1] if self.stages is not None else None)

    def records(self):
        for c in range(1, len(self.flags) + 1):
            yield self.record(c)

    def busy_cycles(self, bit):
        return sum(1 for f in self.flags if f & bit)

    def stall_counts(self):
        counts = dict.fromkeys(CAUSES, 0)
        for f in self.flags:
            code = f >> 5
            if code:
                counts[_CODE_CAUSE[code]] += 1
        return counts

    def summary(self):
        f = self.flags
        retired = sum(1 for x in f if x & F_RETIRE)
        stalls = self.stall_counts()
        return {
            "cycles": len(f),
            "retired": retired,
            "stalls": stalls,
            "stall_total": sum(stalls.values()),
            "md_busy": self.busy_cycles(F_MD),
            "aes_haraka_busy": self.busy_cycles(F_AES),
            "keccak_busy": self.busy_cycles(F_KECCAK),
            "dma_busy": self.busy_cycles(F_DMA),
            "complete": self.complete,
        }

    def to_text(self):
        cols = "cycle retired stall md aes keccak dma"
        if self.detail:
            cols += " if_id id_ex ex_mem mem_wb wb"
        lines = [f"# {cols}"]
        for r in self.records():
            line = (f"{r.cycle} {int(r.retired)} {r.stall or '-'} {int(r.md_busy)} "
                    f"{int(r.aes_busy)} {int(r.keccak_busy)} {int(r.dma_busy)}")
            if r.stages is not None:
                line += " " + " ".join(r.stages)
            lines.append(line)
        return "\n".join(lines) + "\n"

    def summary_text(self):
        s = self.summary()
        lines = [f"cycles {s['cycles']}", f"retired {s['retired']}",
                 f"stalls {s['stall_total']}"]
        lines += [f"stall.{k} {v}" for k, v in s["stalls"].items()]
        lines += [f"busy.md {s['md_busy']}", f"busy.aes_haraka {s['aes_haraka_busy']}",
                  f"busy.keccak {s['keccak_busy']}", f"busy.dma {s['dma_busy']}"]
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- simulator

@dataclass
class CoreState:
    pc: int
    regs: tuple
    halted: bool
    cycle: int
    retired: int


class Simulator:
    """One machine instance: core, DM, buffer, DMA channel and three engines."""

    def __init__(self, program, config=None, dm_image=None, host_image=None,
                 detail=False, watch=None):
        if isinstance(config, Config):
            config = config.timing
        self.timing = t = config or TimingConfig()
        if not isinstance(program, Program):
            program = Program(list(program), max_instructions=t.im_size)
        if len(program.instructions) > t.im_size:
            raise CryptoRVError(
                f"program has {len(program.instructions)} instructions; "
                f"instruction memory holds {t.im_size}")
        self.program = program
        self.code = [self._predecode(i) for i in program.instructions]
        self.dm = DataMemory(program.data if dm_image is None else dm_image)
        self.host = list(program.host if host_image is None else host_image)
        self.buffer = InternalBuffer()
        self.dma = DmaChannel(self.dm, t.dma_setup, t.dma_words_per_cycle)
        self.engines = EngineSet(self.buffer, t)
        self.units = [self.engines[e] for e in Engine]
        self.regs = [0] * 32
        self.ready = [0] * 32
        self.pc = 0
        self.cycle = 0
        self.retired = 0
        self.halted = False
        self.fd = self.de = self.em = self.mw = FILL
        self.mem_slot = None
        self.mem_left = 0
        self.fetch_stopped = False
        self.fetch_hold = 0
        self.trace = ExecutionTrace(detail)
        self.watch = watch
        self.outbox = []
        self._pc_now = 0

    @staticmethod
    def _predecode(item):
        if isinstance(item, int):
            try:
                return decode(item)
            except IllegalInstructionError as exc:
                return _Illegal(item, str(exc))
        return item

    # ---------------------------------------------------------- state

    @property
    def state(self):
        return CoreState(self.pc, tuple(self.regs), self.halted, self.cycle, self.retired)

    def _trap(self, message, cause=None):
        err = TrapError(f"trap at pc {self._pc_now}, cycle {self.cycle + 1}: {message}",
                        self._pc_now, self.cycle + 1)
        err.state = self.state
        err.trace = self.trace
        err.cause = cause
        return err

    # ---------------------------------------------------------- stage actions

    def _ex(self, s, c):
        """EXE work; returns a redirect target for taken branches/jumps."""
        i = s.instr
        op = i.op
        regs = self.regs
        if op in _ALU:
            v = _ALU[op](regs[i.rs1], regs[i.rs2]) & MASK64
            if i.rd:
                regs[i.rd] = v
                self.ready[i.rd] = c + 1
            return None
        if op in _IMM_ALU:
            v = _ALU[_IMM_ALU[op]](regs[i.rs1], _imm_operand(i)) & MASK64
            if i.rd:
                regs[i.rd] = v
                self.ready[i.rd] = c + 1
            return None
        if op in _BRANCH:
            if _BRANCH[op](regs[i.rs1], regs[i.rs2]):
                return s.pc + i.imm
            return None
        t = self.timing
        if op is Op.LUI:
            if i.rd:
                regs[i.rd] = (i.imm << 12) & MASK64
                self.ready[i.rd] = c + 1
        elif op is Op.LD or op is Op.SD:
            s.addr = _signed((regs[i.rs1] + (i.imm & MASK64)) & MASK64)
            if op is Op.SD:
                s.value = regs[i.rs2]
            elif i.rd:
                self.ready[i.rd] = c + 1 + t.load_use_stall
        elif op is Op.BUF_LOAD or op is Op.BUF_STORE:
            s.addr = _signed((regs[i.rs1] + i.imm) & MASK64)
            s.cost = t.buf_setup + math.ceil(i.count / t.buf_words_per_cycle)
        elif op is Op.CRYPTO_READ:
            if i.rd:
                self.ready[i.rd] = c + 1 + t.load_use_stall
        elif op is Op.JAL or op is Op.JALR:
            target = s.pc + i.imm if op is Op.JAL else _signed((regs[i.rs1] + (i.imm & MASK64)) & MASK64)
            if i.rd:
                regs[i.rd] = s.pc + 1
                self.ready[i.rd] = c + 1
            return target
        elif op is Op.CRYPTO_DISPATCH:
            self.engines.for_mode(i.mode).dispatch(EngineJob(i.mode, i.buf, i.buf2, i.flag))
        elif op is Op.HARAKA_RC:
            self.engines[Engine.AES_HARAKA].rc_precompute((i.buf, i.count), (i.buf2, i.count))
        elif op is Op.DMA_START:
            host_addr, dm_addr = regs[i.rs1], regs[i.rs2]
            if host_addr + i.count > len(self.host):
                raise OutOfBoundsError(
                    f"host range [{host_addr}, {host_addr + i.count}) outside the "
                    f"{len(self.host)}-word host image")
            self.dma.start(self.host[host_addr:host_addr + i.count], dm_addr)
        return None

    def _dma_guard(self, base, count, what):
        rng = self.dma.target_range()
        if rng and base < rng[0] + rng[1] and rng[0] < base + count:
            raise DmaConflictError(
                f"{what} touches DM [{base}, {base + count}) while a DMA into "
                f"[{rng[0]}, {rng[0] + rng[1]}) is in flight")

    def _log(self, base, words, c):
        if self.watch is None:
            return
        lo, n = self.watch
        for k, w in enumerate(words):
            if lo <= base + k < lo + n:
                self.outbox.append((c, base + k, w))

    def _mem(self, s, c):
        i = s.instr
        op = i.op
        if op is Op.LD:
            self._dma_guard(s.addr, 1, "load")
            v = self.dm.read(s.addr)
            if i.rd:
                self.regs[i.rd] = v
        elif op is Op.SD:
            self._dma_guard(s.addr, 1, "store")
            self.dm.write(s.addr, s.value)
            self._log(s.addr, [s.value], c)
        elif op is Op.BUF_LOAD:
            self._dma_guard(s.addr, i.count, "buf_load")
            self.buffer._check(i.buf, i.count)
            words = self.dm.read_block(s.addr, i.count)
            self.engines.check_access(i.buf, i.count, True, "buf_load")
            self.buffer.write_block(i.buf, words)
        elif op is Op.BUF_STORE:
            self._dma_guard(s.addr, i.count, "buf_store")
            self.engines.check_access(i.buf, i.count, False, "buf_store")
            words = self.buffer.read_block(i.buf, i.count)
            self.dm.write_block(s.addr, words)
            self._log(s.addr, words, c)
        elif op is Op.CRYPTO_READ:
            self.engines.check_access(i.buf, 1, False, "crypto_read")
            v = self.buffer.read(i.buf)
            if i.rd:
                self.regs[i.rd] = v

    # ---------------------------------------------------------- one cycle

    def step(self):
        """Advance exactly one cycle."""
        if self.halted:
            raise CryptoRVError("core is halted")
        try:
            self._cycle()
        except TrapError:
            raise
        except CryptoRVError as exc:
            raise self._trap(str(exc), exc) from exc
        return self.state

    def _cycle(self):
        c = self.cycle + 1
        flags = 0
        stall = None
        # WB
        wb = self.mw
        if type(wb) is str:
            stall = wb
        else:
            flags |= F_RETIRE
            self.retired += 1
            if wb.instr.op is Op.HALT:
                self.halted = True
        frozen = True
        if not self.halted:
            # MEM
            if self.mem_slot is None:
                x = self.em
                self.em = None
                if type(x) is str or x is None:
                    self.mw = x if x is not None else MEM
                    frozen = False
                elif x.cost > 1:
                    self.mem_slot = x
                    self.mem_left = x.cost - 1
                    self.mw = MEM
                else:
                    self._pc_now = x.pc
                    self._mem(x, c)
                    self.mw = x
                    frozen = False
            else:
                self.mem_left -= 1
                if self.mem_left > 0:
                    self.mw = MEM
                else:
                    x = self.mem_slot
                    self._pc_now = x.pc
                    self._mem(x, c)
                    self.mw = x
                    self.mem_slot = None
                    frozen = False
            if not frozen:
                self._front(c)
        # record
        for u in self.units:
            if u.busy:
                flags |= _ENGINE_BIT[u.kind]
        if self.dma.busy:
            flags |= F_DMA
        if stall is not None:
            flags |= _CAUSE_CODE[stall] << 5
        self.trace.flags.append(flags)
        if self.trace.stages is not None:
            self.trace.stages.append(self._stage_labels(wb))
        self.cycle = c
        # tick
        if self.dma.busy:
            self.dma.tick()
        for u in self.units:
            if u.busy:
                u.tick()
        if self.halted:
            self.trace.complete = True

    def _stage_labels(self, wb):
        occupant = self.mem_slot if self.mem_slot is not None else self.em
        return (_label(self.fd), _label(self.de), _label(occupant), _label(self.mw),
                _label(wb) if type(wb) is not str else "-")

    def _awaited(self, i):
        """Unit an instruction must hold in ID for, if any."""
        op = i.op
        if op is Op.CRYPTO_WAIT:
            return self.units[i.imm]
        if op is Op.CRYPTO_DISPATCH:
            return self.engines.for_mode(i.mode)
        if op is Op.HARAKA_RC:
            return self.units[Engine.AES_HARAKA]
        if op is Op.DMA_WAIT:
            return self.dma
        return None

    def _front(self, c):
        # EXE
        x = self.de
        redirect = None
        if type(x) is str:
            self.em = x
        else:
            self._pc_now = x.pc
            redirect = self._ex(x, c)
            self.em = x
        # ID
        if redirect is not None:
            self.de = FLUSH
            self.fd = FLUSH
            self.pc = redirect
            self.fetch_stopped = False
            self.fetch_hold = self.timing.branch_flush - 2
            return
        y = self.fd
        if type(y) is str:
            self.de = y
        else:
            i = y.instr
            self._pc_now = y.pc
            if i is None:
                raise self._trap(f"fetch from pc {y.pc} outside the {len(self.code)}-instruction program")
            if type(i) is _Illegal:
                raise self._trap(i.message, IllegalInstructionError(i.message, i.word))
            op = i.op
            unit = self._awaited(i)
            if unit is not None:
                if unit.busy and unit.cycles_remaining > 1:
                    self.de = WAIT
                    return
            else:
                ready = self.ready
                for r in i.sources():
                    if r and ready[r] > c + 1:
                        self.de = LOADUSE
                        return
            self.de = y
            if op is Op.HALT:
                self.fetch_stopped = True
        # IF (only when ID consumed its latch)
        if self.fetch_stopped:
            self.fd = DRAIN
        elif self.fetch_hold > 0:
            self.fetch_hold -= 1
            self.fd = FLUSH
        elif self.pc < len(self.code) and self.pc >= 0:
            self.fd = _Slot(self.code[self.pc], self.pc)
            self.pc += 1
        else:
            self.fd = _Slot(None, self.pc)

    # ---------------------------------------------------------- event skipping

    def _skippable(self):
        """Cycles that can be fast-forwarded without changing any observable."""
        if self.halted:
            return 0
        if self.mem_slot is not None:
            if self.mem_left >= 2 and self.mw == MEM:
                return self.mem_left - 1
            return 0
        if not (self.de == WAIT and self.em == WAIT and self.mw == WAIT):
            return 0
        y = self.fd
        if type(y) is str or y.instr is None or type(y.instr) is _Illegal:
            return 0
        unit = self._awaited(y.instr)
        if unit is None or not unit.busy:
            return 0
        return max(unit.cycles_remaining - 1, 0)

    def _skip(self, n):
        cause = MEM if self.mem_slot is not None else WAIT
        base = _CAUSE_CODE[cause] << 5
        # per-unit remaining busy cycles decide where flags change
        spans = [(u.cycles_remaining, _ENGINE_BIT[u.kind]) for u in self.units if u.busy]
        if self.dma.busy:
            spans.append((self.dma.remaining_cycles, F_DMA))
        cuts = sorted({0, n} | {r for r, _ in spans if r < n})
        for a, b in zip(cuts, cuts[1:]):
            v = base
            for r, bit in spans:
                if r > a:
                    v |= bit
            self.trace.flags.extend(bytes([v]) * (b - a))
        if self.trace.stages is not None:
            label = self._stage_labels(cause)
            self.trace.stages.extend([label] * n)
        self.cycle += n
        if self.mem_slot is not None:
            self.mem_left -= n
        if self.dma.busy:
            self.dma.advance(min(n, self.dma.remaining_cycles))
        self.engines.advance(n)

    def run(self, limit=None, skip=True):
        """Run until halt. Raises RunawayError (with the partial trace) at ``limit``."""
        limit = self.timing.cycle_limit if limit is None else limit
        if limit <= 0:
            raise ValueError("cycle limit must be positive")
        while not self.halted:
            if self.cycle >= limit:
                err = RunawayError(f"no halt within {limit} cycles", self.state, self.trace)
                raise err
            if skip:
                n = min(self._skippable(), limit - self.cycle)
                if n > 0:
                    self._skip(n)
                    continue
            self.step()
        return self.state, self.trace


def step(sim):
    return sim.step()


def run(program, limit=None, config=None, dm_image=None, host_image=None, detail=False,
        watch=None, skip=True):
    """Simulate ``program``; returns (final state, trace, simulator)."""
    sim = Simulator(program, config, dm_image, host_image, detail, watch)
    state, trace = sim.run(limit, skip)
    return state, trace, sim


# ---------------------------------------------------------------- reference

class ReferenceMachine:
    """Sequential, untimed interpreter with the same architectural semantics.

    Engines complete instantly and DMA commits at once, so waits are no-ops.
    Used for differential testing of the pipeline.
    """

    def __init__(self, program, dm_image=None, host_image=None):
        if not isinstance(program, Program):
            program = Program(list(program))
        self.code = [Simulator._predecode(i) for i in program.instructions]
        self.dm = DataMemory(program.data if dm_image is None else dm_image)
        self.host = list(program.host if host_image is None else host_image)
        self.buffer = InternalBuffer()
        self.regs = [0] * 32
        self.pc = 0
        self.steps = 0
        self.halted = False

    def run(self, limit=10_000_000):
        while not self.halted:
            if self.steps >= limit:
                raise RunawayError(f"no halt within {limit} instructions", None, None)
            self.execute_one()
        return self

    def execute_one(self):
        if not 0 <= self.pc < len(self.code):
            raise TrapError(f"fetch from pc {self.pc} outside the program", self.pc, self.steps)
        i = self.code[self.pc]
        if type(i) is _Illegal:
            raise TrapError(i.message, self.pc, self.steps)
        self.steps += 1
        regs = self.regs
        op = i.op
        nxt = self.pc + 1

        def wr(v):
            if i.rd:
                regs[i.rd] = v & MASK64

        if op in _ALU:
            wr(_ALU[op](regs[i.rs1], regs[i.rs2]))
        elif op in _IMM_ALU:
            wr(_ALU[_IMM_ALU[op]](regs[i.rs1], _imm_operand(i)))
        elif op is Op.LUI:
            wr(i.imm << 12)
        elif op is Op.LD:
            wr(self.dm.read(_signed((regs[i.rs1] + (i.imm & MASK64)) & MASK64)))
        elif op is Op.SD:
            self.dm.write(_signed((regs[i.rs1] + (i.imm & MASK64)) & MASK64), regs[i.rs2])
        elif op in _BRANCH:
            if _BRANCH[op](regs[i.rs1], regs[i.rs2]):
                nxt = self.pc + i.imm
        elif op is Op.JAL:
            wr(self.pc + 1)
            nxt = self.pc + i.imm
        elif op is Op.JALR:
            target = _signed((regs[i.rs1] + (i.imm & MASK64)) & MASK64)
            wr(self.pc + 1)
            nxt = target
        elif op is Op.HALT:
            self.halted = True
        elif op is Op.BUF_LOAD:
            addr = regs[i.rs1] + i.imm
            self.buffer.write_block(i.buf, self.dm.read_block(addr, i.count))
        elif op is Op.BUF_STORE:
            addr = regs[i.rs1] + i.imm
            self.dm.write_block(addr, self.buffer.read_block(i.buf, i.count))
        elif op is Op.CRYPTO_READ:
            wr(self.buffer.read(i.buf))
        elif op is Op.DMA_START:
            h = regs[i.rs1]
            if h + i.count > len(self.host):
                raise OutOfBoundsError("DMA host range outside the host image")
            self.dm.write_block(regs[i.rs2], self.host[h:h + i.count])
        elif op is Op.CRYPTO_DISPATCH:
            for base, words in compute(EngineJob(i.mode, i.buf, i.buf2, i.flag), self.buffer):
                self.buffer.write_block(base, words)
        elif op is Op.HARAKA_RC:
            unit = ExecutionUnit(Engine.AES_HARAKA, self.buffer)
            unit.rc_precompute((i.buf, i.count), (i.buf2, i.count))
            unit._finish()
        self.pc = nxt
