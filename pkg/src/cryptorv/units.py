"""Timing and functional models of the three crypto engines.

Functionally every engine defers to :mod:`cryptorv.primitives`; timing is
``dispatch overhead + mode-switch setup + pipeline fill + rounds`` cycles per
job, independent of the data.

Operand layout in the internal buffer (``S`` = state base, ``M`` = message
base of the dispatch):

============  =====================================  ========================
mode          reads                                  writes at completion
============  =====================================  ========================
SHA-256/SM3   state S[0:4], block M[0:8]             S[0:4]
 dual lane    states S[0:8], blocks M[0:16]          S[0:8]
SHA-512       state S[0:8], block M[0:16]            S[0:8]
Keccak        state S[0:25], block M[0:rate/8]       S[0:25]
 perm flag    state S[0:25] only                     S[0:25]
AES-128       key S[0:2], block M[0:2]               M[0:2]
Haraka        input M[0:4|8], constants RC region    S[0:4]
============  =====================================  ========================

MD and AES/Haraka words hold bytes big-endian (SHA-256/SM3 pack two 32-bit
state words per 64-bit word); Keccak words are little-endian lanes.
"""

from dataclasses import dataclass

from cryptorv.config import TimingConfig
from cryptorv.errors import (
    BufferConflictError, BufferRangeError, EngineBusyError, InvalidModeError, ModeMismatchError,
)
from cryptorv.isa import BUFFER_WORDS, RC_BASE, RC_WORDS
from cryptorv.modes import HARAKA_INPUT, KECCAK_RATE, MD_BLOCK, Algorithm, Engine
from cryptorv.primitives.aes import decrypt_block, encrypt_block
from cryptorv.primitives.haraka import HarakaRcSet, haraka, haraka_rc_derive
from cryptorv.primitives.keccak import keccak_f1600_unrolled
from cryptorv.primitives.md import md_compress

MASK64 = (1 << 64) - 1


# ---------------------------------------------------------------- word packing

def bytes_to_words(data, little=False):
    """Split bytes (length a multiple of 8) into 64-bit words."""
    order = "little" if little else "big"
    if len(data) % 8:
        raise ValueError(f"byte length {len(data)} is not a multiple of 8")
    return [int.from_bytes(data[i:i + 8], order) for i in range(0, len(data), 8)]


def words_to_bytes(words, little=False):
    order = "little" if little else "big"
    return b"".join((w & MASK64).to_bytes(8, order) for w in words)


def md_state_words(mode, state):
    """Chaining state (8 algorithm-width words) as buffer words."""
    if Algorithm(mode) is Algorithm.SHA512:
        return list(state)
    return [(state[2 * i] << 32) | state[2 * i + 1] for i in range(4)]


def md_words_state(mode, words):
    if Algorithm(mode) is Algorithm.SHA512:
        return tuple(words)
    out = []
    for w in words:
        out += [w >> 32, w & 0xFFFFFFFF]
    return tuple(out)


def state_words(mode):
    """Words of the state operand (input and output) for one lane."""
    mode = Algorithm(mode)
    if mode.is_md:
        return 8 if mode is Algorithm.SHA512 else 4
    if mode.is_keccak:
        return 25
    return 2 if mode is Algorithm.AES128 else 4


def block_words(mode):
    """Words of the message operand for one lane."""
    mode = Algorithm(mode)
    if mode.is_md:
        return MD_BLOCK[mode] // 8
    if mode.is_keccak:
        return KECCAK_RATE[mode] // 8
    if mode is Algorithm.AES128:
        return 2
    return HARAKA_INPUT[mode] // 8


def rc_words(mode):
    """Round-constant words a Haraka job reads from the RC region."""
    return {Algorithm.HARAKA256: 40, Algorithm.HARAKA512: 80}.get(Algorithm(mode), 0)


# ---------------------------------------------------------------- jobs

@dataclass(frozen=True)
class EngineJob:
    """One dispatched computation. ``flag`` is dual-lane (SHA-256/SM3),
    decrypt (AES) or permute-only (Keccak)."""

    mode: Algorithm
    state_base: int
    msg_base: int
    flag: int = 0
    rounds: int | None = None

    def __post_init__(self):
        try:
            mode = Algorithm(self.mode)
        except ValueError:
            raise InvalidModeError(f"unknown mode {self.mode!r}") from None
        object.__setattr__(self, "mode", mode)
        if self.rounds is None:
            object.__setattr__(self, "rounds", mode.rounds)
        elif self.rounds != mode.rounds:
            raise InvalidModeError(f"{mode.label} runs {mode.rounds} iterations, not {self.rounds}")
        if self.flag not in (0, 1):
            raise InvalidModeError("flag must be 0 or 1")
        if self.flag and mode in (Algorithm.SHA512, Algorithm.HARAKA256, Algorithm.HARAKA512):
            what = "dual lane" if mode is Algorithm.SHA512 else "a dispatch flag"
            raise InvalidModeError(f"{mode.label} does not support {what}")
        for base, count in self.read_ranges() + self.write_ranges():
            if base < 0 or base + count > BUFFER_WORDS:
                raise BufferRangeError(
                    f"{mode.label} operand [{base}, {base + count}) outside the "
                    f"{BUFFER_WORDS}-word buffer")

    @property
    def dual_lane(self):
        return bool(self.flag) and self.mode in (Algorithm.SHA256, Algorithm.SM3)

    @property
    def decrypt(self):
        return bool(self.flag) and self.mode is Algorithm.AES128

    @property
    def permute_only(self):
        return bool(self.flag) and self.mode.is_keccak

    @property
    def lanes(self):
        return 2 if self.dual_lane else 1

    def state_range(self):
        return (self.state_base, state_words(self.mode) * self.lanes)

    def msg_range(self):
        if self.permute_only:
            return (self.msg_base, 0)
        return (self.msg_base, block_words(self.mode) * self.lanes)

    def read_ranges(self):
        mode = self.mode
        if mode in HARAKA_INPUT:
            return [self.msg_range(), (RC_BASE, rc_words(mode))]
        return [r for r in (self.state_range(), self.msg_range()) if r[1]]

    def write_ranges(self):
        if self.mode is Algorithm.AES128:
            return [self.msg_range()]
        return [self.state_range()]


@dataclass(frozen=True)
class EngineStatus:
    busy: bool
    cycles_remaining: int
    result_ready: bool


def compute(job, buffer):
    """Functional result of ``job``: list of (base, words) writes."""
    mode = job.mode
    read = buffer.read_block
    s_base, s_len = job.state_range()
    m_base, m_len = job.msg_range()
    if mode.is_md:
        sw, bw = state_words(mode), block_words(mode)
        out = []
        for lane in range(job.lanes):
            state = md_words_state(mode, read(s_base + lane * sw, sw))
            block = words_to_bytes(read(m_base + lane * bw, bw))
            out += md_state_words(mode, md_compress(mode, state, block))
        return [(s_base, out)]
    if mode.is_keccak:
        lanes = read(s_base, 25)
        if not job.permute_only:
            for i, w in enumerate(read(m_base, m_len)):
                lanes[i] ^= w
        return [(s_base, list(keccak_f1600_unrolled(lanes)))]
    if mode is Algorithm.AES128:
        key = words_to_bytes(read(s_base, 2))
        block = words_to_bytes(read(m_base, 2))
        fn = decrypt_block if job.decrypt else encrypt_block
        return [(m_base, bytes_to_words(fn(key, block)))]
    rc = HarakaRcSet.from_bytes(words_to_bytes(read(RC_BASE, rc_words(mode))))
    digest = haraka(mode, words_to_bytes(read(m_base, m_len)), rc)
    return [(s_base, bytes_to_words(digest))]


def _overlap(a, b):
    return a[1] > 0 and b[1] > 0 and a[0] < b[0] + b[1] and b[0] < a[0] + a[1]


# ---------------------------------------------------------------- engines

_MODES = {
    Engine.MD: {Algorithm.SHA256, Algorithm.SHA512, Algorithm.SM3},
    Engine.AES_HARAKA: {Algorithm.AES128, Algorithm.HARAKA256, Algorithm.HARAKA512},
    Engine.KECCAK: {Algorithm.SHA3_256, Algorithm.SHAKE128, Algorithm.SHAKE256},
}


class ExecutionUnit:
    """One engine. Inputs are captured at dispatch; outputs land at completion."""

    def __init__(self, kind, buffer, timing=None):
        self.kind = Engine(kind)
        self.buffer = buffer
        self.timing = timing or TimingConfig()
        self.busy = False
        self.cycles_remaining = 0
        self.result_ready = False
        self.job = None
        self.last_mode = None
        self.busy_cycles = 0
        self.dispatches = 0
        self._pending = []
        self._reads = []
        self._writes = []

    @property
    def label(self):
        return self.kind.label

    def status(self):
        return EngineStatus(self.busy, self.cycles_remaining, self.result_ready)

    def accepts(self, mode):
        return Algorithm(mode) in _MODES[self.kind]

    def _start(self, cycles, writes, reads):
        self.busy = True
        self.result_ready = False
        self.cycles_remaining = cycles
        self._pending = writes
        self._reads = reads
        self._writes = [(base, len(words)) for base, words in writes]
        self.dispatches += 1

    def dispatch(self, job):
        if self.busy:
            raise EngineBusyError(f"{self.label} is busy ({self.cycles_remaining} cycles left)")
        if not self.accepts(job.mode):
            raise ModeMismatchError(f"{job.mode.label} cannot run on {self.label}")
        switching = job.mode is not self.last_mode
        cycles = self.timing.engine_cycles(job.mode, switching)
        self.job = job
        self.last_mode = job.mode
        self._start(cycles, compute(job, self.buffer), job.read_ranges())
        return self.status()

    def rc_precompute(self, sk_range, pk_range):
        """Derive seeded Haraka constants into the RC region."""
        if self.kind is not Engine.AES_HARAKA:
            raise ModeMismatchError(f"round-constant precompute needs AES_HARAKA_UNIT, not {self.label}")
        if self.busy:
            raise EngineBusyError(f"{self.label} is busy ({self.cycles_remaining} cycles left)")
        for base, count in (sk_range, pk_range):
            if count < 1 or base < 0 or base + count > BUFFER_WORDS:
                raise BufferRangeError(f"seed range [{base}, {base + count}) is not a valid buffer range")
        sk = words_to_bytes(self.buffer.read_block(*sk_range))
        pk = words_to_bytes(self.buffer.read_block(*pk_range))
        rc = haraka_rc_derive(sk, pk)
        self.job = None
        self._start(self.timing.rc_precompute_cycles,
                    [(RC_BASE, bytes_to_words(rc.to_bytes()))], [sk_range, pk_range])
        return self.status()

    def _finish(self):
        for base, words in self._pending:
            self.buffer.write_block(base, words)
        self._pending = []
        self._reads = []
        self._writes = []
        self.busy = False
        self.result_ready = True

    def tick(self):
        if self.busy:
            self.busy_cycles += 1
            self.cycles_remaining -= 1
            if self.cycles_remaining == 0:
                self._finish()
        return self.status()

    def advance(self, n):
        """``n`` ticks at once; stops counting busy time at completion."""
        if not self.busy or n <= 0:
            return self.status()
        step = min(n, self.cycles_remaining)
        self.busy_cycles += step
        self.cycles_remaining -= step
        if self.cycles_remaining == 0:
            self._finish()
        return self.status()

    def conflict(self, rng, write):
        """True when a core access to ``rng`` would race this engine's job."""
        if not self.busy:
            return False
        if any(_overlap(rng, w) for w in self._writes):
            return True
        return write and any(_overlap(rng, r) for r in self._reads)


class EngineSet:
    """The three engines sharing one internal buffer."""

    def __init__(self, buffer, timing=None):
        timing = timing or TimingConfig()
        self.units = {e: ExecutionUnit(e, buffer, timing) for e in Engine}

    def __getitem__(self, engine):
        return self.units[Engine(engine)]

    def __iter__(self):
        return iter(self.units.values())

    def for_mode(self, mode):
        return self.units[Algorithm(mode).engine]

    def busy_flags(self):
        u = self.units
        return (u[Engine.MD].busy, u[Engine.AES_HARAKA].busy, u[Engine.KECCAK].busy)

    def any_busy(self):
        return any(u.busy for u in self.units.values())

    def check_access(self, base, count, write, what="buffer access"):
        rng = (base, count)
        for unit in self.units.values():
            if unit.conflict(rng, write):
                raise BufferConflictError(
                    f"{what} to buffer [{base}, {base + count}) races the busy {unit.label}")

    def tick(self):
        for unit in self.units.values():
            if unit.busy:
                unit.tick()

    def next_event(self):
        """Cycles until the next engine completion (None when all idle)."""
        pending = [u.cycles_remaining for u in self.units.values() if u.busy]
        return min(pending) if pending else None

    def advance(self, n):
        for unit in self.units.values():
            unit.advance(n)


# module-level forms of the engine operations

def dispatch(unit, job):
    return unit.dispatch(job)


def dual_lane_dispatch(unit, job):
    if not job.dual_lane:
        raise InvalidModeError(f"dual-lane dispatch needs SHA-256 or SM3 with the dual flag, got {job.mode.label}")
    return unit.dispatch(job)


def haraka_rc_precompute(unit, sk_range, pk_range):
    return unit.rc_precompute(sk_range, pk_range)


def tick(unit):
    return unit.tick()
