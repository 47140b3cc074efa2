"""Instruction set of the simulated core.

A small RV64I-style base subset (standard RISC-V bit layouts) plus custom
data-movement and crypto instructions in the four reserved custom opcode
slots. Bit layouts are documented in ``docs/isa.md``.

Addressing deviates from RISC-V in two places: program counters and branch
targets are instruction indices (branch immediates are still encoded as
byte offsets, i.e. index * 4), and LD/SD addresses are 64-bit word indices
into data memory.
"""

import enum
import re
import struct
from dataclasses import dataclass, field

from cryptorv.errors import (
    AssemblyError, EncodingError, IllegalInstructionError, ProgramFormatError,
)
from cryptorv.modes import Algorithm, Engine

NUM_REGS = 32
BUFFER_WORDS = 128
DM_WORDS = 1024
MAX_BULK = 128
MAX_DMA = 1024
MAX_INSTRUCTIONS = 4096
RC_BASE = 48            # fixed buffer region receiving precomputed Haraka constants
RC_WORDS = 80

OPC_OP = 0x33
OPC_OP_IMM = 0x13
OPC_LOAD = 0x03
OPC_STORE = 0x23
OPC_BRANCH = 0x63
OPC_JAL = 0x6F
OPC_JALR = 0x67
OPC_LUI = 0x37
OPC_SYSTEM = 0x73
OPC_CUSTOM0 = 0x0B
OPC_CUSTOM1 = 0x2B
OPC_CUSTOM2 = 0x5B
OPC_CUSTOM3 = 0x7B

HALT_WORD = 0x00000073


class Op(enum.Enum):
    ADD = "add"
    SUB = "sub"
    SLL = "sll"
    SLT = "slt"
    SLTU = "sltu"
    XOR = "xor"
    SRL = "srl"
    SRA = "sra"
    OR = "or"
    AND = "and"
    ADDI = "addi"
    SLTI = "slti"
    SLTIU = "sltiu"
    XORI = "xori"
    ORI = "ori"
    ANDI = "andi"
    SLLI = "slli"
    SRLI = "srli"
    SRAI = "srai"
    LUI = "lui"
    LD = "ld"
    SD = "sd"
    BEQ = "beq"
    BNE = "bne"
    BLT = "blt"
    BGE = "bge"
    BLTU = "bltu"
    BGEU = "bgeu"
    JAL = "jal"
    JALR = "jalr"
    HALT = "halt"
    BUF_LOAD = "buf_load"
    BUF_STORE = "buf_store"
    DMA_START = "dma_start"
    DMA_WAIT = "dma_wait"
    CRYPTO_DISPATCH = "crypto_dispatch"
    CRYPTO_WAIT = "crypto_wait"
    CRYPTO_READ = "crypto_read"
    HARAKA_RC = "haraka_rc"


R_OPS = {  # op: (funct3, funct7)
    Op.ADD: (0, 0x00), Op.SUB: (0, 0x20), Op.SLL: (1, 0), Op.SLT: (2, 0),
    Op.SLTU: (3, 0), Op.XOR: (4, 0), Op.SRL: (5, 0), Op.SRA: (5, 0x20),
    Op.OR: (6, 0), Op.AND: (7, 0),
}
I_OPS = {Op.ADDI: 0, Op.SLTI: 2, Op.SLTIU: 3, Op.XORI: 4, Op.ORI: 6, Op.ANDI: 7}
SHIFT_OPS = {Op.SLLI: (1, 0x00), Op.SRLI: (5, 0x00), Op.SRAI: (5, 0x10)}
B_OPS = {Op.BEQ: 0, Op.BNE: 1, Op.BLT: 4, Op.BGE: 5, Op.BLTU: 6, Op.BGEU: 7}

BRANCHES = frozenset(B_OPS)
ALU_OPS = frozenset(R_OPS) | frozenset(I_OPS) | frozenset(SHIFT_OPS) | {Op.LUI}
CUSTOM_OPS = frozenset({Op.BUF_LOAD, Op.BUF_STORE, Op.DMA_START, Op.DMA_WAIT,
                        Op.CRYPTO_DISPATCH, Op.CRYPTO_WAIT, Op.CRYPTO_READ, Op.HARAKA_RC})

# the flag bit of CRYPTO_DISPATCH means something different per engine
FLAG_NAMES = {
    Algorithm.SHA256: "dual", Algorithm.SM3: "dual",
    Algorithm.AES128: "dec",
    Algorithm.SHA3_256: "perm", Algorithm.SHAKE128: "perm", Algorithm.SHAKE256: "perm",
}

_R_DECODE = {v: k for k, v in R_OPS.items()}
_I_DECODE = {v: k for k, v in I_OPS.items()}
_SHIFT_DECODE = {v: k for k, v in SHIFT_OPS.items()}
_B_DECODE = {v: k for k, v in B_OPS.items()}


@dataclass(frozen=True)
class Instruction:
    """One decoded instruction.

    Field use per kind:

    * ALU/load/store/branch/jump: ``rd``, ``rs1``, ``rs2``, ``imm`` as in RISC-V;
      branch and JAL immediates are offsets in instructions.
    * BUF_LOAD/BUF_STORE: DM address ``regs[rs1] + imm`` (imm 0..63), buffer
      index ``buf``, ``count`` words (1..128).
    * DMA_START: host address ``regs[rs1]``, DM address ``regs[rs2]``, ``count`` words.
    * CRYPTO_DISPATCH: ``mode``, ``flag``, state base ``buf``, message base ``buf2``.
    * CRYPTO_WAIT: engine number in ``imm``.
    * CRYPTO_READ: ``rd`` <- buffer[``buf``].
    * HARAKA_RC: seed key at ``buf``, public key at ``buf2``, ``count`` words each.
    """

    op: Op
    rd: int = 0
    rs1: int = 0
    rs2: int = 0
    imm: int = 0
    mode: Algorithm | None = None
    flag: int = 0
    buf: int = 0
    buf2: int = 0
    count: int = 0

    def __str__(self):
        return disassemble_one(self)

    @property
    def engine(self):
        if self.op is Op.CRYPTO_WAIT:
            return Engine(self.imm)
        if self.op is Op.CRYPTO_DISPATCH:
            return self.mode.engine
        if self.op is Op.HARAKA_RC:
            return Engine.AES_HARAKA
        return None

    def sources(self):
        """Registers read by this instruction (for hazard detection)."""
        op = self.op
        if op in R_OPS or op in BRANCHES or op is Op.SD or op is Op.DMA_START:
            return (self.rs1, self.rs2)
        if (op in I_OPS or op in SHIFT_OPS or op is Op.LD or op is Op.JALR
                or op is Op.BUF_LOAD or op is Op.BUF_STORE):
            return (self.rs1,)
        return ()

    def dest(self):
        """Register written, or 0 when none."""
        if self.op in ALU_OPS or self.op in (Op.LD, Op.JAL, Op.JALR, Op.CRYPTO_READ):
            return self.rd
        return 0


# ---------------------------------------------------------------- validation

def _reg(name, value):
    if not 0 <= value < NUM_REGS:
        raise EncodingError(f"{name} must be a register index in [0, 32), got {value}")


def _range(name, value, lo, hi):
    if not lo <= value <= hi:
        raise EncodingError(f"{name} must be in [{lo}, {hi}], got {value}")


def _zero(instr, *names):
    for name in names:
        if getattr(instr, name):
            raise EncodingError(f"{instr.op.value}: field {name} is unused and must be 0")


_ALL = ("rd", "rs1", "rs2", "imm", "flag", "buf", "buf2", "count")


def _unused(instr, used):
    _zero(instr, *(f for f in _ALL if f not in used))
    if instr.op is not Op.CRYPTO_DISPATCH and instr.mode is not None:
        raise EncodingError(f"{instr.op.value}: mode is only valid on crypto_dispatch")


def validate(instr):
    """Raise EncodingError unless ``instr`` satisfies the type invariants."""
    op = instr.op
    if not isinstance(op, Op):
        raise EncodingError(f"unknown op {op!r}")
    if op in R_OPS:
        _unused(instr, ("rd", "rs1", "rs2"))
        _reg("rd", instr.rd), _reg("rs1", instr.rs1), _reg("rs2", instr.rs2)
    elif op in I_OPS or op is Op.LD or op is Op.JALR:
        _unused(instr, ("rd", "rs1", "imm"))
        _reg("rd", instr.rd), _reg("rs1", instr.rs1)
        _range("imm", instr.imm, -2048, 2047)
    elif op in SHIFT_OPS:
        _unused(instr, ("rd", "rs1", "imm"))
        _reg("rd", instr.rd), _reg("rs1", instr.rs1)
        _range("shift amount", instr.imm, 0, 63)
    elif op is Op.LUI:
        _unused(instr, ("rd", "imm"))
        _reg("rd", instr.rd)
        _range("imm", instr.imm, -(1 << 19), (1 << 19) - 1)
    elif op is Op.SD:
        _unused(instr, ("rs1", "rs2", "imm"))
        _reg("rs1", instr.rs1), _reg("rs2", instr.rs2)
        _range("imm", instr.imm, -2048, 2047)
    elif op in BRANCHES:
        _unused(instr, ("rs1", "rs2", "imm"))
        _reg("rs1", instr.rs1), _reg("rs2", instr.rs2)
        _range("branch offset", instr.imm, -1024, 1023)
    elif op is Op.JAL:
        _unused(instr, ("rd", "imm"))
        _reg("rd", instr.rd)
        _range("jump offset", instr.imm, -(1 << 18), (1 << 18) - 1)
    elif op is Op.HALT or op is Op.DMA_WAIT:
        _unused(instr, ())
    elif op in (Op.BUF_LOAD, Op.BUF_STORE):
        _unused(instr, ("rs1", "imm", "buf", "count"))
        _reg("rs1", instr.rs1)
        _range("DM offset", instr.imm, 0, 63)
        _range("buffer index", instr.buf, 0, BUFFER_WORDS - 1)
        if not 1 <= instr.count <= MAX_BULK:
            raise EncodingError(
                f"bulk transfer count must be 1..{MAX_BULK} words, got {instr.count}")
    elif op is Op.DMA_START:
        _unused(instr, ("rs1", "rs2", "count"))
        _reg("rs1", instr.rs1), _reg("rs2", instr.rs2)
        _range("DMA word count", instr.count, 0, MAX_DMA)
    elif op is Op.CRYPTO_WAIT:
        _unused(instr, ("imm",))
        _range("engine", instr.imm, 0, 2)
    elif op is Op.CRYPTO_READ:
        _unused(instr, ("rd", "buf"))
        _reg("rd", instr.rd)
        _range("buffer index", instr.buf, 0, BUFFER_WORDS - 1)
    elif op is Op.CRYPTO_DISPATCH:
        _unused(instr, ("flag", "buf", "buf2"))
        if not isinstance(instr.mode, Algorithm):
            raise EncodingError(f"crypto_dispatch needs one of the nine modes, got {instr.mode!r}")
        _range("flag", instr.flag, 0, 1)
        if instr.flag and instr.mode not in FLAG_NAMES:
            raise EncodingError(f"{instr.mode.label} has no dispatch flag")
        _range("state buffer index", instr.buf, 0, BUFFER_WORDS - 1)
        _range("message buffer index", instr.buf2, 0, BUFFER_WORDS - 1)
    elif op is Op.HARAKA_RC:
        _unused(instr, ("buf", "buf2", "count"))
        _range("seed buffer index", instr.buf, 0, BUFFER_WORDS - 1)
        _range("pk buffer index", instr.buf2, 0, BUFFER_WORDS - 1)
        _range("seed words", instr.count, 1, 4)
    return instr


# ---------------------------------------------------------------- encode

def _bits(value, width):
    return value & ((1 << width) - 1)


def _sext(value, width):
    value &= (1 << width) - 1
    return value - (1 << width) if value >> (width - 1) else value


def encode(instr):
    """32-bit encoding of a valid instruction."""
    validate(instr)
    op = instr.op
    rd, rs1, rs2, imm = instr.rd, instr.rs1, instr.rs2, instr.imm
    if op in R_OPS:
        f3, f7 = R_OPS[op]
        return (f7 << 25) | (rs2 << 20) | (rs1 << 15) | (f3 << 12) | (rd << 7) | OPC_OP
    if op in I_OPS:
        return (_bits(imm, 12) << 20) | (rs1 << 15) | (I_OPS[op] << 12) | (rd << 7) | OPC_OP_IMM
    if op in SHIFT_OPS:
        f3, hi = SHIFT_OPS[op]
        return (hi << 26) | (imm << 20) | (rs1 << 15) | (f3 << 12) | (rd << 7) | OPC_OP_IMM
    if op is Op.LUI:
        return (_bits(imm, 20) << 12) | (rd << 7) | OPC_LUI
    if op is Op.LD:
        return (_bits(imm, 12) << 20) | (rs1 << 15) | (3 << 12) | (rd << 7) | OPC_LOAD
    if op is Op.JALR:
        return (_bits(imm, 12) << 20) | (rs1 << 15) | (rd << 7) | OPC_JALR
    if op is Op.SD:
        u = _bits(imm, 12)
        return ((u >> 5) << 25) | (rs2 << 20) | (rs1 << 15) | (3 << 12) | ((u & 31) << 7) | OPC_STORE
    if op in BRANCHES:
        u = _bits(imm * 4, 13)
        return (((u >> 12) & 1) << 31 | ((u >> 5) & 0x3F) << 25 | rs2 << 20 | rs1 << 15
                | B_OPS[op] << 12 | ((u >> 1) & 0xF) << 8 | ((u >> 11) & 1) << 7 | OPC_BRANCH)
    if op is Op.JAL:
        u = _bits(imm * 4, 21)
        return (((u >> 20) & 1) << 31 | ((u >> 1) & 0x3FF) << 21 | ((u >> 11) & 1) << 20
                | ((u >> 12) & 0xFF) << 12 | rd << 7 | OPC_JAL)
    if op is Op.HALT:
        return HALT_WORD
    if op in (Op.BUF_LOAD, Op.BUF_STORE):
        opc = OPC_CUSTOM0 if op is Op.BUF_LOAD else OPC_CUSTOM1
        return (imm << 26) | ((instr.count - 1) << 19) | (instr.buf << 12) | (rs1 << 7) | opc
    if op is Op.DMA_START:
        n = instr.count
        return ((n >> 5) << 25) | (rs2 << 20) | (rs1 << 15) | (0 << 12) | ((n & 31) << 7) | OPC_CUSTOM2
    if op is Op.DMA_WAIT:
        return (1 << 12) | OPC_CUSTOM2
    if op is Op.CRYPTO_WAIT:
        return (imm << 15) | (2 << 12) | OPC_CUSTOM2
    if op is Op.CRYPTO_READ:
        return (instr.buf << 20) | (3 << 12) | (rd << 7) | OPC_CUSTOM2
    if op is Op.CRYPTO_DISPATCH:
        return (instr.buf2 << 22) | (instr.buf << 15) | (instr.flag << 11) | (int(instr.mode) << 7) | OPC_CUSTOM3
    if op is Op.HARAKA_RC:
        return (instr.buf2 << 22) | (instr.buf << 15) | (1 << 12) | ((instr.count - 1) << 7) | OPC_CUSTOM3
    raise EncodingError(f"cannot encode {op}")


# ---------------------------------------------------------------- decode

def _illegal(word, why):
    raise IllegalInstructionError(f"illegal instruction 0x{word:08x}: {why}", word)


def decode(word):
    """Inverse of :func:`encode`; non-canonical words raise IllegalInstructionError."""
    if not 0 <= word <= 0xFFFFFFFF:
        _illegal(word & 0xFFFFFFFF, "not a 32-bit word")
    opc = word & 0x7F
    rd = (word >> 7) & 31
    f3 = (word >> 12) & 7
    rs1 = (word >> 15) & 31
    rs2 = (word >> 20) & 31
    f7 = word >> 25
    if opc == OPC_OP:
        op = _R_DECODE.get((f3, f7))
        if op is None:
            _illegal(word, "unknown ALU function")
        return Instruction(op, rd=rd, rs1=rs1, rs2=rs2)
    if opc == OPC_OP_IMM:
        if f3 in (1, 5):
            op = _SHIFT_DECODE.get((f3, word >> 26))
            if op is None:
                _illegal(word, "bad shift encoding")
            return Instruction(op, rd=rd, rs1=rs1, imm=(word >> 20) & 63)
        return Instruction(_I_DECODE[f3], rd=rd, rs1=rs1, imm=_sext(word >> 20, 12))
    if opc == OPC_LUI:
        return Instruction(Op.LUI, rd=rd, imm=_sext(word >> 12, 20))
    if opc == OPC_LOAD:
        if f3 != 3:
            _illegal(word, "only 64-bit loads are supported")
        return Instruction(Op.LD, rd=rd, rs1=rs1, imm=_sext(word >> 20, 12))
    if opc == OPC_JALR:
        if f3 != 0:
            _illegal(word, "bad jalr funct3")
        return Instruction(Op.JALR, rd=rd, rs1=rs1, imm=_sext(word >> 20, 12))
    if opc == OPC_STORE:
        if f3 != 3:
            _illegal(word, "only 64-bit stores are supported")
        return Instruction(Op.SD, rs1=rs1, rs2=rs2, imm=_sext((f7 << 5) | rd, 12))
    if opc == OPC_BRANCH:
        op = _B_DECODE.get(f3)
        if op is None:
            _illegal(word, "unknown branch condition")
        u = (((word >> 31) & 1) << 12 | ((word >> 7) & 1) << 11
             | ((word >> 25) & 0x3F) << 5 | ((word >> 8) & 0xF) << 1)
        off = _sext(u, 13)
        if off % 4:
            _illegal(word, "branch offset not instruction aligned")
        return Instruction(op, rs1=rs1, rs2=rs2, imm=off // 4)
    if opc == OPC_JAL:
        u = (((word >> 31) & 1) << 20 | ((word >> 12) & 0xFF) << 12
             | ((word >> 20) & 1) << 11 | ((word >> 21) & 0x3FF) << 1)
        off = _sext(u, 21)
        if off % 4:
            _illegal(word, "jump offset not instruction aligned")
        return Instruction(Op.JAL, rd=rd, imm=off // 4)
    if opc == OPC_SYSTEM:
        if word != HALT_WORD:
            _illegal(word, "only ecall (halt) is supported in the system space")
        return Instruction(Op.HALT)
    if opc in (OPC_CUSTOM0, OPC_CUSTOM1):
        op = Op.BUF_LOAD if opc == OPC_CUSTOM0 else Op.BUF_STORE
        return Instruction(op, rs1=rd, buf=(word >> 12) & 0x7F,
                           count=((word >> 19) & 0x7F) + 1, imm=word >> 26)
    if opc == OPC_CUSTOM2:
        if f3 == 0:
            count = (f7 << 5) | rd
            if count > MAX_DMA:
                _illegal(word, "DMA count exceeds data memory")
            return Instruction(Op.DMA_START, rs1=rs1, rs2=rs2, count=count)
        if f3 == 1:
            if word != (1 << 12) | OPC_CUSTOM2:
                _illegal(word, "reserved bits set in dma_wait")
            return Instruction(Op.DMA_WAIT)
        if f3 == 2:
            eng = word >> 15
            if rd or eng > 2:
                _illegal(word, "bad crypto_wait engine")
            return Instruction(Op.CRYPTO_WAIT, imm=eng)
        if f3 == 3:
            if rs1 or word >> 27:
                _illegal(word, "reserved bits set in crypto_read")
            return Instruction(Op.CRYPTO_READ, rd=rd, buf=(word >> 20) & 0x7F)
        _illegal(word, "unknown custom-2 function")
    if opc == OPC_CUSTOM3:
        if word >> 29:
            _illegal(word, "reserved bits set in custom-3")
        b1 = (word >> 15) & 0x7F
        b2 = (word >> 22) & 0x7F
        if f3 == 0:
            try:
                mode = Algorithm((word >> 7) & 0xF)
            except ValueError:
                _illegal(word, "unknown crypto mode tag")
            flag = (word >> 11) & 1
            if flag and mode not in FLAG_NAMES:
                _illegal(word, f"{mode.label} has no dispatch flag")
            return Instruction(Op.CRYPTO_DISPATCH, mode=mode, flag=flag, buf=b1, buf2=b2)
        if f3 == 1:
            if (word >> 9) & 7:
                _illegal(word, "reserved bits set in haraka_rc")
            return Instruction(Op.HARAKA_RC, buf=b1, buf2=b2, count=((word >> 7) & 3) + 1)
        _illegal(word, "unknown custom-3 function")
    _illegal(word, f"unknown opcode 0x{opc:02x}")


# ---------------------------------------------------------------- programs

@dataclass
class Program:
    """Instructions plus the initial data-memory and host (DDR) images."""

    instructions: list
    data: list = field(default_factory=list)
    host: list = field(default_factory=list)
    labels: dict = field(default_factory=dict)
    max_instructions: int = MAX_INSTRUCTIONS

    def __post_init__(self):
        if len(self.instructions) > self.max_instructions:
            raise ProgramFormatError(
                f"program has {len(self.instructions)} instructions; "
                f"instruction memory holds {self.max_instructions}")
        if len(self.data) > DM_WORDS:
            raise ProgramFormatError(f"DM image exceeds {DM_WORDS} words")

    def __len__(self):
        return len(self.instructions)

    def words(self):
        return [encode(i) for i in self.instructions]

    def to_bytes(self):
        out = bytearray(b"CRV1")
        out += struct.pack("<I", len(self.instructions))
        out += struct.pack(f"<{len(self.instructions)}I", *self.words())
        if self.data or self.host:
            out += struct.pack("<I", len(self.data))
            out += struct.pack(f"<{len(self.data)}Q", *self.data)
        if self.host:
            out += struct.pack("<I", len(self.host))
            out += struct.pack(f"<{len(self.host)}Q", *self.host)
        return bytes(out)

    @classmethod
    def from_bytes(cls, blob, max_instructions=MAX_INSTRUCTIONS):
        if blob[:4] != b"CRV1":
            raise ProgramFormatError("missing CRV1 magic")
        pos = 4

        def take(fmt):
            nonlocal pos
            size = struct.calcsize(fmt)
            if pos + size > len(blob):
                raise ProgramFormatError("truncated program image")
            vals = struct.unpack_from(fmt, blob, pos)
            pos += size
            return vals

        (n,) = take("<I")
        instrs = [decode(w) for w in take(f"<{n}I")]
        data, host = [], []
        if pos < len(blob):
            (nd,) = take("<I")
            data = list(take(f"<{nd}Q"))
        if pos < len(blob):
            (nh,) = take("<I")
            host = list(take(f"<{nh}Q"))
        if pos != len(blob):
            raise ProgramFormatError("trailing bytes after program image")
        return cls(instrs, data, host, max_instructions=max_instructions)


# ---------------------------------------------------------------- assembler

_ENGINE_NAMES = {"md": Engine.MD, "aes": Engine.AES_HARAKA, "haraka": Engine.AES_HARAKA,
                 "aes_haraka": Engine.AES_HARAKA, "keccak": Engine.KECCAK}
_ENGINE_TEXT = {Engine.MD: "md", Engine.AES_HARAKA: "aes", Engine.KECCAK: "keccak"}
_MODE_TEXT = {a: a.name.lower() for a in Algorithm}
_MNEMONICS = {op.value: op for op in Op}
_LABEL_RE = re.compile(r"^[A-Za-z_.][\w.]*$")
_DM_RE = re.compile(r"^dm:(-?\w+)(?:\((\w+)\))?$")
_MEM_RE = re.compile(r"^(-?\w+)?\((\w+)\)$")


def _parse_int(text):
    try:
        return int(text, 0)
    except ValueError:
        raise ValueError(f"bad integer {text!r}") from None


def _parse_reg(text):
    t = text.strip().lower()
    if t in ("zero",):
        return 0
    if len(t) >= 2 and t[0] in "rx" and t[1:].isdigit():
        n = int(t[1:])
        if n < NUM_REGS:
            return n
        raise ValueError(f"register {text!r} out of range (r0..r31)")
    raise ValueError(f"expected a register, got {text!r}")


def _parse_buf(text):
    t = text.strip().lower()
    if not (t.startswith("b") and t[1:].isdigit()):
        raise ValueError(f"expected a buffer index like b12, got {text!r}")
    n = int(t[1:])
    if n >= BUFFER_WORDS:
        raise ValueError(f"buffer index {n} out of range (b0..b127)")
    return n


def _split_operands(text):
    return [p.strip() for p in text.split(",")] if text.strip() else []


def _expect(ops, n, mnemonic):
    if len(ops) != n:
        raise ValueError(f"{mnemonic} takes {n} operand(s), got {len(ops)}")


def _li(rd, value):
    """Expand ``li`` into addi, or lui + addi for wide constants."""
    value = _sext(value, 32)
    if -2048 <= value <= 2047:
        return [Instruction(Op.ADDI, rd=rd, rs1=0, imm=value)]
    lo = _sext(value, 12)
    hi = _sext((value - lo) >> 12, 20)
    out = [Instruction(Op.LUI, rd=rd, imm=hi)]
    if lo:
        out.append(Instruction(Op.ADDI, rd=rd, rs1=rd, imm=lo))
    return out


def assemble(source, max_instructions=MAX_INSTRUCTIONS):
    """Assemble text into a :class:`Program`. Errors carry 1-based line numbers."""
    lines = source.splitlines()
    labels = {}
    pending = []        # (lineno, mnemonic, operands, index)
    data, host = {}, {}
    index = 0
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split(";", 1)[0].split("#", 1)[0].strip()
        while line:
            head, sep, rest = line.partition(":")
            if sep and _LABEL_RE.match(head.strip()) and not head.strip().startswith("dm") \
                    and " " not in head.strip():
                name = head.strip()
                if name in labels:
                    raise AssemblyError(f"duplicate label {name!r}", lineno)
                labels[name] = index
                line = rest.strip()
                continue
            break
        if not line:
            continue
        mnemonic, _, rest = line.partition(" ")
        mnemonic = mnemonic.lower()
        ops = _split_operands(rest)
        if mnemonic in (".dm", ".host"):
            target = data if mnemonic == ".dm" else host
            try:
                vals = [_parse_int(v) for v in rest.replace(",", " ").split()]
            except ValueError as exc:
                raise AssemblyError(str(exc), lineno) from None
            if not vals:
                raise AssemblyError(f"{mnemonic} needs an address", lineno)
            base = vals[0]
            for k, v in enumerate(vals[1:]):
                if mnemonic == ".dm" and not 0 <= base + k < DM_WORDS:
                    raise AssemblyError(f"DM address {base + k} out of range", lineno)
                target[base + k] = v & 0xFFFFFFFFFFFFFFFF
            continue
        if mnemonic == "li":
            try:
                _expect(ops, 2, "li")
                size = len(_li(_parse_reg(ops[0]), _parse_int(ops[1])))
            except ValueError as exc:
                raise AssemblyError(str(exc), lineno) from None
        elif mnemonic in _MNEMONICS or mnemonic in ("nop", "j", "mv"):
            size = 1
        else:
            raise AssemblyError(f"unknown mnemonic {mnemonic!r}", lineno)
        pending.append((lineno, mnemonic, ops, index))
        index += size

    instrs = []
    for lineno, mnemonic, ops, at in pending:
        try:
            instrs.extend(_assemble_one(mnemonic, ops, at, labels))
        except AssemblyError:
            raise
        except (ValueError, EncodingError) as exc:
            raise AssemblyError(str(exc), lineno) from None
    if len(instrs) > max_instructions:
        raise AssemblyError(
            f"program has {len(instrs)} instructions; instruction memory holds {max_instructions}")
    dm = [0] * (max(data) + 1) if data else []
    for addr, v in data.items():
        dm[addr] = v
    hm = [0] * (max(host) + 1) if host else []
    for addr, v in host.items():
        hm[addr] = v
    return Program(instrs, dm, hm, labels, max_instructions=max_instructions)


def _target(text, at, labels):
    t = text.strip()
    if t in labels:
        return labels[t] - at
    if re.match(r"^[+-]?\d+$", t):
        return int(t)
    if _LABEL_RE.match(t):
        raise ValueError(f"unresolved label {t!r}")
    raise ValueError(f"bad branch target {t!r}")


def _assemble_one(m, ops, at, labels):
    if m == "nop":
        _expect(ops, 0, m)
        return [validate(Instruction(Op.ADDI))]
    if m == "mv":
        _expect(ops, 2, m)
        return [validate(Instruction(Op.ADDI, rd=_parse_reg(ops[0]), rs1=_parse_reg(ops[1])))]
    if m == "li":
        return [validate(i) for i in _li(_parse_reg(ops[0]), _parse_int(ops[1]))]
    if m == "j":
        _expect(ops, 1, m)
        return [validate(Instruction(Op.JAL, rd=0, imm=_target(ops[0], at, labels)))]
    op = _MNEMONICS[m]
    if op in R_OPS:
        _expect(ops, 3, m)
        instr = Instruction(op, rd=_parse_reg(ops[0]), rs1=_parse_reg(ops[1]), rs2=_parse_reg(ops[2]))
    elif op in I_OPS or op in SHIFT_OPS or op is Op.JALR:
        _expect(ops, 3, m)
        instr = Instruction(op, rd=_parse_reg(ops[0]), rs1=_parse_reg(ops[1]), imm=_parse_int(ops[2]))
    elif op is Op.LUI:
        _expect(ops, 2, m)
        instr = Instruction(op, rd=_parse_reg(ops[0]), imm=_parse_int(ops[1]))
    elif op in (Op.LD, Op.SD):
        _expect(ops, 2, m)
        mm = _MEM_RE.match(ops[1].replace(" ", ""))
        if not mm:
            raise ValueError(f"expected offset(reg), got {ops[1]!r}")
        off = _parse_int(mm.group(1)) if mm.group(1) else 0
        base = _parse_reg(mm.group(2))
        if op is Op.LD:
            instr = Instruction(op, rd=_parse_reg(ops[0]), rs1=base, imm=off)
        else:
            instr = Instruction(op, rs2=_parse_reg(ops[0]), rs1=base, imm=off)
    elif op in BRANCHES:
        _expect(ops, 3, m)
        instr = Instruction(op, rs1=_parse_reg(ops[0]), rs2=_parse_reg(ops[1]),
                            imm=_target(ops[2], at, labels))
    elif op is Op.JAL:
        if len(ops) == 1:
            ops = ["r1"] + ops
        _expect(ops, 2, m)
        instr = Instruction(op, rd=_parse_reg(ops[0]), imm=_target(ops[1], at, labels))
    elif op in (Op.HALT, Op.DMA_WAIT):
        _expect(ops, 0, m)
        instr = Instruction(op)
    elif op in (Op.BUF_LOAD, Op.BUF_STORE):
        _expect(ops, 3, m)
        buf = _parse_buf(ops[0])
        dm = _DM_RE.match(ops[1].replace(" ", "").lower())
        if not dm:
            raise ValueError(f"expected dm:<offset>[(reg)], got {ops[1]!r}")
        off = _parse_int(dm.group(1))
        base = _parse_reg(dm.group(2)) if dm.group(2) else 0
        count = _parse_int(ops[2])
        if not 1 <= count <= MAX_BULK:
            raise ValueError(f"bulk transfer count must be 1..{MAX_BULK} words, got {count}")
        if not 0 <= off <= 63:
            raise ValueError(f"DM offset {off} outside 0..63; put the base in a register")
        instr = Instruction(op, rs1=base, imm=off, buf=buf, count=count)
    elif op is Op.DMA_START:
        _expect(ops, 3, m)
        instr = Instruction(op, rs1=_parse_reg(ops[0]), rs2=_parse_reg(ops[1]),
                            count=_parse_int(ops[2]))
    elif op is Op.CRYPTO_WAIT:
        _expect(ops, 1, m)
        name = ops[0].lower()
        if name not in _ENGINE_NAMES:
            raise ValueError(f"unknown engine {ops[0]!r} (md, aes, keccak)")
        instr = Instruction(op, imm=int(_ENGINE_NAMES[name]))
    elif op is Op.CRYPTO_READ:
        _expect(ops, 2, m)
        instr = Instruction(op, rd=_parse_reg(ops[0]), buf=_parse_buf(ops[1]))
    elif op is Op.CRYPTO_DISPATCH:
        _expect(ops, 3, m)
        name, _, suffix = ops[0].lower().partition(".")
        try:
            mode = Algorithm.parse(name)
        except ValueError as exc:
            raise ValueError(str(exc)) from None
        flag = 0
        if suffix:
            if FLAG_NAMES.get(mode) != suffix:
                raise ValueError(f"{mode.label} does not accept flag {suffix!r}")
            flag = 1
        instr = Instruction(op, mode=mode, flag=flag, buf=_parse_buf(ops[1]), buf2=_parse_buf(ops[2]))
    elif op is Op.HARAKA_RC:
        _expect(ops, 3, m)
        instr = Instruction(op, buf=_parse_buf(ops[0]), buf2=_parse_buf(ops[1]),
                            count=_parse_int(ops[2]))
    else:  # pragma: no cover - every Op is handled above
        raise ValueError(f"unhandled mnemonic {m}")
    return [validate(instr)]


# ---------------------------------------------------------------- disassembler

def disassemble_one(i):
    op = i.op
    m = op.value
    if op in R_OPS:
        return f"{m} r{i.rd}, r{i.rs1}, r{i.rs2}"
    if op in I_OPS or op in SHIFT_OPS or op is Op.JALR:
        return f"{m} r{i.rd}, r{i.rs1}, {i.imm}"
    if op is Op.LUI:
        return f"{m} r{i.rd}, {i.imm}"
    if op is Op.LD:
        return f"{m} r{i.rd}, {i.imm}(r{i.rs1})"
    if op is Op.SD:
        return f"{m} r{i.rs2}, {i.imm}(r{i.rs1})"
    if op in BRANCHES:
        return f"{m} r{i.rs1}, r{i.rs2}, {i.imm:+d}"
    if op is Op.JAL:
        return f"{m} r{i.rd}, {i.imm:+d}"
    if op in (Op.HALT, Op.DMA_WAIT):
        return m
    if op in (Op.BUF_LOAD, Op.BUF_STORE):
        return f"{m} b{i.buf}, dm:{i.imm}(r{i.rs1}), {i.count}"
    if op is Op.DMA_START:
        return f"{m} r{i.rs1}, r{i.rs2}, {i.count}"
    if op is Op.CRYPTO_WAIT:
        return f"{m} {_ENGINE_TEXT[Engine(i.imm)]}"
    if op is Op.CRYPTO_READ:
        return f"{m} r{i.rd}, b{i.buf}"
    if op is Op.CRYPTO_DISPATCH:
        mode = _MODE_TEXT[i.mode] + (f".{FLAG_NAMES[i.mode]}" if i.flag else "")
        return f"{m} {mode}, b{i.buf}, b{i.buf2}"
    if op is Op.HARAKA_RC:
        return f"{m} b{i.buf}, b{i.buf2}, {i.count}"
    return m


def disassemble(program):
    """Text that reassembles to the same program (labels become offsets)."""
    lines = [disassemble_one(i) for i in program.instructions]
    for addr, word in _nonzero(program.data):
        lines.append(f".dm {addr} 0x{word:x}")
    if program.data and program.data[-1] == 0:
        lines.append(f".dm {len(program.data) - 1} 0")
    for addr, word in _nonzero(program.host):
        lines.append(f".host {addr} 0x{word:x}")
    if program.host and program.host[-1] == 0:
        lines.append(f".host {len(program.host) - 1} 0")
    return "\n".join(lines) + "\n"


def _nonzero(words):
    return [(a, w) for a, w in enumerate(words) if w]
