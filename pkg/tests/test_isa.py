import pytest
from hypothesis import given, settings, strategies as st

from cryptorv.errors import AssemblyError, EncodingError, IllegalInstructionError, ProgramFormatError
from cryptorv.isa import (
    BRANCHES, FLAG_NAMES, HALT_WORD, I_OPS, R_OPS, SHIFT_OPS, Instruction, Op, Program,
    assemble, decode, disassemble, encode, validate,
)
from cryptorv.modes import Algorithm

reg = st.integers(0, 31)
bufidx = st.integers(0, 127)
imm12 = st.integers(-2048, 2047)


def _dispatch(draw):
    mode = draw(st.sampled_from(list(Algorithm)))
    flag = draw(st.integers(0, 1)) if mode in FLAG_NAMES else 0
    return Instruction(Op.CRYPTO_DISPATCH, mode=mode, flag=flag, buf=draw(bufidx), buf2=draw(bufidx))


@st.composite
def instructions(draw):
    op = draw(st.sampled_from(list(Op)))
    if op in R_OPS:
        return Instruction(op, rd=draw(reg), rs1=draw(reg), rs2=draw(reg))
    if op in I_OPS or op in (Op.LD, Op.JALR):
        return Instruction(op, rd=draw(reg), rs1=draw(reg), imm=draw(imm12))
    if op in SHIFT_OPS:
        return Instruction(op, rd=draw(reg), rs1=draw(reg), imm=draw(st.integers(0, 63)))
    if op is Op.LUI:
        return Instruction(op, rd=draw(reg), imm=draw(st.integers(-(1 << 19), (1 << 19) - 1)))
    if op is Op.SD:
        return Instruction(op, rs1=draw(reg), rs2=draw(reg), imm=draw(imm12))
    if op in BRANCHES:
        return Instruction(op, rs1=draw(reg), rs2=draw(reg), imm=draw(st.integers(-1024, 1023)))
    if op is Op.JAL:
        return Instruction(op, rd=draw(reg), imm=draw(st.integers(-(1 << 18), (1 << 18) - 1)))
    if op in (Op.BUF_LOAD, Op.BUF_STORE):
        return Instruction(op, rs1=draw(reg), imm=draw(st.integers(0, 63)), buf=draw(bufidx),
                           count=draw(st.integers(1, 128)))
    if op is Op.DMA_START:
        return Instruction(op, rs1=draw(reg), rs2=draw(reg), count=draw(st.integers(0, 1024)))
    if op is Op.CRYPTO_WAIT:
        return Instruction(op, imm=draw(st.integers(0, 2)))
    if op is Op.CRYPTO_READ:
        return Instruction(op, rd=draw(reg), buf=draw(bufidx))
    if op is Op.CRYPTO_DISPATCH:
        return _dispatch(draw)
    if op is Op.HARAKA_RC:
        return Instruction(op, buf=draw(bufidx), buf2=draw(bufidx), count=draw(st.integers(1, 4)))
    return Instruction(op)


@settings(max_examples=10_000)
@given(instructions())
def test_encode_decode_roundtrip(instr):
    word = encode(instr)
    assert 0 <= word < 2**32
    assert decode(word) == instr


@given(st.integers(0, 2**32 - 1))
def test_decode_is_total(word):
    # any word either decodes to something that re-encodes to itself, or is illegal
    try:
        instr = decode(word)
    except IllegalInstructionError:
        return
    assert encode(instr) == word


@given(st.lists(instructions(), min_size=1, max_size=30))
def test_disassemble_fixed_point(instrs):
    text = disassemble(Program(instrs))
    again = assemble(text)
    assert again.instructions == instrs
    assert disassemble(again) == text


def test_add_roundtrip():
    i = Instruction(Op.ADD, rd=1, rs1=2, rs2=3)
    assert decode(encode(i)) == i


def test_buf_load_bounds():
    ok = Instruction(Op.BUF_LOAD, buf=0, count=128)
    assert decode(encode(ok)) == ok
    with pytest.raises(EncodingError):
        encode(Instruction(Op.BUF_LOAD, buf=0, count=129))
    with pytest.raises(EncodingError):
        validate(Instruction(Op.BUF_LOAD, buf=0, count=0))


def test_zero_word_illegal():
    with pytest.raises(IllegalInstructionError):
        decode(0)


def test_dispatch_keeps_mode():
    i = Instruction(Op.CRYPTO_DISPATCH, mode=Algorithm.SHAKE256, flag=1, buf=3, buf2=40)
    back = decode(encode(i))
    assert back.mode is Algorithm.SHAKE256 and back.flag == 1


def test_halt_word():
    assert encode(Instruction(Op.HALT)) == HALT_WORD


@pytest.mark.parametrize("bad", [
    Instruction(Op.ADD, rd=32),
    Instruction(Op.ADDI, imm=2048),
    Instruction(Op.SLLI, imm=64),
    Instruction(Op.BEQ, imm=1024),
    Instruction(Op.HALT, rd=1),
    Instruction(Op.CRYPTO_DISPATCH, mode=Algorithm.SHA512, flag=1),
    Instruction(Op.CRYPTO_WAIT, imm=3),
    Instruction(Op.DMA_START, count=1025),
    Instruction(Op.HARAKA_RC, count=5),
    Instruction(Op.ADD, mode=Algorithm.SHA256),
])
def test_invalid_operands(bad):
    with pytest.raises(EncodingError):
        encode(bad)


# ---------------------------------------------------------------- assembler

def test_assemble_halt():
    prog = assemble("halt")
    assert len(prog) == 1 and prog.instructions[0].op is Op.HALT


def test_backward_branch_label():
    src = """
        li r1, 10          ; counter
        li r2, 0
    loop:
        addi r2, r2, 3
        addi r1, r1, -1
        xor r3, r2, r1
        or r4, r3, r0
        and r5, r4, r3
        sub r6, r5, r4
        bne r1, r0, loop
        halt
    """
    prog = assemble(src)
    bne = prog.instructions[8]
    assert bne.op is Op.BNE and bne.imm == -6
    assert prog.labels["loop"] == 2


def test_forward_label():
    prog = assemble("beq r0, r0, end\naddi r1, r0, 1\nend:\nhalt")
    assert prog.instructions[0].imm == 2


def test_buf_load_129_cites_limit():
    with pytest.raises(AssemblyError, match="128") as exc:
        assemble("buf_load b0, dm:0, 129")
    assert exc.value.line == 1


@pytest.mark.parametrize("src,line", [
    ("halt\nfrobnicate r1", 2),
    ("nop\nnop\nbeq r0, r0, nowhere", 3),
    ("addi r1, r0, 5000", 1),
    ("add r1, r2", 1),
    ("crypto_dispatch sha512.dual, b0, b8", 1),
])
def test_assembly_errors_carry_line(src, line):
    with pytest.raises(AssemblyError) as exc:
        assemble(src)
    assert exc.value.line == line


def test_li_wide_constant():
    prog = assemble("li r5, 0x12345678")
    assert [i.op for i in prog.instructions] == [Op.LUI, Op.ADDI]


def test_binary_image_roundtrip():
    prog = assemble("li r1, 3\nsd r1, 0(r0)\nhalt\n.dm 4 0xdead\n.host 2 7")
    blob = prog.to_bytes()
    assert blob[:4] == b"CRV1"
    back = Program.from_bytes(blob)
    assert back.instructions == prog.instructions
    assert back.data == prog.data and back.host == prog.host


@pytest.mark.parametrize("blob", [b"XXXX", b"CRV1\x05\x00\x00\x00", b"CRV1\x00\x00\x00\x00\x00"])
def test_bad_binary_image(blob):
    with pytest.raises(ProgramFormatError):
        Program.from_bytes(blob)


def test_program_capacity():
    with pytest.raises(ProgramFormatError):
        Program([Instruction(Op.HALT)] * 5, max_instructions=4)
