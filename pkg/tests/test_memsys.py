import pytest
from hypothesis import given, strategies as st

from cryptorv.errors import ChannelBusyError, OutOfBoundsError, TransferSizeError
from cryptorv.memsys import (
    DataMemory, DmaChannel, Direction, InternalBuffer, buf_transfer, dma_start, dma_tick,
    format_hexdump, load_image, parse_hexdump, save_image, transfer_cost,
)

words64 = st.integers(0, 2**64 - 1)


def test_sizes():
    assert len(DataMemory()) == 1024
    assert len(InternalBuffer()) == 128


def test_bounds():
    dm = DataMemory()
    with pytest.raises(OutOfBoundsError):
        dm.read(1024)
    with pytest.raises(OutOfBoundsError):
        dm.write(-1, 0)
    dm.write(3, -1)
    assert dm.read(3) == 2**64 - 1


def test_full_buffer_transfer():
    dm = DataMemory(list(range(1, 129)))
    buf = InternalBuffer()
    assert buf_transfer(Direction.DM_TO_BUF, dm, buf, 0, 0, 128) == 129
    assert buf.snapshot() == tuple(range(1, 129))


def test_single_word_leaves_source():
    dm = DataMemory([5, 6])
    buf = InternalBuffer()
    buf_transfer("DM_TO_BUF", dm, buf, 1, 10, 1)
    assert buf.read(10) == 6 and buf.read(11) == 0
    assert dm.read_block(0, 2) == [5, 6]


@pytest.mark.parametrize("dm_base,buf_base,count,err", [
    (1020, 0, 8, OutOfBoundsError),
    (0, 125, 8, OutOfBoundsError),
    (0, 0, 0, TransferSizeError),
    (0, 0, 129, TransferSizeError),
])
def test_transfer_errors(dm_base, buf_base, count, err):
    dm, buf = DataMemory(), InternalBuffer()
    before = dm.snapshot(), buf.snapshot()
    with pytest.raises(err):
        buf_transfer(Direction.DM_TO_BUF, dm, buf, dm_base, buf_base, count)
    assert (dm.snapshot(), buf.snapshot()) == before


@given(count=st.integers(1, 127), setup=st.integers(0, 8), rate=st.integers(1, 4))
def test_cost_monotonic(count, setup, rate):
    assert transfer_cost(count + 1, setup, 1) > transfer_cost(count, setup, 1)
    assert transfer_cost(count + 1, setup, rate) >= transfer_cost(count, setup, rate)


@given(data=st.lists(words64, min_size=1, max_size=128), dm_base=st.integers(0, 896),
       buf_base=st.integers(0, 127))
def test_copy_fidelity_both_ways(data, dm_base, buf_base):
    n = min(len(data), 128 - buf_base)
    data = data[:n]
    dm, buf = DataMemory(), InternalBuffer()
    dm.write_block(dm_base, data)
    buf_transfer(Direction.DM_TO_BUF, dm, buf, dm_base, buf_base, n)
    assert buf.read_block(buf_base, n) == data
    dm2 = DataMemory()
    buf_transfer(Direction.BUF_TO_DM, dm2, buf, dm_base, buf_base, n)
    assert dm2.read_block(dm_base, n) == data


def test_dma_100_words_104_ticks():
    dm = DataMemory()
    ch = DmaChannel(dm)
    image = list(range(100, 200))
    dma_start(ch, image, 10)
    ticks = 0
    while True:
        ticks += 1
        if dma_tick(ch) == "done":
            break
        # commits atomically: nothing visible before completion
        assert dm.read(10) == 0
    assert ticks == 104
    assert dm.read_block(10, 100) == image
    assert not ch.busy


def test_dma_zero_words():
    dm = DataMemory([9] * 1024)
    ch = DmaChannel(dm, setup_latency=4)
    ch.start([], 0)
    states = [dma_tick(ch) for _ in range(4)]
    assert states == ["busy"] * 3 + ["done"]
    assert dm.snapshot() == (9,) * 1024


def test_dma_busy():
    ch = DmaChannel(DataMemory())
    ch.start([1, 2], 0)
    with pytest.raises(ChannelBusyError):
        ch.start([3], 5)


def test_dma_overflow():
    ch = DmaChannel(DataMemory())
    with pytest.raises(OutOfBoundsError):
        ch.start([0] * 10, 1020)
    assert not ch.busy


@given(n=st.integers(0, 300), setup=st.integers(0, 6), rate=st.integers(1, 4))
def test_dma_advance_matches_ticks(n, setup, rate):
    a, b = DmaChannel(DataMemory(), setup, rate), DmaChannel(DataMemory(), setup, rate)
    image = list(range(n))
    a.start(image, 0)
    b.start(image, 0)
    ticks = 0
    while a.busy:
        a.tick()
        ticks += 1
    assert ticks == setup + -(-n // rate)
    if b.busy:
        b.advance(b.cycles_remaining)
    assert a.dm.snapshot() == b.dm.snapshot()
    assert a.busy_cycles == b.busy_cycles


def test_determinism():
    def go():
        dm, buf = DataMemory(list(range(50))), InternalBuffer()
        ch = DmaChannel(dm)
        ch.start([7] * 20, 100)
        costs = [buf_transfer(Direction.DM_TO_BUF, dm, buf, 0, 0, 50)]
        while ch.busy:
            ch.tick()
        costs.append(buf_transfer(Direction.BUF_TO_DM, dm, buf, 200, 0, 50))
        return dm.snapshot(), buf.snapshot(), costs
    assert go() == go()


def test_image_file_roundtrip(tmp_path):
    words = [0, 1, 2**64 - 1, 0x0123456789ABCDEF]
    path = tmp_path / "dm.bin"
    save_image(path, words)
    assert path.read_bytes()[:8] == b"\0" * 8
    assert path.read_bytes()[8:16] == (1).to_bytes(8, "little")
    assert load_image(path) == words


def test_hexdump_roundtrip():
    words = [0, 0xDEADBEEF, 3, 0, 5]
    text = format_hexdump(words)
    assert parse_hexdump(text) == words
    assert parse_hexdump("# comment\n10: 1 2\n3") == [0] * 16 + [1, 2, 3]
    with pytest.raises(ValueError, match="line 1"):
        parse_hexdump("0: zz")
