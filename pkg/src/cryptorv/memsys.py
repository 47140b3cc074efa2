"""Data memory, internal buffer, DMA channel and the costs of moving words between them."""

import enum
import math
import re
import struct
from pathlib import Path

from cryptorv.errors import ChannelBusyError, OutOfBoundsError, TransferSizeError

MASK64 = (1 << 64) - 1
DM_WORDS = 1024
BUFFER_WORDS = 128
MAX_BULK = 128


class WordArray:
    """Fixed-size array of 64-bit words with bounds-checked access."""

    name = "memory"

    def __init__(self, size, image=None):
        self.size = size
        self.words = [0] * size
        if image is not None:
            self.load(image)

    def __len__(self):
        return self.size

    def _check(self, base, count):
        if count < 0 or base < 0 or base + count > self.size:
            raise OutOfBoundsError(
                f"{self.name} range [{base}, {base + count}) outside [0, {self.size})")

    def read(self, addr):
        self._check(addr, 1)
        return self.words[addr]

    def write(self, addr, value):
        self._check(addr, 1)
        self.words[addr] = value & MASK64

    def read_block(self, base, count):
        self._check(base, count)
        return self.words[base:base + count]

    def write_block(self, base, values):
        values = [v & MASK64 for v in values]
        self._check(base, len(values))
        self.words[base:base + len(values)] = values

    def load(self, image, base=0):
        self.write_block(base, list(image))

    def snapshot(self):
        return tuple(self.words)


class DataMemory(WordArray):
    name = "data memory"

    def __init__(self, image=None, size=DM_WORDS):
        super().__init__(size, image)


class InternalBuffer(WordArray):
    name = "internal buffer"

    def __init__(self, image=None, size=BUFFER_WORDS):
        super().__init__(size, image)


class Direction(enum.Enum):
    DM_TO_BUF = "DM_TO_BUF"
    BUF_TO_DM = "BUF_TO_DM"


def transfer_cost(count, setup=1, words_per_cycle=1):
    return setup + math.ceil(count / words_per_cycle)


def buf_transfer(direction, dm, buf, dm_base, buf_base, count, setup=1, words_per_cycle=1):
    """Copy ``count`` words between DM and the buffer; returns the cycle cost."""
    direction = Direction(direction)
    if not 1 <= count <= MAX_BULK:
        raise TransferSizeError(f"bulk transfer count must be 1..{MAX_BULK} words, got {count}")
    if direction is Direction.DM_TO_BUF:
        buf.write_block(buf_base, _checked_read(dm, dm_base, count, buf, buf_base))
    else:
        dm.write_block(dm_base, _checked_read(buf, buf_base, count, dm, dm_base))
    return transfer_cost(count, setup, words_per_cycle)


def _checked_read(src, src_base, count, dst, dst_base):
    # validate both sides before touching anything
    dst._check(dst_base, count)
    return src.read_block(src_base, count)


class DmaState(enum.Enum):
    IDLE = "idle"
    BUSY = "busy"


class DmaChannel:
    """Host-to-DM channel. A transfer commits to DM atomically when it completes."""

    def __init__(self, dm, setup_latency=4, words_per_cycle=1):
        if setup_latency < 0 or words_per_cycle < 1:
            raise ValueError("DMA setup must be >= 0 and rate >= 1 word/cycle")
        self.dm = dm
        self.setup_latency = setup_latency
        self.words_per_cycle = words_per_cycle
        self.state = DmaState.IDLE
        self.remaining_cycles = 0
        self.busy_cycles = 0
        self.transfers = 0
        self._pending = None   # (dm_base, words)

    @property
    def busy(self):
        return self.state is DmaState.BUSY

    @property
    def cycles_remaining(self):
        return self.remaining_cycles

    @property
    def remaining_words(self):
        """Words not yet streamed (a zero-length transfer is busy with 0 remaining)."""
        if not self._pending:
            return 0
        n = len(self._pending[1])
        return min(n, self.remaining_cycles * self.words_per_cycle)

    def duration(self, count):
        return self.setup_latency + math.ceil(count / self.words_per_cycle)

    def target_range(self):
        """DM words the in-flight transfer will overwrite, as (base, count)."""
        if not self.busy:
            return None
        base, words = self._pending
        return base, len(words)

    def start(self, image, dm_base):
        if self.busy:
            raise ChannelBusyError("DMA channel is busy; wait for the current transfer")
        image = [w & MASK64 for w in image]
        self.dm._check(dm_base, len(image))
        if len(image) > self.dm.size:
            raise TransferSizeError(f"DMA of {len(image)} words exceeds data memory")
        self._pending = (dm_base, image)
        self.remaining_cycles = self.duration(len(image))
        self.transfers += 1
        if self.remaining_cycles == 0:
            self._commit()
        else:
            self.state = DmaState.BUSY

    def _commit(self):
        base, words = self._pending
        if words:
            self.dm.write_block(base, words)
        self._pending = None
        self.state = DmaState.IDLE

    def tick(self):
        """Advance one cycle. Returns True while still busy afterwards."""
        if self.busy:
            self.busy_cycles += 1
            self.remaining_cycles -= 1
            if self.remaining_cycles == 0:
                self._commit()
        return self.busy

    def advance(self, n):
        """Equivalent to ``n`` ticks (n must not overshoot completion)."""
        if n <= 0:
            return
        if not self.busy or n > self.remaining_cycles:
            raise ValueError("cannot advance an idle channel or past completion")
        self.busy_cycles += n
        self.remaining_cycles -= n
        if self.remaining_cycles == 0:
            self._commit()


def dma_start(channel, host_image, dm_base):
    channel.start(host_image, dm_base)


def dma_tick(channel):
    return "busy" if channel.tick() else "done"


# ---------------------------------------------------------------- image files

def save_image(path, words):
    Path(path).write_bytes(struct.pack(f"<{len(words)}Q", *[w & MASK64 for w in words]))


def load_image(path):
    blob = Path(path).read_bytes()
    if len(blob) % 8:
        raise ValueError(f"{path}: image size {len(blob)} is not a multiple of 8 bytes")
    return list(struct.unpack(f"<{len(blob) // 8}Q", blob))


_ADDR_RE = re.compile(r"^\s*([0-9A-Fa-fx]+)\s*:\s*(.*)$")


def parse_hexdump(text):
    """Parse ``addr: word word ...`` lines (hex) into a word list.

    Lines without an address continue from the previous position. ``#``
    starts a comment. Unwritten addresses below the highest one are zero.
    """
    words = {}
    pos = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _ADDR_RE.match(line)
        if m:
            pos = int(m.group(1), 16)
            line = m.group(2)
        for tok in line.split():
            try:
                value = int(tok, 16)
            except ValueError:
                raise ValueError(f"line {lineno}: bad hex word {tok!r}") from None
            if value > MASK64:
                raise ValueError(f"line {lineno}: word {tok} wider than 64 bits")
            words[pos] = value
            pos += 1
    out = [0] * (max(words) + 1 if words else 0)
    for addr, value in words.items():
        out[addr] = value
    return out


def format_hexdump(words, per_line=4):
    lines = []
    for base in range(0, len(words), per_line):
        chunk = " ".join(f"{w:016x}" for w in words[base:base + per_line])
        lines.append(f"{base:04x}: {chunk}")
    return "\n".join(lines) + ("\n" if lines else "")
