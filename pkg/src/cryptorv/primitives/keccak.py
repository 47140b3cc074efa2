"""Keccak-f[1600] and the SHA3-256 / SHAKE sponges (FIPS 202).

Lanes are indexed ``x + 5*y`` and packed little-endian, as in FIPS 202.
"""

from cryptorv.errors import InvalidLengthError, InvalidModeError, SizeMismatchError
from cryptorv.modes import KECCAK_RATE, Algorithm

M64 = 0xFFFFFFFFFFFFFFFF

ROUND_CONSTANTS = (
    0x0000000000000001, 0x0000000000008082, 0x800000000000808A, 0x8000000080008000,
    0x000000000000808B, 0x0000000080000001, 0x8000000080008081, 0x8000000000008009,
    0x000000000000008A, 0x0000000000000088, 0x0000000080008009, 0x000000008000000A,
    0x000000008000808B, 0x800000000000008B, 0x8000000000008089, 0x8000000000008003,
    0x8000000000008002, 0x8000000000000080, 0x000000000000800A, 0x800000008000000A,
    0x8000000080008081, 0x8000000000008080, 0x0000000080000001, 0x8000000080008008,
)

_RHO = (
    0, 1, 62, 28, 27,
    36, 44, 6, 55, 20,
    3, 10, 43, 25, 39,
    41, 45, 15, 21, 8,
    18, 2, 61, 56, 14,
)

# pi: lane (x, y) moves to (y, 2x + 3y); precompute (src, dst, rot) triples
_RHO_PI = tuple(
    (x + 5 * y, y + 5 * ((2 * x + 3 * y) % 5), _RHO[x + 5 * y])
    for y in range(5) for x in range(5)
)

DOMAIN = {
    Algorithm.SHA3_256: 0x06,
    Algorithm.SHAKE128: 0x1F,
    Algorithm.SHAKE256: 0x1F,
}


def keccak_round(lanes, rc):
    """One round (theta, rho, pi, chi, iota) on a list of 25 lanes, in place."""
    a = lanes
    c = [a[x] ^ a[x + 5] ^ a[x + 10] ^ a[x + 15] ^ a[x + 20] for x in range(5)]
    for x in range(5):
        cx = c[(x + 1) % 5]
        d = c[(x - 1) % 5] ^ (((cx << 1) | (cx >> 63)) & M64)
        for y in range(0, 25, 5):
            a[x + y] ^= d
    b = [0] * 25
    for src, dst, r in _RHO_PI:
        v = a[src]
        b[dst] = ((v << r) | (v >> (64 - r))) & M64 if r else v
    for y in range(0, 25, 5):
        b0, b1, b2, b3, b4 = b[y:y + 5]
        a[y] = b0 ^ (~b1 & b2)
        a[y + 1] = b1 ^ (~b2 & b3)
        a[y + 2] = b2 ^ (~b3 & b4)
        a[y + 3] = b3 ^ (~b4 & b0)
        a[y + 4] = b4 ^ (~b0 & b1)
    a[0] ^= rc
    return a


def keccak_double_round(lanes, index):
    """Rounds ``2*index`` and ``2*index + 1`` applied back to back.

    This is the composite the Keccak engine evaluates per clock; twelve of
    them make up the full permutation.
    """
    if not 0 <= index < 12:
        raise ValueError(f"double-round index must be in [0, 12), got {index}")
    keccak_round(lanes, ROUND_CONSTANTS[2 * index])
    return keccak_round(lanes, ROUND_CONSTANTS[2 * index + 1])


def _check_state(state):
    if len(state) != 25:
        raise SizeMismatchError(f"Keccak state must have 25 lanes, got {len(state)}")
    if any(not 0 <= v <= M64 for v in state):
        raise SizeMismatchError("Keccak lane exceeds 64 bits")


def keccak_f1600(state):
    _check_state(state)
    lanes = list(state)
    for rc in ROUND_CONSTANTS:
        keccak_round(lanes, rc)
    return tuple(lanes)


def keccak_f1600_unrolled(state):
    """Same permutation, evaluated as twelve two-round composites."""
    _check_state(state)
    lanes = list(state)
    for i in range(12):
        keccak_double_round(lanes, i)
    return tuple(lanes)


def bytes_to_lanes(data):
    """Little-endian lanes for ``data`` (length a multiple of 8)."""
    return [int.from_bytes(data[i:i + 8], "little") for i in range(0, len(data), 8)]


def lanes_to_bytes(lanes):
    return b"".join(v.to_bytes(8, "little") for v in lanes)


def _check_mode(mode):
    mode = Algorithm(mode)
    if not mode.is_keccak:
        raise InvalidModeError(f"{mode.label} is not a sponge mode")
    return mode


def sponge_pad(mode, message):
    """Domain-separated pad10*1; result length is a multiple of the rate."""
    mode = _check_mode(mode)
    rate = KECCAK_RATE[mode]
    padded = bytearray(message)
    padded.append(DOMAIN[mode])
    padded.extend(bytes((-len(padded)) % rate))
    padded[-1] |= 0x80
    return bytes(padded)


def default_out_len(mode):
    return 32 if Algorithm(mode) is Algorithm.SHA3_256 else None


def check_out_len(mode, out_len):
    mode = _check_mode(mode)
    if out_len is None or out_len < 1:
        raise InvalidLengthError(f"{mode.label} output length must be >= 1, got {out_len}")
    if mode is Algorithm.SHA3_256 and out_len != 32:
        raise InvalidLengthError(f"SHA3-256 output length is 32, got {out_len}")


def sponge(mode, message, out_len=None):
    """SHA3-256 (``out_len`` 32) or SHAKE128/256 with ``out_len`` output bytes."""
    mode = _check_mode(mode)
    if out_len is None:
        out_len = default_out_len(mode)
    check_out_len(mode, out_len)
    rate = KECCAK_RATE[mode]
    padded = sponge_pad(mode, message)

    lanes = [0] * 25
    for off in range(0, len(padded), rate):
        for i, v in enumerate(bytes_to_lanes(padded[off:off + rate])):
            lanes[i] ^= v
        lanes = list(keccak_f1600(lanes))

    out = bytearray()
    while True:
        out += lanes_to_bytes(lanes[:rate // 8])
        if len(out) >= out_len:
            return bytes(out[:out_len])
        lanes = list(keccak_f1600(lanes))


def shake256(data, out_len):
    return sponge(Algorithm.SHAKE256, data, out_len)
