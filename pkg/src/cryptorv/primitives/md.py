"""Merkle-Damgard front end: padding, chaining and digest extraction."""

from cryptorv.errors import InvalidModeError, SizeMismatchError
from cryptorv.modes import MD_BLOCK, Algorithm
from cryptorv.primitives.sha2 import (
    SHA256_IV, SHA512_IV, sha256_compress, sha512_compress,
)
from cryptorv.primitives.sm3 import SM3_IV, sm3_compress

_COMPRESS = {
    Algorithm.SHA256: sha256_compress,
    Algorithm.SHA512: sha512_compress,
    Algorithm.SM3: sm3_compress,
}

_IV = {
    Algorithm.SHA256: SHA256_IV,
    Algorithm.SHA512: SHA512_IV,
    Algorithm.SM3: SM3_IV,
}


def _check_mode(mode):
    mode = Algorithm(mode)
    if not mode.is_md:
        raise InvalidModeError(f"{mode.label} is not a Merkle-Damgard mode")
    return mode


def word_bits(mode):
    return 64 if _check_mode(mode) is Algorithm.SHA512 else 32


def initial_state(mode):
    """The standard IV as a ChainState (tuple of eight words)."""
    return _IV[_check_mode(mode)]


def md_pad(mode, message):
    """Return ``message`` with the standard padding and length field appended."""
    mode = _check_mode(mode)
    block = MD_BLOCK[mode]
    length_bytes = 16 if mode is Algorithm.SHA512 else 8
    bitlen = 8 * len(message)
    zeros = (-(len(message) + 1 + length_bytes)) % block
    return bytes(message) + b"\x80" + bytes(zeros) + bitlen.to_bytes(length_bytes, "big")


def md_blocks(mode, message):
    padded = md_pad(mode, message)
    size = MD_BLOCK[Algorithm(mode)]
    return [padded[i:i + size] for i in range(0, len(padded), size)]


def md_compress(mode, state, block):
    """One compression: fold ``block`` into the chaining ``state``."""
    mode = _check_mode(mode)
    if len(block) != MD_BLOCK[mode]:
        raise SizeMismatchError(
            f"{mode.label} block must be {MD_BLOCK[mode]} bytes, got {len(block)}")
    if len(state) != 8:
        raise SizeMismatchError(f"{mode.label} state must have 8 words, got {len(state)}")
    limit = 1 << word_bits(mode)
    if any(not 0 <= w < limit for w in state):
        raise SizeMismatchError(f"{mode.label} state word exceeds {word_bits(mode)} bits")
    return _COMPRESS[mode](tuple(state), bytes(block))


def state_to_digest(mode, state):
    nbytes = word_bits(mode) // 8
    return b"".join(w.to_bytes(nbytes, "big") for w in state)


def hash_md(mode, message):
    """SHA-256, SHA-512 or SM3 digest of ``message``."""
    mode = _check_mode(mode)
    state = initial_state(mode)
    compress = _COMPRESS[mode]
    for block in md_blocks(mode, message):
        state = compress(state, block)
    return state_to_digest(mode, state)
