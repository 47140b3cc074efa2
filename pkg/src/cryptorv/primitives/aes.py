"""AES-128 (FIPS 197) plus the single-round ``aes_round`` that Haraka builds on.

Blocks are 16-byte strings in the standard column-major order: byte ``r + 4c``
is row ``r`` of column ``c``.
"""

from cryptorv.errors import SizeMismatchError


def _xtime(a):
    a <<= 1
    return (a ^ 0x11B) if a & 0x100 else a


def _gmul(a, b):
    p = 0
    while b:
        if b & 1:
            p ^= a
        a = _xtime(a)
        b >>= 1
    return p


def _build_sbox():
    # multiplicative inverse via exp/log tables with generator 3
    exp, log = [0] * 255, [0] * 256
    x = 1
    for i in range(255):
        exp[i] = x
        log[x] = i
        x = _gmul(x, 3)
    sbox = [0] * 256
    for a in range(256):
        inv = 0 if a == 0 else exp[(255 - log[a]) % 255]
        s = inv
        for shift in range(1, 5):
            s ^= ((inv << shift) | (inv >> (8 - shift))) & 0xFF
        sbox[a] = s ^ 0x63
    return tuple(sbox)


SBOX = _build_sbox()
INV_SBOX = tuple(SBOX.index(i) for i in range(256))

_MUL = {k: tuple(_gmul(a, k) for a in range(256)) for k in (2, 3, 9, 11, 13, 14)}

# encryption T-tables; column words are big-endian (row 0 in the top byte)
_TE0 = tuple((_MUL[2][s] << 24) | (s << 16) | (s << 8) | _MUL[3][s] for s in SBOX)
_TE1 = tuple(((t >> 8) | (t << 24)) & 0xFFFFFFFF for t in _TE0)
_TE2 = tuple(((t >> 16) | (t << 16)) & 0xFFFFFFFF for t in _TE0)
_TE3 = tuple(((t >> 24) | (t << 8)) & 0xFFFFFFFF for t in _TE0)

_RCON = (0x01, 0x02, 0x04, 0x08, 0x10, 0x20, 0x40, 0x80, 0x1B, 0x36)


def _check16(name, data):
    if len(data) != 16:
        raise SizeMismatchError(f"{name} must be 16 bytes, got {len(data)}")


def _cols(block):
    return [int.from_bytes(block[i:i + 4], "big") for i in (0, 4, 8, 12)]


def _uncols(cols):
    return b"".join(c.to_bytes(4, "big") for c in cols)


def expand_key(key):
    """The 44-word AES-128 key schedule as a list of big-endian words."""
    _check16("key", key)
    w = _cols(key)
    for i in range(4, 44):
        t = w[i - 1]
        if i % 4 == 0:
            t = ((t << 8) | (t >> 24)) & 0xFFFFFFFF
            t = ((SBOX[t >> 24] << 24) | (SBOX[(t >> 16) & 0xFF] << 16)
                 | (SBOX[(t >> 8) & 0xFF] << 8) | SBOX[t & 0xFF])
            t ^= _RCON[i // 4 - 1] << 24
        w.append(w[i - 4] ^ t)
    return w


def round_key(key, n):
    """Round key ``n`` (0..10) as 16 bytes."""
    w = expand_key(key)
    return _uncols(w[4 * n:4 * n + 4])


def _enc_round(s, rk):
    s0, s1, s2, s3 = s
    return [
        _TE0[s0 >> 24] ^ _TE1[(s1 >> 16) & 0xFF] ^ _TE2[(s2 >> 8) & 0xFF] ^ _TE3[s3 & 0xFF] ^ rk[0],
        _TE0[s1 >> 24] ^ _TE1[(s2 >> 16) & 0xFF] ^ _TE2[(s3 >> 8) & 0xFF] ^ _TE3[s0 & 0xFF] ^ rk[1],
        _TE0[s2 >> 24] ^ _TE1[(s3 >> 16) & 0xFF] ^ _TE2[(s0 >> 8) & 0xFF] ^ _TE3[s1 & 0xFF] ^ rk[2],
        _TE0[s3 >> 24] ^ _TE1[(s0 >> 16) & 0xFF] ^ _TE2[(s1 >> 8) & 0xFF] ^ _TE3[s2 & 0xFF] ^ rk[3],
    ]


def aes_round(block, key):
    """SubBytes, ShiftRows, MixColumns, then XOR ``key`` (one AES encryption round)."""
    _check16("block", block)
    _check16("round key", key)
    return _uncols(_enc_round(_cols(block), _cols(key)))


def encrypt_block(key, block):
    _check16("block", block)
    w = expand_key(key)
    s = [c ^ k for c, k in zip(_cols(block), w[0:4])]
    for rnd in range(1, 10):
        s = _enc_round(s, w[4 * rnd:4 * rnd + 4])
    # last round: no MixColumns
    st = _uncols(s)
    out = bytearray(16)
    for c in range(4):
        for r in range(4):
            out[r + 4 * c] = SBOX[st[r + 4 * ((c + r) % 4)]]
    return _uncols([c ^ k for c, k in zip(_cols(out), w[40:44])])


def _inv_mix_column(col):
    a0, a1, a2, a3 = col
    m9, m11, m13, m14 = _MUL[9], _MUL[11], _MUL[13], _MUL[14]
    return (
        m14[a0] ^ m11[a1] ^ m13[a2] ^ m9[a3],
        m9[a0] ^ m14[a1] ^ m11[a2] ^ m13[a3],
        m13[a0] ^ m9[a1] ^ m14[a2] ^ m11[a3],
        m11[a0] ^ m13[a1] ^ m9[a2] ^ m14[a3],
    )


def decrypt_block(key, block):
    _check16("block", block)
    w = expand_key(key)
    keys = [_uncols(w[4 * r:4 * r + 4]) for r in range(11)]
    s = bytearray(x ^ k for x, k in zip(block, keys[10]))
    for rnd in range(9, -1, -1):
        # InvShiftRows then InvSubBytes
        t = bytearray(16)
        for c in range(4):
            for r in range(4):
                t[r + 4 * ((c + r) % 4)] = INV_SBOX[s[r + 4 * c]]
        s = bytearray(x ^ k for x, k in zip(t, keys[rnd]))
        if rnd:
            for c in range(4):
                s[4 * c:4 * c + 4] = bytes(_inv_mix_column(s[4 * c:4 * c + 4]))
    return bytes(s)


def aes128(direction, key, block):
    """Encrypt (``"ENC"``) or decrypt (``"DEC"``) one block."""
    _check16("key", key)
    d = str(direction).upper()
    if d == "ENC":
        return encrypt_block(key, block)
    if d == "DEC":
        return decrypt_block(key, block)
    raise ValueError(f"direction must be ENC or DEC, got {direction!r}")
