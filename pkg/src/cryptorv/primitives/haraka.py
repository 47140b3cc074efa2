"""Haraka v2 (256- and 512-bit input) with pluggable round constants."""

from dataclasses import dataclass

from cryptorv.errors import InvalidModeError, InvalidSeedError, SizeMismatchError
from cryptorv.modes import HARAKA_INPUT, Algorithm
from cryptorv.primitives.aes import aes_round
from cryptorv.primitives.keccak import shake256

RC_COUNT = 40          # constants consumed by Haraka-512; Haraka-256 uses the first 20
_NEEDED = {Algorithm.HARAKA256: 20, Algorithm.HARAKA512: 40}

_STANDARD_HEX = (
    "9d7b8175f0fec5b20ac020e64c708406", "17f7082fa46b0f646ba0f388e1b4668b",
    "1491029f609d02cf9884f2532dde0234", "794f5bfdafbcf3bb084f7b2ee6ead60e",
    "447039be1ccdee798b447248cbb0cfcb", "7b058a2bed35538db732906eeecdea7e",
    "1bef4fda612741e2d07c2e5e438fc267", "3b0bc71fe2fd5f6707cccaafb0d92429",
    "ee65d4b9ca8fdbece97f86e6f1634dab", "337e03ad4f402a5b64cdb7d484bf301c",
    "0098f68d2e8b0269bf231794b90bccb2", "8a2d9d5cc89eaa4a72556fdea67804fa",
    "d49f12292e4ffa0e122a776b2b9fb4df", "ee126abbae11d63236a249f44403a11e",
    "a6eca89cc900965f8400054b884904af", "ec93e527e3c7a2784f9c199dd85e0221",
    "7301d482cd2e28b9b7c959a7f8aa3abf", "6b7d3010d9eff23717b086610d706062",
    "c69afcf65391c28143043021c245ca5a", "3a94d136e892af2cbb686b223c972392",
    "b47110e558b9ba6ceb8658223892bfd3", "8d12e124ddfd3d9377c6f0aee53c86db",
    "b11222cbe38de4839ca0ebff686260bb", "7df72bc74e1ab92d9cd1e4e2dcd34b73",
    "4e92b32cc415144b431b3061c347bb43", "9968eb16dd31b203f6ef07e7a875a7db",
    "2c47ca7e02235e8e7759753c4b61f36d", "f91786b8b9e51b6d777dded6175aa7cd",
    "5dee46a99d066c9daae9a86bf0436bec", "c127f33b591153a22b3357f950691ecb",
    "d9d00e605303ede49c61da00750cee2c", "50a3a463bcbabb80ab0ce996a1a5b1f0",
    "39ca8d9330de0dab8829965e02b13dae", "42b4752ea8f314880ba454d5388fbb17",
    "f6160a3679b7b6aed77f425f5b8abb34", "deafbaff1859ce433854e5cb4152f626",
    "78c99e83f79ccaa26a02f3b9549ae94c", "35129022286ec040bef7df1b1aa551ae",
    "cf59a6480fbc73c12bd27eba3c61c1a0", "a19dc5e9fdbdd64a8882280203cc6a75",
)


@dataclass(frozen=True)
class HarakaRcSet:
    """Ordered 16-byte round constants."""

    constants: tuple

    def __post_init__(self):
        consts = tuple(bytes(c) for c in self.constants)
        if any(len(c) != 16 for c in consts):
            raise SizeMismatchError("Haraka round constants must be 16 bytes each")
        object.__setattr__(self, "constants", consts)

    def __len__(self):
        return len(self.constants)

    def to_bytes(self):
        return b"".join(self.constants)

    @classmethod
    def from_bytes(cls, data):
        if len(data) % 16:
            raise SizeMismatchError("round-constant blob length must be a multiple of 16")
        return cls(tuple(data[i:i + 16] for i in range(0, len(data), 16)))


STANDARD_RC = HarakaRcSet(tuple(bytes.fromhex(h) for h in _STANDARD_HEX))


def haraka_rc_derive(sk, pk, count=RC_COUNT):
    """Seeded constants: consecutive 16-byte reads of SHAKE256(sk || pk)."""
    if not sk or not pk:
        raise InvalidSeedError("seed key and public key must both be non-empty")
    stream = shake256(bytes(sk) + bytes(pk), 16 * count)
    return HarakaRcSet.from_bytes(stream)


def _unpacklo(a, b):
    return a[0:4] + b[0:4] + a[4:8] + b[4:8]


def _unpackhi(a, b):
    return a[8:12] + b[8:12] + a[12:16] + b[12:16]


def _mix2(s0, s1):
    return _unpacklo(s0, s1), _unpackhi(s0, s1)


def _mix4(s0, s1, s2, s3):
    tmp = _unpacklo(s0, s1)
    s0 = _unpackhi(s0, s1)
    s1 = _unpacklo(s2, s3)
    s2 = _unpackhi(s2, s3)
    s3 = _unpacklo(s0, s2)
    s0 = _unpackhi(s0, s2)
    s2 = _unpackhi(s1, tmp)
    s1 = _unpacklo(s1, tmp)
    return s0, s1, s2, s3


def haraka_permutation(mode, data, rc=STANDARD_RC):
    """The Haraka permutation alone (no feed-forward, no truncation)."""
    mode = _check_mode(mode)
    _check_args(mode, data, rc)
    c = rc.constants
    if mode is Algorithm.HARAKA256:
        s = [data[0:16], data[16:32]]
        for r in range(5):
            for j in range(2):
                base = 4 * r + 2 * j
                s = [aes_round(s[i], c[base + i]) for i in range(2)]
            s = list(_mix2(*s))
    else:
        s = [data[16 * i:16 * i + 16] for i in range(4)]
        for r in range(5):
            for j in range(2):
                base = 8 * r + 4 * j
                s = [aes_round(s[i], c[base + i]) for i in range(4)]
            s = list(_mix4(*s))
    return b"".join(s)


def haraka(mode, data, rc=STANDARD_RC):
    """Haraka-256 or Haraka-512 digest (32 bytes)."""
    mode = _check_mode(mode)
    perm = haraka_permutation(mode, data, rc)
    out = bytes(x ^ y for x, y in zip(perm, data))
    if mode is Algorithm.HARAKA256:
        return out
    return out[8:16] + out[24:32] + out[32:40] + out[48:56]


def _check_mode(mode):
    mode = Algorithm(mode)
    if mode not in HARAKA_INPUT:
        raise InvalidModeError(f"{mode.label} is not a Haraka mode")
    return mode


def _check_args(mode, data, rc):
    if len(data) != HARAKA_INPUT[mode]:
        raise SizeMismatchError(
            f"{mode.label} input must be {HARAKA_INPUT[mode]} bytes, got {len(data)}")
    if len(rc) < _NEEDED[mode]:
        raise SizeMismatchError(
            f"{mode.label} needs {_NEEDED[mode]} round constants, got {len(rc)}")
