"""Algorithm tags and the static facts attached to each of them."""

import enum


class Engine(enum.IntEnum):
    MD = 0
    AES_HARAKA = 1
    KECCAK = 2

    @property
    def label(self):
        return {0: "MD_UNIT", 1: "AES_HARAKA_UNIT", 2: "KECCAK_UNIT"}[self.value]


class Algorithm(enum.IntEnum):
    """The nine supported primitives. Values are the 4-bit ISA mode tags."""

    SHA256 = 0
    SHA512 = 1
    SM3 = 2
    SHA3_256 = 3
    SHAKE128 = 4
    SHAKE256 = 5
    AES128 = 6
    HARAKA256 = 7
    HARAKA512 = 8

    @property
    def label(self):
        return _LABELS[self]

    @property
    def engine(self):
        return _ENGINE[self]

    @property
    def is_md(self):
        return self.engine is Engine.MD

    @property
    def is_keccak(self):
        return self.engine is Engine.KECCAK

    @property
    def is_hash(self):
        """True for algorithms that accept arbitrary-length messages."""
        return self.engine in (Engine.MD, Engine.KECCAK)

    @property
    def rounds(self):
        """Pipeline iterations per dispatch on the engine."""
        return _ROUNDS[self]

    @classmethod
    def parse(cls, text):
        if isinstance(text, int):
            return cls(text)
        key = text.strip().upper().replace("-", "").replace("_", "")
        for alg in cls:
            if alg.name.replace("_", "") == key:
                return alg
        aliases = {"AES": cls.AES128, "SHA3": cls.SHA3_256, "SHA2256": cls.SHA256,
                   "SHA2512": cls.SHA512}
        if key in aliases:
            return aliases[key]
        raise ValueError(f"unknown algorithm {text!r}")


_LABELS = {
    Algorithm.SHA256: "SHA-256",
    Algorithm.SHA512: "SHA-512",
    Algorithm.SM3: "SM3",
    Algorithm.SHA3_256: "SHA3-256",
    Algorithm.SHAKE128: "SHAKE-128",
    Algorithm.SHAKE256: "SHAKE-256",
    Algorithm.AES128: "AES-128",
    Algorithm.HARAKA256: "HARAKA-256",
    Algorithm.HARAKA512: "HARAKA-512",
}

_ENGINE = {
    Algorithm.SHA256: Engine.MD,
    Algorithm.SHA512: Engine.MD,
    Algorithm.SM3: Engine.MD,
    Algorithm.SHA3_256: Engine.KECCAK,
    Algorithm.SHAKE128: Engine.KECCAK,
    Algorithm.SHAKE256: Engine.KECCAK,
    Algorithm.AES128: Engine.AES_HARAKA,
    Algorithm.HARAKA256: Engine.AES_HARAKA,
    Algorithm.HARAKA512: Engine.AES_HARAKA,
}

# Keccak: 24 rounds folded two per cycle. Haraka: AES-round applications.
_ROUNDS = {
    Algorithm.SHA256: 64,
    Algorithm.SHA512: 80,
    Algorithm.SM3: 64,
    Algorithm.SHA3_256: 12,
    Algorithm.SHAKE128: 12,
    Algorithm.SHAKE256: 12,
    Algorithm.AES128: 10,
    Algorithm.HARAKA256: 32,
    Algorithm.HARAKA512: 64,
}

# sponge rate in bytes
KECCAK_RATE = {
    Algorithm.SHA3_256: 136,
    Algorithm.SHAKE128: 168,
    Algorithm.SHAKE256: 136,
}

# md block size in bytes
MD_BLOCK = {
    Algorithm.SHA256: 64,
    Algorithm.SHA512: 128,
    Algorithm.SM3: 64,
}

# Haraka input bytes
HARAKA_INPUT = {
    Algorithm.HARAKA256: 32,
    Algorithm.HARAKA512: 64,
}
