"""Regenerate the bundled test-vector files from independent oracles.

SHA-2, SHA-3, SHAKE and SM3 come from hashlib (OpenSSL), AES from the
``cryptography`` package, Haraka from the output of the SPHINCS+ reference C
implementation (``haraka_oracle.txt``, produced by compiling its haraka.c).

    python tools/make_vectors.py path/to/haraka_oracle.txt
"""

import hashlib
import random
import sys
from pathlib import Path

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

OUT = Path(__file__).resolve().parent.parent / "src" / "cryptorv" / "data" / "vectors"

PUBLISHED = [
    b"",
    b"abc",
    b"abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq",
    b"abcd" * 16,
]


def messages(seed):
    rng = random.Random(seed)
    out = list(PUBLISHED)
    for n in (1, 55, 56, 63, 64, 65, 111, 112, 127, 128, 129, 135, 136, 137, 167, 168, 169, 300):
        out.append(rng.randbytes(n))
    return out


def write(name, rows):
    path = OUT / f"{name}.txt"
    with path.open("w") as fh:
        fh.write(f"# {name}: ALG<TAB>hex-input<TAB>hex-output[<TAB>out_len]\n")
        for row in rows:
            fh.write("\t".join(row) + "\n")


def main(haraka_oracle):
    OUT.mkdir(parents=True, exist_ok=True)
    for name, alg, fn in [
        ("sha256", "SHA256", hashlib.sha256),
        ("sha512", "SHA512", hashlib.sha512),
        ("sha3_256", "SHA3_256", hashlib.sha3_256),
        ("sm3", "SM3", lambda m: hashlib.new("sm3", m)),
    ]:
        write(name, [(alg, m.hex(), fn(m).hexdigest()) for m in messages(name)])

    for name, alg, fn in [("shake128", "SHAKE128", hashlib.shake_128),
                          ("shake256", "SHAKE256", hashlib.shake_256)]:
        rng = random.Random(name)
        rows = []
        for m in messages(name):
            n = rng.choice([1, 16, 32, 64, 137, 200, 400])
            rows.append((alg, m.hex(), fn(m).hexdigest(n), str(n)))
        write(name, rows)

    rng = random.Random("aes128")
    pairs = [
        (bytes(range(16)), bytes.fromhex("00112233445566778899aabbccddeeff")),
        (bytes.fromhex("2b7e151628aed2a6abf7158809cf4f3c"),
         bytes.fromhex("3243f6a8885a308d313198a2e0370734")),
    ] + [(rng.randbytes(16), rng.randbytes(16)) for _ in range(20)]
    rows = []
    for key, pt in pairs:
        ct = Cipher(algorithms.AES(key), modes.ECB()).encryptor().update(pt)
        rows.append(("AES128", (key + pt).hex(), ct.hex()))
    write("aes128", rows)

    lines = Path(haraka_oracle).read_text().splitlines()
    h256, h512 = [], []
    h256.append(("HARAKA256", bytes(range(32)).hex(), lines[lines.index("RC") + 41].split()[1]))
    h512.append(("HARAKA512", bytes(range(64)).hex(), lines[lines.index("RC") + 42].split()[1]))
    for i, line in enumerate(lines):
        if line.startswith("IN "):
            m = bytes.fromhex(line.split()[1])
            h256.append(("HARAKA256", m[:32].hex(), lines[i + 1].split()[1]))
            h512.append(("HARAKA512", m.hex(), lines[i + 2].split()[1]))
    write("haraka256", h256)
    write("haraka512", h512)


if __name__ == "__main__":
    main(sys.argv[1])
