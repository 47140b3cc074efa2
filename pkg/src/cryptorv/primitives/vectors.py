"""Reader for test-vector files.

One record per line::

    ALG<TAB>hex-input<TAB>hex-output[<TAB>out_len]

Blank lines and lines starting with ``#`` are ignored. For AES-128 the input
field is the key followed by the plaintext block (32 bytes total). Haraka
vectors use the standard round constants.
"""

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from cryptorv.errors import VectorFileError
from cryptorv.modes import Algorithm


@dataclass(frozen=True)
class Vector:
    alg: Algorithm
    data: bytes
    expected: bytes
    out_len: int | None = None
    source: str = ""
    line: int = 0

    @property
    def key(self):
        return self.data[:16] if self.alg is Algorithm.AES128 else None

    @property
    def message(self):
        return self.data[16:] if self.alg is Algorithm.AES128 else self.data


def parse_vectors(text, source="<string>"):
    vectors = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) not in (3, 4):
            raise VectorFileError(f"expected 3 or 4 tab-separated fields, got {len(fields)}",
                                  source, lineno)
        try:
            alg = Algorithm.parse(fields[0])
        except ValueError as exc:
            raise VectorFileError(str(exc), source, lineno) from None
        try:
            data = bytes.fromhex(fields[1])
            expected = bytes.fromhex(fields[2])
        except ValueError:
            raise VectorFileError("malformed hex field", source, lineno) from None
        out_len = None
        if len(fields) == 4:
            try:
                out_len = int(fields[3])
            except ValueError:
                raise VectorFileError(f"bad out_len {fields[3]!r}", source, lineno) from None
            if out_len != len(expected):
                raise VectorFileError(
                    f"out_len {out_len} disagrees with output length {len(expected)}",
                    source, lineno)
        elif alg in (Algorithm.SHAKE128, Algorithm.SHAKE256):
            out_len = len(expected)
        if alg is Algorithm.AES128 and len(data) != 32:
            raise VectorFileError("AES-128 input must be key||block (32 bytes)", source, lineno)
        vectors.append(Vector(alg, data, expected, out_len, str(source), lineno))
    return vectors


def load_vectors(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise VectorFileError(str(exc), path) from None
    return parse_vectors(text, path)


def bundled_vector_paths():
    root = resources.files("cryptorv") / "data" / "vectors"
    return sorted(Path(str(p)) for p in root.iterdir() if p.name.endswith(".txt"))


def bundled_vectors():
    out = []
    for path in bundled_vector_paths():
        out.extend(load_vectors(path))
    return out
