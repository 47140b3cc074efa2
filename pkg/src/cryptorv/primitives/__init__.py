"""Golden-reference, timing-free implementations of the nine primitives.

Every hardware-model result in the package is checked against these.
"""

from cryptorv.primitives.aes import aes128, aes_round, decrypt_block, encrypt_block, round_key
from cryptorv.primitives.haraka import (
    STANDARD_RC, HarakaRcSet, haraka, haraka_permutation, haraka_rc_derive,
)
from cryptorv.primitives.keccak import (
    keccak_double_round, keccak_f1600, keccak_f1600_unrolled, sponge, sponge_pad,
)
from cryptorv.primitives.md import (
    hash_md, initial_state, md_blocks, md_compress, md_pad, state_to_digest,
)
from cryptorv.modes import Algorithm


def digest(alg, data, out_len=None, key=None, rc=None):
    """Uniform entry point: the reference output of ``alg`` on ``data``.

    ``key`` is the AES key (data is then the plaintext block); ``rc`` selects
    Haraka round constants (standard by default).
    """
    alg = Algorithm(alg)
    if alg.is_md:
        return hash_md(alg, data)
    if alg.is_keccak:
        return sponge(alg, data, out_len)
    if alg is Algorithm.AES128:
        return aes128("ENC", key, data)
    return haraka(alg, data, STANDARD_RC if rc is None else rc)


__all__ = [
    "Algorithm", "HarakaRcSet", "STANDARD_RC", "aes128", "aes_round", "decrypt_block",
    "digest", "encrypt_block", "hash_md", "haraka", "haraka_permutation",
    "haraka_rc_derive", "initial_state", "keccak_double_round", "keccak_f1600",
    "keccak_f1600_unrolled", "md_blocks", "md_compress", "md_pad", "round_key",
    "sponge", "sponge_pad", "state_to_digest",
]
