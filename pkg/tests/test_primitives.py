"""Reference primitives against independent oracles (hashlib, cryptography)."""

import hashlib
import random

import pytest
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes
from hypothesis import given, strategies as st

from conftest import HAVE_SM3
from cryptorv.errors import InvalidLengthError, InvalidSeedError, SizeMismatchError
from cryptorv.modes import Algorithm
from cryptorv.primitives import (
    STANDARD_RC, HarakaRcSet, aes128, digest, hash_md, haraka, haraka_rc_derive,
    initial_state, keccak_double_round, keccak_f1600, keccak_f1600_unrolled, md_blocks,
    md_compress, md_pad, round_key, sponge, state_to_digest,
)
from cryptorv.primitives.vectors import bundled_vector_paths, load_vectors

messages = st.binary(max_size=300)
lanes = st.lists(st.integers(0, 2**64 - 1), min_size=25, max_size=25)

HASHLIB_NAMES = {
    Algorithm.SHA256: "sha256", Algorithm.SHA512: "sha512", Algorithm.SM3: "sm3",
    Algorithm.SHA3_256: "sha3_256",
}


def hashlib_digest(alg, data, out_len=None):
    if alg is Algorithm.SHAKE128:
        return hashlib.shake_128(data).digest(out_len)
    if alg is Algorithm.SHAKE256:
        return hashlib.shake_256(data).digest(out_len)
    return hashlib.new(HASHLIB_NAMES[alg], data).digest()


def aes_oracle(key, block, decrypt=False):
    c = Cipher(algorithms.AES(key), modes.ECB())
    op = c.decryptor() if decrypt else c.encryptor()
    return op.update(block) + op.finalize()


# ---------------------------------------------------------------- published vectors

def test_sha256_abc():
    assert hash_md(Algorithm.SHA256, b"abc").hex() == (
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad")


def test_sha512_empty_prefix():
    assert hash_md(Algorithm.SHA512, b"")[:8].hex() == "cf83e1357eefb8bd"


def test_sm3_abc():
    assert hash_md(Algorithm.SM3, b"abc").hex() == (
        "66c7f0f462eeedd9d1f2d46bdc10e4e24167c4875cf2f7a2297da02b8f4ba8e0")


def test_sha3_256_empty():
    assert sponge(Algorithm.SHA3_256, b"").hex() == (
        "a7ffc6f8bf1ed76651c14756a061d662f580ff4de43b49fa82d80a4b80f8434a")


def test_shake128_empty():
    assert sponge(Algorithm.SHAKE128, b"", 32).hex() == (
        "7f9c2ba4e88f827d616045507605853ed73b8093f6efbc88eb1a6eacfa66ef26")


def test_keccak_zero_state():
    assert keccak_f1600([0] * 25)[0] == 0xF1258F7940E1DDE7


def test_aes_appendix_c():
    key = bytes(range(16))
    pt = bytes.fromhex("00112233445566778899aabbccddeeff")
    ct = aes128("ENC", key, pt)
    assert ct.hex() == "69c4e0d86a7b0430d8cdb78070b4c55a"
    assert aes128("DEC", key, ct) == pt


def test_aes_round_key_1():
    rk = round_key(bytes.fromhex("2b7e151628aed2a6abf7158809cf4f3c"), 1)
    assert rk.hex() == "a0fafe1788542cb123a339392a6c7605"


def test_haraka256_reference():
    out = haraka(Algorithm.HARAKA256, bytes(range(32)))
    assert out.hex() == "8027ccb87949774b78d0545fb72bf70c695c2a0923cbd47bba1159efbf2b2c1c"


def test_haraka512_reference():
    out = haraka(Algorithm.HARAKA512, bytes(range(64)))
    assert out.hex() == "be7f723b4e80a99813b292287f306f625a6d57331cae5f34dd9277b0945be2aa"


@pytest.mark.parametrize("path", bundled_vector_paths(), ids=lambda p: p.stem)
def test_bundled_vectors(path):
    vectors = load_vectors(path)
    assert vectors
    for v in vectors:
        if v.alg is Algorithm.AES128:
            got = aes128("ENC", v.key, v.message)
        else:
            got = digest(v.alg, v.message, v.out_len)
        assert got == v.expected, f"{path.name}:{v.line}"


# ---------------------------------------------------------------- oracle differentials

@pytest.mark.parametrize("alg", [Algorithm.SHA256, Algorithm.SHA512, Algorithm.SHA3_256])
@given(data=messages)
def test_fixed_hashes_match_hashlib(alg, data):
    assert digest(alg, data) == hashlib_digest(alg, data)


@pytest.mark.skipif(not HAVE_SM3, reason="hashlib built without sm3")
@given(data=messages)
def test_sm3_matches_hashlib(data):
    assert digest(Algorithm.SM3, data) == hashlib_digest(Algorithm.SM3, data)


@pytest.mark.parametrize("alg", [Algorithm.SHAKE128, Algorithm.SHAKE256])
@given(data=messages, out_len=st.integers(1, 400))
def test_shake_matches_hashlib(alg, data, out_len):
    assert digest(alg, data, out_len) == hashlib_digest(alg, data, out_len)


@given(key=st.binary(min_size=16, max_size=16), block=st.binary(min_size=16, max_size=16))
def test_aes_matches_cryptography(key, block):
    assert aes128("ENC", key, block) == aes_oracle(key, block)
    assert aes128("DEC", key, block) == aes_oracle(key, block, decrypt=True)


def test_aes_inverse_1000():
    rng = random.Random(7)
    for _ in range(1000):
        key, block = rng.randbytes(16), rng.randbytes(16)
        assert aes128("DEC", key, aes128("ENC", key, block)) == block


# ---------------------------------------------------------------- structural properties

@pytest.mark.parametrize("alg", [Algorithm.SHA256, Algorithm.SHA512, Algorithm.SM3])
@given(data=st.binary(max_size=400))
def test_fold_equivalence(alg, data):
    state = initial_state(alg)
    for block in md_blocks(alg, data):
        state = md_compress(alg, state, block)
    assert state_to_digest(alg, state) == hash_md(alg, data)


def test_single_block_compress_is_hash():
    for alg, msg in ((Algorithm.SHA256, b"abc"), (Algorithm.SHA512, b"")):
        padded = md_pad(alg, msg)
        state = md_compress(alg, initial_state(alg), padded)
        assert state_to_digest(alg, state) == hash_md(alg, msg)


@pytest.mark.parametrize("alg", [Algorithm.SHA256, Algorithm.SHA512, Algorithm.SM3])
def test_compress_rejects_wrong_block(alg):
    with pytest.raises(SizeMismatchError):
        md_compress(alg, initial_state(alg), b"\0" * 63)


@given(state=lanes)
def test_keccak_unroll_equivalence(state):
    assert keccak_f1600_unrolled(state) == keccak_f1600(state)


@given(state=lanes)
def test_double_round_composite(state):
    s = list(state)
    for i in range(12):
        s = keccak_double_round(s, i)
    assert tuple(s) == keccak_f1600(state)


def test_keccak_injective_spot_check():
    rng = random.Random(3)
    a = [rng.getrandbits(64) for _ in range(25)]
    b = list(a)
    b[7] ^= 1
    assert keccak_f1600(a) != keccak_f1600(b)


@pytest.mark.parametrize("alg", [Algorithm.SHAKE128, Algorithm.SHAKE256])
@given(data=messages, short=st.integers(1, 64))
def test_xof_prefix(alg, data, short):
    assert sponge(alg, data, 300)[:short] == sponge(alg, data, short)


def test_sponge_length_errors():
    with pytest.raises(InvalidLengthError):
        sponge(Algorithm.SHAKE128, b"x", 0)
    with pytest.raises(InvalidLengthError):
        sponge(Algorithm.SHA3_256, b"x", 16)


# ---------------------------------------------------------------- Haraka round constants

def test_rc_derive_is_shake256_stream():
    sk, pk = b"seed key bytes..", b"public key bytes"
    rc = haraka_rc_derive(sk, pk)
    stream = hashlib.shake_256(sk + pk).digest(16 * len(rc))
    assert rc.to_bytes() == stream
    assert all(len(c) == 16 for c in rc.constants)


def test_rc_derive_deterministic_and_order_sensitive():
    sk, pk = b"\x01" * 16, b"\x02" * 16
    assert haraka_rc_derive(sk, pk) == haraka_rc_derive(sk, pk)
    assert haraka_rc_derive(sk, pk) != haraka_rc_derive(pk, sk)


@pytest.mark.parametrize("sk,pk", [(b"", b"x"), (b"x", b"")])
def test_rc_derive_rejects_empty(sk, pk):
    with pytest.raises(InvalidSeedError):
        haraka_rc_derive(sk, pk)


def test_rc_dependence():
    data = bytes(range(32))
    seeded = haraka_rc_derive(b"sk", b"pk")
    assert haraka(Algorithm.HARAKA256, data, seeded) != haraka(Algorithm.HARAKA256, data)


def test_standard_rc_roundtrip():
    assert HarakaRcSet.from_bytes(STANDARD_RC.to_bytes()) == STANDARD_RC
    assert len(STANDARD_RC) == 40


@pytest.mark.parametrize("alg,n", [(Algorithm.HARAKA256, 31), (Algorithm.HARAKA512, 32)])
def test_haraka_wrong_length(alg, n):
    with pytest.raises(SizeMismatchError):
        haraka(alg, bytes(n))


@given(a=st.binary(min_size=32, max_size=32), b=st.binary(min_size=32, max_size=32))
def test_haraka_deterministic(a, b):
    assert haraka(Algorithm.HARAKA256, a) == haraka(Algorithm.HARAKA256, a)
    if a != b:
        assert haraka(Algorithm.HARAKA256, a) != haraka(Algorithm.HARAKA256, b)
