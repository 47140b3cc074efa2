import pytest
from hypothesis import given, strategies as st

from cryptorv.config import default_config
from cryptorv.core import ReferenceMachine, Simulator, run
from cryptorv.errors import AnalysisError, ConfigError, LayoutError, RunawayError
from cryptorv.isa import Op, assemble
from cryptorv.modes import Algorithm as A
from cryptorv.modes import Engine
from cryptorv.scheduler import (
    LongMessage, ManyHash, Workload, analyze, execute, parse_workload, plan, plan_long_message,
    plan_many_hash,
)

CFG = default_config()
HASHES = [A.SHA256, A.SHA512, A.SM3, A.SHA3_256, A.SHAKE128, A.SHAKE256]
FIXED = {A.AES128: 16, A.HARAKA256: 32, A.HARAKA512: 64}


def check(workload, config=CFG, **kw):
    result = execute(plan(workload), config, **kw)
    assert result.outputs == workload.expected()
    s = result.schedule
    assert s.t_total >= max(s.t_compute, s.t_dma)
    assert s.overlap <= min(s.t_compute, s.t_dma)
    return result


# ---------------------------------------------------------------- correctness

@given(alg=st.sampled_from(HASHES), size=st.integers(0, 700), seed=st.integers(0, 2**31))
def test_long_message_correct(alg, size, seed):
    check(Workload(alg, LongMessage(size), seed=seed))


@given(alg=st.sampled_from(HASHES), n=st.integers(1, 20), size=st.integers(0, 200),
       seed=st.integers(0, 2**31))
def test_many_hash_correct(alg, n, size, seed):
    check(Workload(alg, ManyHash(n, size), seed=seed))


@given(alg=st.sampled_from(list(FIXED)), n=st.integers(1, 30), seed=st.integers(0, 2**31))
def test_fixed_input_correct(alg, n, seed):
    check(Workload(alg, ManyHash(n, FIXED[alg]), seed=seed))


@given(alg=st.sampled_from([A.SHA256, A.SM3]), size=st.integers(0, 500),
       seed=st.integers(0, 2**31))
def test_two_streams_dual_and_single_lane(alg, size, seed):
    for dual in (False, True):
        check(Workload(alg, LongMessage(size, streams=2), dual_lane=dual, seed=seed))


@given(alg=st.sampled_from([A.SHA256, A.SM3]), n=st.integers(1, 17), size=st.integers(0, 150),
       seed=st.integers(0, 2**31))
def test_dual_lane_many(alg, n, size, seed):
    check(Workload(alg, ManyHash(n, size), dual_lane=True, seed=seed))


@pytest.mark.parametrize("out_len", [1, 33, 400])
def test_shake_output_lengths(out_len):
    check(Workload(A.SHAKE128, ManyHash(3, 50), out_len=out_len))
    check(Workload(A.SHAKE256, LongMessage(300), out_len=out_len))


def test_seeded_haraka():
    sk, pk = bytes(range(16)), bytes(range(16, 32))
    for alg in (A.HARAKA256, A.HARAKA512):
        wl = Workload(alg, ManyHash(10, FIXED[alg]), seeded_rc=(sk, pk), seed=4)
        result = check(wl)
        assert result.outputs != Workload(alg, ManyHash(10, FIXED[alg]), seed=4).expected()


def test_aes_explicit_key():
    key = bytes.fromhex("000102030405060708090a0b0c0d0e0f")
    wl = Workload(A.AES128, ManyHash(1, 16), key=key,
                  messages=[bytes.fromhex("00112233445566778899aabbccddeeff")])
    assert check(wl).outputs[0].hex() == "69c4e0d86a7b0430d8cdb78070b4c55a"


@pytest.mark.parametrize("alg", [A.SHA256, A.SHA512, A.SM3, A.SHA3_256])
def test_zero_length(alg):
    check(Workload(alg, LongMessage(0)))


def test_batch_equivalence():
    msgs = [bytes([i]) * (10 * i) for i in range(11)]
    many = execute(plan(Workload(A.SM3, ManyHash(11, 100), messages=msgs)), CFG).outputs
    singles = [execute(plan(Workload(A.SM3, ManyHash(1, 100), messages=[m])), CFG).outputs[0]
               for m in msgs]
    assert many == singles


@pytest.mark.parametrize("wl", [
    Workload(A.SHA512, LongMessage(1000), seed=1),
    Workload(A.SHA3_256, ManyHash(9, 150), seed=2),
    Workload(A.HARAKA512, ManyHash(12, 64), seeded_rc=(b"k" * 8, b"p" * 8), seed=3),
    Workload(A.SHA256, LongMessage(300, streams=2), dual_lane=True, seed=4),
])
def test_plans_match_reference_machine(wl):
    p = plan(wl)
    sim = p.simulator(CFG)
    sim.run()
    ref = ReferenceMachine(p.program).run()
    assert sim.dm.snapshot() == ref.dm.snapshot()
    assert sim.regs == ref.regs


def test_skip_does_not_change_schedule():
    p = plan(Workload(A.SHA512, LongMessage(2000), seed=5))
    a = execute(p, CFG, skip=True)
    b = execute(p, CFG, skip=False)
    assert bytes(a.trace.flags) == bytes(b.trace.flags)
    assert a.outputs == b.outputs


# ---------------------------------------------------------------- schedule shape

def _retired_dispatches(result):
    prog = result.plan.program.instructions
    pcs = [r.stages[-1] for r in result.trace.records() if r.retired]
    return [prog[int(pc)] for pc in pcs if prog[int(pc)].op is Op.CRYPTO_DISPATCH]


def test_ping_pong_regions_alternate():
    result = check(Workload(A.SHA512, LongMessage(64 * 128 - 17), seed=6), detail=True)
    dispatches = _retired_dispatches(result)
    assert len(dispatches) == 64
    regions = [d.buf2 for d in dispatches]
    assert len(set(regions)) == 2
    assert all(a != b for a, b in zip(regions, regions[1:]))


def test_single_block_path():
    result = check(Workload(A.SHA256, LongMessage(40)), detail=True)
    assert len(_retired_dispatches(result)) == 1


def test_eight_haraka_one_batch():
    result = check(Workload(A.HARAKA256, ManyHash(8, 32), seed=7))
    assert len(result.outputs) == 8


def test_one_instance_single_dispatch():
    p = plan(Workload(A.HARAKA256, ManyHash(1, 32)))
    sim = p.simulator(CFG)
    sim.run()
    assert sim.engines[Engine.AES_HARAKA].dispatches == 1


def test_24_instances_dma_overlaps_compute():
    wl = Workload(A.HARAKA256, ManyHash(24, 32), seed=8)
    result = check(wl)
    s = result.schedule
    first_slot = CFG.timing.dma_setup + result.plan.layout.slot_words
    # only the very first slot's transfer runs before any compute
    assert s.overlap >= s.t_dma - first_slot
    assert s.t_dma >= 24 * 4


def test_overlap_ratio_shrinks():
    ratios = []
    for blocks in (8, 16, 32, 64):
        r = check(Workload(A.SHA512, LongMessage(blocks * 128 - 17), seed=blocks))
        ratios.append(r.schedule.ratio)
    assert all(b <= a for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] <= 1.15


def test_steady_state_cycles_per_block():
    def cycles(blocks):
        return check(Workload(A.SHA512, LongMessage(blocks * 128 - 17))).cycles
    per_block = (cycles(96) - cycles(64)) / 32
    busy = CFG.timing.fill[Engine.MD] + A.SHA512.rounds
    assert abs(per_block - busy) <= 0.1 * busy


# ---------------------------------------------------------------- errors

def test_slot_capacity_layout_error():
    with pytest.raises(LayoutError):
        plan(Workload(A.SHA256, ManyHash(8, 5000)))


def test_fixed_size_mismatch():
    with pytest.raises(LayoutError):
        plan(Workload(A.HARAKA256, ManyHash(2, 31)))


@pytest.mark.parametrize("sk,pk", [(bytes(8), bytes(16)), (bytes(5), bytes(5)), (bytes(40), bytes(40))])
def test_seed_shape_layout_error(sk, pk):
    with pytest.raises(LayoutError):
        plan(Workload(A.HARAKA256, ManyHash(2, 32), seeded_rc=(sk, pk)))


def test_dual_partners_must_match():
    with pytest.raises(LayoutError):
        plan(Workload(A.SHA256, ManyHash(2, 100), dual_lane=True, messages=[b"", b"x" * 100]))


@pytest.mark.parametrize("kw", [
    dict(algorithm=A.SHA512, shape=LongMessage(64), dual_lane=True),
    dict(algorithm=A.SHA256, shape=LongMessage(64), seeded_rc=(b"a", b"b")),
    dict(algorithm=A.SHA256, shape=LongMessage(64), key=bytes(16)),
    dict(algorithm=A.SHA256, shape=LongMessage(64), out_len=4),
    dict(algorithm=A.SHAKE128, shape=LongMessage(64), out_len=0),
])
def test_workload_validation(kw):
    with pytest.raises(LayoutError):
        Workload(**kw)


@pytest.mark.parametrize("make", [lambda: LongMessage(-1), lambda: LongMessage(5, streams=3),
                                  lambda: ManyHash(0, 5), lambda: ManyHash(1, -1)])
def test_shape_validation(make):
    with pytest.raises(LayoutError):
        make()


def test_wrong_planner():
    with pytest.raises(LayoutError):
        plan_long_message(Workload(A.SHA256, ManyHash(1, 5)))
    with pytest.raises(LayoutError):
        plan_many_hash(Workload(A.SHA256, LongMessage(5)))
    with pytest.raises(LayoutError):
        plan_long_message(Workload(A.AES128, LongMessage(16)))


# ---------------------------------------------------------------- analysis

def test_analyze_compute_only():
    _, trace, _ = run(assemble("crypto_dispatch sha512, b0, b8\ncrypto_wait md\nhalt"))
    s = analyze(trace)
    assert s.t_dma == 0 and s.t_compute == 84 and s.overlap == 0
    assert s.t_total - s.t_compute < 10


def test_analyze_dma_only():
    _, trace, _ = run(assemble("dma_start r0, r0, 20\ndma_wait\nhalt\n.host 19 1"))
    s = analyze(trace)
    assert s.t_compute == 0 and s.t_dma == 24


def test_analyze_refuses_runaway():
    with pytest.raises(RunawayError) as exc:
        run(assemble("top:\nj top"), limit=100)
    with pytest.raises(AnalysisError):
        analyze(exc.value.trace)


# ---------------------------------------------------------------- workload files

def test_parse_workload():
    wl = parse_workload("""
        # a seeded batch
        algorithm = haraka512
        shape = many
        instances = 12
        bytes = 64
        sk = 0011223344556677
        pk = 8899aabbccddeeff
        seed = 9
    """)
    assert wl.algorithm is A.HARAKA512
    assert wl.shape == ManyHash(12, 64)
    assert wl.seeded_rc == (bytes.fromhex("0011223344556677"), bytes.fromhex("8899aabbccddeeff"))
    check(wl)


def test_parse_long_dual():
    wl = parse_workload("algorithm = sm3\nshape = long\nbytes = 256\nstreams = 2\ndual_lane = yes")
    assert wl.dual_lane and wl.shape == LongMessage(256, 2)


@pytest.mark.parametrize("text,match", [
    ("algorithm = sha256\ncolour = red", ":2"),
    ("shape = many", "missing"),
    ("algorithm = sha256\nbytes = lots", "bytes"),
    ("algorithm = sha256\nshape = ring", "shape"),
    ("algorithm = haraka256\nsk = 00", "together"),
    ("algorithm = sha512\ndual_lane = 1", "dual"),
    ("algorithm = sha256\njunk", ":2"),
])
def test_parse_workload_errors(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_workload(text)


def test_layout_describe():
    p = plan(Workload(A.SHA256, ManyHash(10, 100)))
    text = p.layout.describe()
    assert "DM:" in text and "buffer:" in text and "out" in text
