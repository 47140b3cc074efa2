import csv
import io
import json
from dataclasses import replace

import pytest

from cryptorv.bench import (
    DERIVED, MEASURED, REFERENCE, PUBLISHED, PROVENANCE, CycleRow, cmd_cycles, cmd_efficiency,
    cmd_speedup, check_vectors, efficiency_in_envelope, main, measure, reference_workload,
    random_differential, render,
)
from cryptorv.config import default_config
from cryptorv.modes import Algorithm as A
from cryptorv.primitives.vectors import Vector, parse_vectors

CFG = default_config()
HASH_MODES = [A.SHA256, A.SHA512, A.SM3, A.SHA3_256, A.SHAKE128, A.SHAKE256]


@pytest.fixture(scope="module")
def report():
    return cmd_cycles(CFG)


def cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


# ---------------------------------------------------------------- reference figures

def test_reference_consistent():
    assert REFERENCE.check() == []


def test_reference_detects_inconsistency():
    bad = replace(REFERENCE, input_bytes={**REFERENCE.input_bytes, A.AES128: 17})
    assert any("AES-128" in line for line in bad.check())


def test_reference_sizes():
    assert [REFERENCE.input_bytes[a] for a in A] == [64, 128, 64, 64, 100, 100, 16, 32, 64]
    assert REFERENCE.cycles[A.AES128] == 98 and REFERENCE.cycles_per_byte[A.AES128] == 6.13


# ---------------------------------------------------------------- cycle report

def test_report_identities(report):
    for r in report.rows:
        assert r.correct and not r.error
        assert r.cycles_per_byte == r.cycles / r.input_bytes
        assert r.throughput_mbps == r.input_bytes * 8 * 160.0 / r.cycles


def test_report_within_tolerance(report):
    assert report.ok()
    assert abs(report.row("SHA-256").delta) <= 0.2
    assert report.row(A.AES128).reference_cpb == 6.13


def test_sha512_two_blocks_amortize(report):
    one = report.row(A.SHA512).cycles
    two = measure(reference_workload(A.SHA512, size=256), CFG).cycles
    assert one < two < 2 * one


def test_row_without_cycles():
    row = CycleRow(A.SHA256, 64, None, 146, 160.0, error="runaway")
    assert row.cycles_per_byte is None and row.delta is None and not row.within()


# ---------------------------------------------------------------- efficiency / speedup

def test_efficiency_identity(report):
    rows = cmd_efficiency(CFG, report=report)
    for r in rows:
        assert r["mbps_per_w"] == r["mbps"] / CFG.power.basis


def test_efficiency_halving_power_doubles(report):
    half = replace(CFG, power=replace(CFG.power, basis=CFG.power.basis / 2))
    full = cmd_efficiency(CFG, report=report)
    halved = cmd_efficiency(half, report=report)
    for a, b in zip(full, halved):
        assert b["mbps_per_w"] == pytest.approx(2 * a["mbps_per_w"], rel=1e-12)


def test_efficiency_envelope_and_sha512_max(report):
    rows = cmd_efficiency(CFG, report=report)
    assert efficiency_in_envelope(rows)
    hashes = {r["algorithm"]: r["mbps_per_w"] for r in rows if r["algorithm"] in HASH_MODES}
    assert max(hashes, key=hashes.get) is A.SHA512


def test_speedup_rows(report):
    rows = {r["algorithm"]: r for r in cmd_speedup(CFG, report=report)}
    sha = rows[A.SHA256]
    assert sha["speedup"] == pytest.approx(660 * 146 / report.row(A.SHA256).cycles)
    assert rows[A.HARAKA256]["baseline_cycles"] == 110 * 1061
    assert rows[A.SHA3_256]["speedup"] is None and rows[A.SHA3_256]["note"]
    assert "SHAKE" in rows[A.SHAKE128]["note"]


# ---------------------------------------------------------------- vectors

def test_check_vectors_flags_wrong_expected():
    v = parse_vectors("SHA256\t616263\t" + "00" * 32)[0]
    failures = check_vectors([v], CFG)
    assert len(failures) == 2      # primitive and simulated stack both disagree


def test_check_vectors_pass():
    text = "SHA256\t616263\tba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad\n"
    assert check_vectors(parse_vectors(text), CFG) == []


@pytest.mark.parametrize("alg", list(A))
def test_random_differential_small(alg):
    checked, bad = random_differential(alg, 40, seed=3, config=CFG, batch=25)
    assert checked == 40 and bad == []


# ---------------------------------------------------------------- rendering

def test_render_formats():
    cols = [("a", "A"), ("b", "B")]
    rows = [{"a": A.SM3, "b": 1.005}, {"a": "x", "b": None}]
    table = render(cols, rows)
    assert "SM3" in table and "1.01" in table and "-" in table
    parsed = list(csv.reader(io.StringIO(render(cols, rows, "csv"))))
    assert parsed[0] == ["A", "B"] and parsed[1] == ["SM3", "1.01"]
    lines = render(cols, rows, "json-lines").splitlines()
    assert json.loads(lines[0]) == {"a": "SM3", "b": 1.005}


# ---------------------------------------------------------------- provenance

def test_published_columns_are_labelled():
    published_tags = {PUBLISHED, DERIVED}
    assert PROVENANCE["cycles"]["reference"] in published_tags
    assert PROVENANCE["cycles"]["reference_cpb"] in published_tags
    assert PROVENANCE["cycles"]["bytes"] in published_tags
    assert PROVENANCE["speedup"]["baseline_cycles"] in published_tags
    assert PROVENANCE["cycles"]["cycles"] == MEASURED


def test_unreproduced_rows_all_tagged():
    rows = REFERENCE.unreproduced()
    assert {r["source"] for r in rows} == {PUBLISHED}
    values = {r["quantity"]: r["value"] for r in rows}
    assert values["FPGA LUT"] == 34704 and values["SoC total power"] == 4.03
    assert values["co-processor dynamic power"] == 0.851


# ---------------------------------------------------------------- CLI

def test_cli_cycles(capsys):
    code, out, _ = cli(capsys, "cycles")
    assert code == 0
    assert out.startswith("# provenance:")
    assert "[paper-constant]" in out and "ref cycles" in out


def test_cli_cycles_csv_banner_on_stderr(capsys):
    code, out, err = cli(capsys, "cycles", "--format", "csv")
    assert code == 0 and err.startswith("# provenance:")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 9 and rows[0]["algorithm"] == "SHA-256"


def test_cli_uncalibrated_fails_tolerance(capsys):
    code, out, _ = cli(capsys, "--uncalibrated", "cycles")
    assert code == 1 and "OUT OF TOLERANCE" in out


def test_cli_efficiency_and_speedup(capsys):
    code, out, _ = cli(capsys, "efficiency")
    assert code == 0 and "model-derived" in out and "34704" in out
    code, out, _ = cli(capsys, "speedup", "--format", "json-lines")
    assert code == 0
    recs = [json.loads(line) for line in out.splitlines()]
    assert recs[3]["algorithm"] == "SHA3-256" and recs[3]["speedup"] is None


def test_cli_efficiency_power_override(tmp_path, capsys):
    cfg = tmp_path / "p.cfg"
    cfg.write_text("power.basis_w = 100\n")
    code, _, _ = cli(capsys, "efficiency", "--config", str(cfg))
    assert code == 1      # far outside the envelope
    cfg.write_text("power.basis_w = 0\n")
    code, _, err = cli(capsys, "efficiency", "--config", str(cfg))
    assert code == 2 and "positive" in err


def test_cli_vectors_bundled(capsys):
    code, out, _ = cli(capsys, "vectors")
    assert code == 0 and "passed" in out


def test_cli_vectors_corrupted_file(tmp_path, capsys):
    path = tmp_path / "bad.txt"
    path.write_text("# header\nSHA256\t616263\tba78\nSHA256\tzz\t00\n")
    code, _, err = cli(capsys, "vectors", str(path))
    assert code == 2
    assert f"{path}:3" in err


def test_cli_vectors_wrong_output(tmp_path, capsys):
    path = tmp_path / "wrong.txt"
    path.write_text("SM3\t616263\t" + "11" * 32 + "\n")
    code, out, _ = cli(capsys, "vectors", str(path))
    assert code == 1 and f"FAIL {path}:1" in out


def test_cli_vectors_random(capsys):
    code, out, _ = cli(capsys, "vectors", "--random", "20", "--seed", "5")
    assert code == 0 and out.count("20/20 match") == 9


def test_cli_asm_and_run(tmp_path, capsys):
    src = tmp_path / "p.s"
    src.write_text("li r1, 6\nli r2, 7\nadd r3, r1, r2\nhalt\n")
    binary = tmp_path / "p.bin"
    assert cli(capsys, "asm", str(src), "-o", str(binary))[0] == 0
    code, out, _ = cli(capsys, "asm", str(binary), "-d")
    assert code == 0 and "add r3, r1, r2" in out
    trace = tmp_path / "t.txt"
    code, out, _ = cli(capsys, "run", str(binary), "--trace", str(trace))
    assert code == 0 and "r3 =0xd" in out and "cycles 8" in out
    assert trace.read_text().startswith("# cycle")


def test_cli_run_runaway(tmp_path, capsys):
    src = tmp_path / "loop.s"
    src.write_text("top:\nj top\n")
    code, _, err = cli(capsys, "run", str(src), "--limit", "50")
    assert code == 2 and "runaway" in err


def test_cli_assembly_error(tmp_path, capsys):
    src = tmp_path / "bad.s"
    src.write_text("halt\nbuf_load b0, dm:0, 129\n")
    code, _, err = cli(capsys, "asm", str(src))
    assert code == 2 and "2" in err and "128" in err


def test_cli_workload(tmp_path, capsys):
    wl = tmp_path / "w.cfg"
    wl.write_text("algorithm = sha512\nshape = long\nbytes = 1000\n")
    code, out, _ = cli(capsys, "workload", str(wl), "--layout")
    assert code == 0 and "DM:" in out and "yes" in out


def test_cli_global_flags_either_side(capsys):
    a = cli(capsys, "--seed", "9", "--format", "csv", "speedup")
    b = cli(capsys, "speedup", "--seed", "9", "--format", "csv")
    assert a == b


def test_cli_trace_file(tmp_path, capsys):
    path = tmp_path / "traces.txt"
    assert cli(capsys, "cycles", "--trace", str(path))[0] == 0
    text = path.read_text()
    assert "## SHA-256" in text and "## HARAKA-512" in text


def test_cli_deterministic(tmp_path, capsys):
    outs = []
    for k in range(2):
        path = tmp_path / f"t{k}.txt"
        code, out, err = cli(capsys, "cycles", "--seed", "11", "--trace", str(path))
        outs.append((code, out, err, path.read_bytes()))
    assert outs[0] == outs[1]
