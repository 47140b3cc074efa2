"""Reports and the command-line front end.

Subcommands: ``vectors``, ``cycles``, ``efficiency``, ``speedup``,
``constants``, ``run``, ``asm`` and ``workload``. Every report that mixes simulated and published
numbers starts with a provenance banner saying which is which.
"""

import argparse
import csv
import io
import json
import random
import sys
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from cryptorv.config import load_config
from cryptorv.core import Simulator
from cryptorv.errors import CryptoRVError, RunawayError
from cryptorv.isa import Program, assemble, disassemble
from cryptorv.memsys import load_image, parse_hexdump
from cryptorv.modes import HARAKA_INPUT, Algorithm
from cryptorv.primitives import digest as reference_digest
from cryptorv.primitives.vectors import bundled_vector_paths, load_vectors
from cryptorv.scheduler import (
    LongMessage, ManyHash, Workload, execute, parse_workload, plan,
)

MEASURED = "[measured-in-simulation]"
PUBLISHED = "[paper-constant]"
DERIVED = "[derived-from-published]"
CONFIGURED = "[configured]"

TOLERANCE = 0.20
DEFAULT_SEED = 2024


def _round2(x):
    """Round half up to 2 decimals, as printed tables do."""
    return float(Decimal(str(x)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class PublishedReference:
    """Published figures the reports compare against. None of these are simulated."""

    cycles: dict = field(default_factory=lambda: {
        Algorithm.SHA256: 146, Algorithm.SHA512: 263, Algorithm.SM3: 144,
        Algorithm.SHAKE128: 265, Algorithm.SHAKE256: 261, Algorithm.SHA3_256: 261,
        Algorithm.AES128: 98, Algorithm.HARAKA256: 110, Algorithm.HARAKA512: 205})
    cycles_per_byte: dict = field(default_factory=lambda: {
        Algorithm.SHA256: 2.28, Algorithm.SHA512: 2.05, Algorithm.SM3: 2.25,
        Algorithm.SHAKE128: 2.65, Algorithm.SHAKE256: 2.61, Algorithm.SHA3_256: 4.08,
        Algorithm.AES128: 6.13, Algorithm.HARAKA256: 3.44, Algorithm.HARAKA512: 3.20})
    # cycles / (cycles per byte) of the same rows
    input_bytes: dict = field(default_factory=lambda: {
        Algorithm.SHA256: 64, Algorithm.SHA512: 128, Algorithm.SM3: 64,
        Algorithm.SHAKE128: 100, Algorithm.SHAKE256: 100, Algorithm.SHA3_256: 64,
        Algorithm.AES128: 16, Algorithm.HARAKA256: 32, Algorithm.HARAKA512: 64})
    # speedup over the baseline core; SHAKE's single figure covers both widths
    speedup: dict = field(default_factory=lambda: {
        Algorithm.SHA256: 660, Algorithm.SHA512: 604, Algorithm.SM3: 789,
        Algorithm.SHAKE128: 220, Algorithm.SHAKE256: 220, Algorithm.SHA3_256: None,
        Algorithm.AES128: 965, Algorithm.HARAKA256: 1061, Algorithm.HARAKA512: 780})
    frequency_mhz: float = 160.0
    unit_power_w: dict = field(default_factory=lambda: {
        "md": 0.127, "keccak": 0.200, "aes_haraka": 0.491})
    core_dynamic_w: float = 0.851
    soc_dynamic_w: float = 3.33
    soc_total_w: float = 4.03
    soc_static_w: float = 0.7
    efficiency_range: tuple = (62.76, 187.08)
    resources: dict = field(default_factory=lambda: {"LUT": 34704, "FF": 37329, "BRAM": 22})
    # (cpu, power W, {algorithm: Mbps/W}) where the text gives a figure
    cpu_efficiency: tuple = (
        ("i9-10940X", 31.5, {Algorithm.SHA512: 15.89, Algorithm.SHAKE128: 12.74,
                             Algorithm.SHAKE256: 12.67}),
        ("i7-12700H", 23.6, {Algorithm.SHA512: 19.74}),
        ("Cortex-A53", 2.7, {Algorithm.SHA512: 59.24}),
    )

    def check(self):
        """Mismatches between cycles / bytes and the cycles-per-byte column (empty if consistent)."""
        bad = []
        for alg, cyc in self.cycles.items():
            got = _round2(cyc / self.input_bytes[alg])
            if got != self.cycles_per_byte[alg]:
                bad.append(f"{alg.label}: {cyc}/{self.input_bytes[alg]} = {got}, "
                           f"table says {self.cycles_per_byte[alg]}")
        return bad

    def baseline_cycles(self, alg):
        s = self.speedup.get(alg)
        return None if s is None else self.cycles[alg] * s

    def unreproduced(self):
        """Published figures the model cannot reproduce, as report rows."""
        rows = [{"quantity": f"FPGA {k}", "value": v, "unit": "count"}
                for k, v in self.resources.items()]
        rows += [
            {"quantity": "SoC total power", "value": self.soc_total_w, "unit": "W"},
            {"quantity": "SoC dynamic power", "value": self.soc_dynamic_w, "unit": "W"},
            {"quantity": "SoC static power", "value": self.soc_static_w, "unit": "W"},
            {"quantity": "co-processor dynamic power", "value": self.core_dynamic_w, "unit": "W"},
        ]
        rows += [{"quantity": f"{name} unit power", "value": v, "unit": "W"}
                 for name, v in self.unit_power_w.items()]
        for cpu, watts, effs in self.cpu_efficiency:
            rows.append({"quantity": f"{cpu} power", "value": watts, "unit": "W"})
            rows += [{"quantity": f"{cpu} {alg.label}", "value": v, "unit": "Mbps/W"}
                     for alg, v in effs.items()]
        for row in rows:
            row["source"] = PUBLISHED
        return rows


REFERENCE = PublishedReference()

# SHAKE output lengths used for the reference-size runs
REFERENCE_OUT_LEN = {Algorithm.SHAKE128: 32, Algorithm.SHAKE256: 64}


def reference_workload(alg, seed=DEFAULT_SEED, size=None):
    """Single-message workload of the reference input size for ``alg``."""
    alg = Algorithm.parse(alg)
    n = REFERENCE.input_bytes[alg] if size is None else size
    if alg.is_hash:
        return Workload(alg, LongMessage(n), out_len=REFERENCE_OUT_LEN.get(alg), seed=seed)
    return Workload(alg, ManyHash(1, n), seed=seed)


# ---------------------------------------------------------------- reports

@dataclass
class CycleRow:
    algorithm: Algorithm
    input_bytes: int
    cycles: int | None
    reference: int
    frequency_mhz: float
    correct: bool = True
    error: str = ""

    @property
    def cycles_per_byte(self):
        return self.cycles / self.input_bytes if self.cycles else None

    @property
    def throughput_mbps(self):
        if not self.cycles:
            return None
        return self.input_bytes * 8 * self.frequency_mhz / self.cycles

    @property
    def reference_cpb(self):
        return REFERENCE.cycles_per_byte[self.algorithm]

    @property
    def delta(self):
        """Relative difference of measured cycles from the reference."""
        if self.cycles is None:
            return None
        return (self.cycles - self.reference) / self.reference

    @property
    def cpb_delta(self):
        if self.cycles is None:
            return None
        return (self.cycles_per_byte - self.reference_cpb) / self.reference_cpb

    def within(self, tol=TOLERANCE):
        return (self.cycles is not None and self.correct and abs(self.delta) <= tol
                and abs(self.cpb_delta) <= tol)


@dataclass
class CycleReport:
    rows: list
    frequency_mhz: float
    traces: dict = field(default_factory=dict)

    def row(self, alg):
        alg = Algorithm.parse(alg)
        return next(r for r in self.rows if r.algorithm is alg)

    def ok(self, tol=TOLERANCE):
        return all(r.within(tol) for r in self.rows)


def measure(workload, config):
    """Run one workload; returns the Result (raises on runaway or trap)."""
    return execute(plan(workload), config)


def cmd_cycles(config, seed=DEFAULT_SEED, algorithms=None):
    rows, traces = [], {}
    freq = config.timing.frequency_mhz
    for alg in algorithms or list(Algorithm):
        wl = reference_workload(alg, seed)
        row = CycleRow(alg, REFERENCE.input_bytes[alg], None, REFERENCE.cycles[alg], freq)
        try:
            res = measure(wl, config)
        except CryptoRVError as exc:
            row.error = str(exc)
        else:
            row.cycles = res.cycles
            row.correct = res.outputs == wl.expected()
            traces[alg] = res.trace
        rows.append(row)
    return CycleReport(rows, freq, traces)


def cmd_efficiency(config, seed=DEFAULT_SEED, report=None):
    """Mbps/W from simulated single-message throughput and the configured power basis."""
    power = config.power.basis
    if power <= 0:
        raise CryptoRVError("power basis must be positive")
    report = report or cmd_cycles(config, seed)
    rows = []
    for r in report.rows:
        mbps = r.throughput_mbps
        rows.append({"algorithm": r.algorithm, "cycles": r.cycles, "mbps": mbps,
                     "power_w": power, "mbps_per_w": None if mbps is None else mbps / power})
    return rows


def efficiency_in_envelope(rows, envelope=REFERENCE.efficiency_range):
    lo, hi = envelope
    return all(r["mbps_per_w"] is not None and lo <= _round2(r["mbps_per_w"]) <= hi for r in rows)


def cmd_speedup(config, seed=DEFAULT_SEED, report=None):
    report = report or cmd_cycles(config, seed)
    rows = []
    for r in report.rows:
        base = REFERENCE.baseline_cycles(r.algorithm)
        note = ""
        if base is None:
            note = "no published speedup"
        elif r.algorithm in (Algorithm.SHAKE128, Algorithm.SHAKE256):
            note = "joint SHAKE figure applied to both widths"
        rows.append({"algorithm": r.algorithm, "baseline_cycles": base, "cycles": r.cycles,
                     "speedup": None if base is None or not r.cycles else base / r.cycles,
                     "note": note})
    return rows


# ---------------------------------------------------------------- vectors

def stack_output(alg, data, key=None, out_len=None, config=None):
    """Run one input through scheduler, core and engines; returns the output bytes."""
    alg = Algorithm(alg)
    if alg.is_hash:
        wl = Workload(alg, LongMessage(len(data)), out_len=out_len, messages=[data])
    else:
        wl = Workload(alg, ManyHash(1, len(data)), key=key, messages=[data])
    return measure(wl, config).outputs[0]


def check_vectors(vectors, config=None):
    """Each vector through the full stack and through the primitives. Returns failures."""
    failures = []
    for v in vectors:
        ref = reference_digest(v.alg, v.message, out_len=v.out_len, key=v.key)
        try:
            got = stack_output(v.alg, v.message, key=v.key, out_len=v.out_len, config=config)
        except CryptoRVError as exc:
            failures.append((v, f"simulation failed: {exc}"))
            continue
        if ref != v.expected:
            failures.append((v, f"primitive gives {ref.hex()}"))
        if got != v.expected:
            failures.append((v, f"simulated stack gives {got.hex()}"))
    return failures


RANDOM_CAP = 256
BATCH = 1000


def random_differential(alg, count, seed=DEFAULT_SEED, config=None, batch=BATCH):
    """``count`` random inputs through many-hash programs vs the primitives.

    Returns (checked, mismatches) where mismatches lists (index, input).
    """
    alg = Algorithm(alg)
    rng = random.Random(f"{seed}:{alg.name}")
    checked, bad = 0, []
    while checked < count:
        n = min(batch, count - checked)
        if alg.is_hash:
            msgs = [rng.randbytes(rng.randint(0, RANDOM_CAP)) for _ in range(n)]
            wl = Workload(alg, ManyHash(n, RANDOM_CAP), messages=msgs,
                          out_len=REFERENCE_OUT_LEN.get(alg))
        else:
            size = 16 if alg is Algorithm.AES128 else HARAKA_INPUT[alg]
            msgs = [rng.randbytes(size) for _ in range(n)]
            key = rng.randbytes(16) if alg is Algorithm.AES128 else None
            wl = Workload(alg, ManyHash(n, size), messages=msgs, key=key)
        got = measure(wl, config).outputs
        for k, (g, e) in enumerate(zip(got, wl.expected())):
            if g != e:
                bad.append((checked + k, msgs[k]))
        checked += n
    return checked, bad


# ---------------------------------------------------------------- rendering

def banner(kinds):
    lines = ["# provenance:"]
    for tag, what in kinds:
        lines.append(f"#   {tag:<26} {what}")
    return "\n".join(lines)


def provenance_lines(columns, provenance):
    """Banner entries grouping each column header under its source tag."""
    out = []
    for tag in (MEASURED, PUBLISHED, DERIVED, CONFIGURED):
        heads = [h for key, h in columns if provenance.get(key) == tag]
        if heads:
            out.append((tag, ", ".join(heads)))
    return out


def _cell(v):
    if v is None:
        return "-"
    if isinstance(v, Algorithm):
        return v.label
    if isinstance(v, float):
        return f"{_round2(v):.2f}"
    return str(v)


def render(columns, rows, fmt="table"):
    """``columns``: list of (key, header). ``rows``: list of dicts."""
    if fmt == "json-lines":
        out = []
        for r in rows:
            rec = {}
            for key, _ in columns:
                v = r.get(key)
                rec[key] = v.label if isinstance(v, Algorithm) else v
            out.append(json.dumps(rec, sort_keys=False))
        return "\n".join(out) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([h for _, h in columns])
        for r in rows:
            w.writerow([_cell(r.get(k)) for k, _ in columns])
        return buf.getvalue()
    cells = [[h for _, h in columns]] + [[_cell(r.get(k)) for k, _ in columns] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(columns))]
    lines = []
    for n, row in enumerate(cells):
        lines.append("  ".join(c.rjust(w) if n and c[:1] in "-0123456789" else c.ljust(w)
                               for c, w in zip(row, widths)).rstrip())
        if n == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def cycle_rows(report):
    rows = []
    for r in report.rows:
        rows.append({"algorithm": r.algorithm, "bytes": r.input_bytes, "cycles": r.cycles,
                     "cpb": r.cycles_per_byte, "mbps": r.throughput_mbps,
                     "reference": r.reference, "reference_cpb": r.reference_cpb,
                     "delta_pct": None if r.delta is None else 100 * r.delta,
                     "status": r.error or ("ok" if r.within() else
                                           "WRONG OUTPUT" if not r.correct else "OUT OF TOLERANCE")})
    return rows


CYCLE_COLUMNS = [("algorithm", "algorithm"), ("bytes", "bytes"), ("cycles", "cycles"),
                 ("cpb", "cycles/byte"), ("mbps", "Mbps"), ("reference", "ref cycles"),
                 ("reference_cpb", "ref cycles/byte"), ("delta_pct", "delta %"),
                 ("status", "status")]
EFFICIENCY_COLUMNS = [("algorithm", "algorithm"), ("cycles", "cycles"), ("mbps", "Mbps"),
                      ("power_w", "power W"), ("mbps_per_w", "Mbps/W")]
SPEEDUP_COLUMNS = [("algorithm", "algorithm"), ("baseline_cycles", "baseline cycles"),
                   ("cycles", "cycles"), ("speedup", "speedup"), ("note", "note")]
CONSTANT_COLUMNS = [("quantity", "quantity"), ("value", "value"), ("unit", "unit"),
                    ("source", "source")]

# where every numeric column of each report comes from
PROVENANCE = {
    "cycles": {"bytes": DERIVED, "cycles": MEASURED, "cpb": MEASURED, "mbps": MEASURED,
               "reference": PUBLISHED, "reference_cpb": PUBLISHED, "delta_pct": MEASURED},
    "efficiency": {"cycles": MEASURED, "mbps": MEASURED, "power_w": CONFIGURED,
                   "mbps_per_w": MEASURED},
    "speedup": {"baseline_cycles": DERIVED, "cycles": MEASURED, "speedup": DERIVED},
    "constants": {"value": PUBLISHED},
}


# ---------------------------------------------------------------- CLI

def _emit(args, text):
    sys.stdout.write(text)


def _write_traces(path, traces):
    with open(path, "w") as fh:
        for name, trace in traces.items():
            fh.write(f"## {name}\n")
            fh.write(trace.to_text())
            fh.write(trace.summary_text())


def _fmt_banner(args, lines):
    # banners are comments; csv and json-lines readers get them on stderr
    text = banner(lines) + "\n"
    if args.format == "table":
        sys.stdout.write(text)
    else:
        sys.stderr.write(text)


def run_cycles(args, config):
    report = cmd_cycles(config, args.seed)
    _fmt_banner(args, provenance_lines(CYCLE_COLUMNS, PROVENANCE["cycles"]) + [
        (CONFIGURED, f"frequency {report.frequency_mhz:g} MHz"),
    ])
    _emit(args, render(CYCLE_COLUMNS, cycle_rows(report), args.format))
    if args.trace:
        _write_traces(args.trace, {a.label: t for a, t in report.traces.items()})
    return 0 if report.ok() else 1


def _constant_rows(fmt):
    rows = REFERENCE.unreproduced()
    if fmt != "json-lines":
        # print published figures exactly, not at report precision
        for r in rows:
            r["value"] = f"{r['value']:g}"
    return rows


def _constants_table(args):
    _emit(args, "\n" if args.format == "table" else "")
    _emit(args, render(CONSTANT_COLUMNS, _constant_rows(args.format), args.format))


def run_efficiency(args, config):
    rows = cmd_efficiency(config, args.seed)
    lo, hi = REFERENCE.efficiency_range
    _fmt_banner(args, provenance_lines(EFFICIENCY_COLUMNS, PROVENANCE["efficiency"]) + [
        (PUBLISHED, f"envelope {lo}-{hi} Mbps/W"),
        (PUBLISHED, "every value in the second table (not reproduced by the model)"),
        ("", "Mbps/W is model-derived, not measured on hardware"),
    ])
    _emit(args, render(EFFICIENCY_COLUMNS, rows, args.format))
    _constants_table(args)
    return 0 if efficiency_in_envelope(rows) else 1


def run_speedup(args, config):
    rows = cmd_speedup(config, args.seed)
    _fmt_banner(args, provenance_lines(SPEEDUP_COLUMNS, PROVENANCE["speedup"]) + [
        ("", "baseline cycles = ref cycles x published speedup; no baseline core is simulated"),
    ])
    _emit(args, render(SPEEDUP_COLUMNS, rows, args.format))
    return 0


def run_constants(args, config):
    _fmt_banner(args, provenance_lines(CONSTANT_COLUMNS, PROVENANCE["constants"]))
    _emit(args, render(CONSTANT_COLUMNS, _constant_rows(args.format), args.format))
    return 0


def run_vectors(args, config):
    paths = args.files or bundled_vector_paths()
    vectors = []
    for p in paths:
        vectors.extend(load_vectors(p))
    failures = check_vectors(vectors, config)
    for v, why in failures:
        print(f"FAIL {v.source}:{v.line} {v.alg.label}: {why}")
    print(f"vectors: {len(vectors) - len({id(v) for v, _ in failures})}/{len(vectors)} passed")
    status = 0 if not failures else 1
    if args.random:
        for alg in Algorithm:
            n, bad = random_differential(alg, args.random, args.seed, config)
            print(f"random {alg.label}: {n - len(bad)}/{n} match")
            for idx, data in bad[:5]:
                print(f"  mismatch #{idx}: input {data.hex()}")
            status |= 1 if bad else 0
    return status


def _load_program(path):
    path = Path(path)
    if path.suffix in (".s", ".asm"):
        return assemble(path.read_text())
    return Program.from_bytes(path.read_bytes())


def _load_words(path):
    path = Path(path)
    if path.suffix in (".hex", ".txt"):
        return parse_hexdump(path.read_text())
    return load_image(path)


def run_program(args, config):
    program = _load_program(args.program)
    dm = _load_words(args.dm) if args.dm else None
    host = _load_words(args.host) if args.host else None
    sim = Simulator(program, config, dm, host, detail=bool(args.trace))
    try:
        state, trace = sim.run(args.limit)
    except RunawayError as exc:
        print(f"runaway: {exc}", file=sys.stderr)
        if args.trace:
            Path(args.trace).write_text(exc.trace.to_text())
        return 2
    if args.trace:
        Path(args.trace).write_text(trace.to_text())
    sys.stdout.write(trace.summary_text())
    for r in range(0, 32, 4):
        print("  ".join(f"r{r + k:<2}={state.regs[r + k]:#x}" for k in range(4)))
    return 0


def run_asm(args, config):
    src = Path(args.file)
    if args.disassemble:
        sys.stdout.write(disassemble(Program.from_bytes(src.read_bytes())))
        return 0
    program = assemble(src.read_text())
    if args.output:
        Path(args.output).write_bytes(program.to_bytes())
    else:
        for k, w in enumerate(program.words()):
            print(f"{k:4d}: {w:08x}")
    return 0


def run_workload(args, config):
    wl = parse_workload(Path(args.file).read_text(), source=args.file)
    p = plan(wl)
    if args.layout:
        print(p.layout.describe())
    res = execute(p, config, detail=bool(args.trace))
    ok = res.outputs == wl.expected()
    s = res.schedule
    rows = [{"algorithm": wl.algorithm, "instances": p.instances, "cycles": res.cycles,
             "t_compute": s.t_compute, "t_dma": s.t_dma, "t_total": s.t_total,
             "overlap": s.overlap, "correct": "yes" if ok else "NO"}]
    cols = [(k, k) for k in rows[0]]
    _emit(args, render(cols, rows, args.format))
    if args.trace:
        Path(args.trace).write_text(res.trace.to_text())
    return 0 if ok else 1


def _global_options(ap, suppress):
    """Top-level flags. ``suppress`` (argparse.SUPPRESS) keeps subparser copies from
    overwriting values given before the subcommand."""
    def d(value):
        return value if suppress is None else suppress
    ap.add_argument("--config", default=d(None), help="timing/power overrides (key = value file)")
    ap.add_argument("--uncalibrated", action="store_true", default=d(False),
                    help="ignore the packaged calibration (plain defaults)")
    ap.add_argument("--seed", type=int, default=d(DEFAULT_SEED))
    ap.add_argument("--format", choices=("table", "csv", "json-lines"), default=d("table"))
    ap.add_argument("--trace", default=d(None), help="write per-cycle traces to this file")


def build_parser():
    ap = argparse.ArgumentParser(prog="cryptorv", description=__doc__.splitlines()[0])
    _global_options(ap, None)
    # the same flags are accepted after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    _global_options(common, argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        p = sub.add_parser(name, parents=[common], help=help)
        p.set_defaults(func=func)
        return p

    p = add("vectors", run_vectors, "check test vectors through the simulated stack")
    p.add_argument("files", nargs="*")
    p.add_argument("--random", type=int, default=0, metavar="N",
                   help="also compare N random inputs per algorithm")
    add("cycles", run_cycles, "reference-sized cycle table")
    add("efficiency", run_efficiency, "Mbps/W report")
    add("speedup", run_speedup, "speedup over published baselines")
    add("constants", run_constants, "published figures the model does not reproduce")

    p = add("run", run_program, "simulate a program (.s source or binary)")
    p.add_argument("program")
    p.add_argument("--dm", help="initial DM image (raw little-endian words, or .hex dump)")
    p.add_argument("--host", help="host image for DMA")
    p.add_argument("--limit", type=int, help="cycle limit")

    p = add("asm", run_asm, "assemble (or disassemble) a program")
    p.add_argument("file")
    p.add_argument("-o", "--output")
    p.add_argument("-d", "--disassemble", action="store_true")

    p = add("workload", run_workload, "plan and run a workload file")
    p.add_argument("file")
    p.add_argument("--layout", action="store_true", help="print the DM/buffer layout")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, calibrated=not args.uncalibrated)
        return args.func(args, config)
    except CryptoRVError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
