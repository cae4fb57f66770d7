"""Experiment presets, trace recording and flat-file export.

CSV output is long format, one row per metric value::

    run_id,N,x,r,checkpoint,metric,subset_descriptor,value

with ``#``-prefixed header comments so gnuplot and pandas (``comment="#"``)
read it directly. JSON output mirrors the in-memory result objects.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from . import numtheory as nt
from .circuit import (
    DEFAULT_MAX_QUBITS,
    CheckpointId,
    InvalidInstanceError,
    ShorInstance,
    Stage,
    run_full,
    sample_outcome,
)
from .entanglement import (
    ALL,
    AnalyticsOptions,
    EntanglementReport,
    SubsetMode,
    build_report,
    check_trace_options,
    concurrence_eof,
    negativity,
    per_qubit_entropies,
    per_qubit_entropy_delta,
    reduced_density,
    register_entropy,
    register_rdm,
    subset_entropy,
    iter_subsets,
)
from .qstate import StateVector, collapse, measure_distribution

TABLE2_MODULI = (15, 21, 33, 35, 39, 51, 55, 57, 77, 91, 119)
PEAK_THRESHOLD = 1e-6
CSV_COLUMNS = ("run_id", "N", "x", "r", "checkpoint", "metric", "subset_descriptor", "value")


def _workers(workers: int | None) -> int:
    if workers is None:
        return os.cpu_count() or 1
    return max(1, workers)


def _map(fn: Callable, items: Sequence, workers: int | None) -> list:
    # results come back in input order whatever the worker count
    n = _workers(workers)
    if n == 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(fn, items))


# -- classical post-processing --------------------------------------------


def success_probability(distribution: np.ndarray, N: int, x: int) -> float:
    """Probability that one measurement leads to a factor of N."""
    M = len(distribution)
    total = 0.0
    for c in np.flatnonzero(distribution > 1e-15):
        d = nt.recover_period(int(c), M, N, x)
        if d is not None and nt.extract_factors(x, d, N).factored:
            total += float(distribution[c])
    return total


# -- traces ----------------------------------------------------------------


@dataclass
class ExperimentConfig:
    N: int
    x: int | None = None
    fine_iqft: bool = False
    mode: SubsetMode = ALL
    analytics: AnalyticsOptions = field(default_factory=AnalyticsOptions)
    seed: int = 0
    fmt: str = "csv"
    out: Path | None = None
    max_qubits: int = DEFAULT_MAX_QUBITS

    def __post_init__(self):
        if self.fmt not in ("csv", "json"):
            raise ValueError(f"format must be csv or json, got {self.fmt!r}")
        self.analytics.mode = self.mode

    def bases(self) -> list[int]:
        if self.x is None:
            return nt.coprimes(self.N)
        return [self.x]


@dataclass
class ExperimentTrace:
    instance: ShorInstance
    reports: list[EntanglementReport]
    distribution: np.ndarray
    classical: dict[str, Any]

    @property
    def run_id(self) -> str:
        return f"N{self.instance.N}-x{self.instance.x}"

    def report(self, checkpoint: CheckpointId) -> EntanglementReport:
        for r in self.reports:
            if r.checkpoint == checkpoint:
                return r
        raise KeyError(checkpoint.label)

    def series(self, getter: Callable[[EntanglementReport], float], stages=None) -> list[tuple[str, float]]:
        return [
            (r.checkpoint.label, getter(r))
            for r in self.reports
            if stages is None or r.checkpoint.stage in stages
        ]

    def to_dict(self) -> dict:
        inst = self.instance
        return {
            "run_id": self.run_id,
            "N": inst.N,
            "x": inst.x,
            "n": inst.n,
            "period": self.classical["period"],
            "reports": [r.to_dict() for r in self.reports],
            "distribution": {str(c): float(p) for c, p in _nonzero(self.distribution)},
            "classical": self.classical,
        }


def _nonzero(distribution: np.ndarray, floor: float = 1e-15) -> Iterable[tuple[int, float]]:
    for c in np.flatnonzero(distribution > floor):
        yield int(c), float(distribution[c])


def run_trace(config: ExperimentConfig, x: int | None = None) -> ExperimentTrace:
    """Run the circuit with analytics at every checkpoint."""
    base = config.x if x is None else x
    if base is None:
        raise ValueError("run_trace needs a base; use run_traces for all coprimes")
    inst = ShorInstance(config.N, base, max_qubits=config.max_qubits)
    layout = inst.layout
    opts = config.analytics
    check_trace_options(layout, opts)
    run_id = f"N{inst.N}-x{inst.x}"
    reports: list[EntanglementReport] = []

    def hook(cp: CheckpointId, snap: StateVector) -> None:
        reports.append(build_report(snap, layout, cp, opts, run_id))

    state = run_full(inst, hook, fine_iqft=config.fine_iqft)
    dist = measure_distribution(state, layout)
    r = inst.period
    c = sample_outcome(dist, np.random.default_rng(config.seed))
    post = collapse(state, layout, c)
    reports.append(build_report(post, layout, CheckpointId.post_measurement(c), opts, run_id))
    recovered = nt.recover_period(c, inst.M, inst.N, inst.x)
    factors = nt.extract_factors(inst.x, recovered, inst.N) if recovered else None
    classical = {
        "period": r,
        "outcome": c,
        "outcome_probability": float(dist[c]),
        "recovered_period": recovered,
        "factor_status": factors.status.value if factors else "no_period",
        "factors": [factors.p, factors.q] if factors and factors.factored else None,
        "success_probability": success_probability(dist, inst.N, inst.x),
    }
    return ExperimentTrace(inst, reports, dist, classical)


def run_traces(config: ExperimentConfig) -> list[ExperimentTrace]:
    return [run_trace(config, x) for x in config.bases()]


def trace_rows(trace: ExperimentTrace) -> list[tuple]:
    inst = trace.instance
    key = (trace.run_id, inst.N, inst.x, trace.classical["period"])
    rows = []
    for rep in trace.reports:
        cp = rep.checkpoint.label
        if rep.register_entropy is not None:
            rows.append(key + (cp, "register_entropy", "upper|lower", rep.register_entropy))
        for q, e in enumerate(rep.per_qubit_entropy):
            rows.append(key + (cp, "qubit_entropy", f"q{q}", e))
        for q, flag in enumerate(rep.pattern):
            rows.append(key + (cp, "entangled", f"q{q}", int(flag)))
        for (reg, k), v in rep.subset_entropy_averages.items():
            rows.append(key + (cp, "subset_entropy_mean", f"{reg}:{k}", v))
        for (reg, what), v in rep.negativity_results.items():
            metric = "negativity_max" if what == "max" else "negativity_mean"
            desc = reg if what == "max" else f"{reg}:{what.split(':')[1]}"
            rows.append(key + (cp, metric, desc, v))
        for (a, b), v in rep.pairwise_eof.items():
            rows.append(key + (cp, "eof", f"q{a}-q{b}", v))
    for c, p in _nonzero(trace.distribution):
        rows.append(key + ("final", "probability", f"c={c}", p))
    for name, value in trace.classical.items():
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            rows.append(key + ("classical", name, "", value))
    return rows


# -- output ----------------------------------------------------------------


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_csv(rows: Iterable[Sequence], columns: Sequence[str], comments: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def render_json(payload: Any) -> str:
    return json.dumps(payload, indent=2, default=_json_default) + "\n"


def write_output(text: str, out: Path | str | None) -> None:
    if out is None or str(out) == "-":
        print(text, end="")
        return
    Path(out).write_text(text)


def format_for(out: Path | str | None, default: str = "csv") -> str:
    if out is not None and str(out).endswith(".json"):
        return "json"
    return default


def export_traces(traces: Sequence[ExperimentTrace], config: ExperimentConfig) -> str:
    if config.fmt == "json":
        return render_json([t.to_dict() for t in traces])
    rows = [row for t in traces for row in trace_rows(t)]
    comments = [
        "shorent trace",
        f"N={config.N} base={'all' if config.x is None else config.x} "
        f"subset_mode={config.mode.label} seed={config.seed} fine_iqft={int(config.fine_iqft)}",
    ]
    return render_csv(rows, CSV_COLUMNS, comments)


# -- Table 1 ---------------------------------------------------------------


@dataclass
class Table1Row:
    size: int
    small_register: float | None
    large_after_modexp: float
    large_after_iqft: float
    negativity: float | None

    @property
    def difference(self) -> float:
        return self.large_after_iqft - self.large_after_modexp


@dataclass
class Table1:
    N: int
    x: int
    rows: list[Table1Row]
    eof_cross_before: float
    eof_cross_after: float

    def row(self, size: int) -> Table1Row:
        return self.rows[size - 1]

    def records(self) -> list[dict]:
        return [
            {
                "size": r.size,
                "small_register": r.small_register,
                "large_after_modexp": r.large_after_modexp,
                "large_after_iqft": r.large_after_iqft,
                "difference": r.difference,
                "negativity": r.negativity,
            }
            for r in self.rows
        ]

    def render(self) -> str:
        def cell(v, signed=False):
            if v is None:
                return ""
            return f"{v:+.3f}" if signed else f"{v:.3f}"

        head = ("size", "small", "large U", "large IQFT", "diff", "negativity")
        lines = ["{:>5} {:>8} {:>8} {:>10} {:>8} {:>10}".format(*head)]
        for r in self.rows:
            lines.append(
                "{:>5} {:>8} {:>8} {:>10} {:>8} {:>10}".format(
                    r.size,
                    cell(r.small_register),
                    cell(r.large_after_modexp),
                    cell(r.large_after_iqft),
                    cell(r.difference, signed=True),
                    cell(r.negativity),
                )
            )
        lines.append(
            f"cross-register E_f: {self.eof_cross_before:.3f} before IQFT, "
            f"{self.eof_cross_after:.3f} after"
        )
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        rows = []
        run_id = f"N{self.N}-x{self.x}"
        r = nt.multiplicative_order(self.x, self.N)
        for rec in self.records():
            size = rec["size"]
            for metric in ("small_register", "large_after_modexp", "large_after_iqft", "difference", "negativity"):
                if rec[metric] is not None:
                    rows.append((run_id, self.N, self.x, r, "table1", metric, f"size:{size}", rec[metric]))
        rows.append((run_id, self.N, self.x, r, "modexp:last", "eof_cross_mean", "lower x upper", self.eof_cross_before))
        rows.append((run_id, self.N, self.x, r, "iqft", "eof_cross_mean", "lower x upper", self.eof_cross_after))
        return render_csv(rows, CSV_COLUMNS, ["shorent table1", f"N={self.N} x={self.x} subset_mode=all"])

    def to_json(self) -> str:
        return render_json(
            {
                "N": self.N,
                "x": self.x,
                "rows": self.records(),
                "eof_cross_before": self.eof_cross_before,
                "eof_cross_after": self.eof_cross_after,
            }
        )


_NEG_STATE = {}


def _neg_init(rdm):
    _NEG_STATE["rdm"] = rdm


def _neg_one(part):
    rdm = _NEG_STATE["rdm"]
    return negativity(rdm, [rdm.qubits[i] for i in part])


def _mean_negativity(rdm, k: int, workers: int | None) -> float:
    w = len(rdm.qubits)
    parts = [s for s in iter_subsets(w, k) if not (2 * k == w and 0 not in s)]
    n = _workers(workers)
    if n == 1:
        _neg_init(rdm)
        values = [_neg_one(p) for p in parts]
    else:
        with ProcessPoolExecutor(max_workers=n, initializer=_neg_init, initargs=(rdm,)) as pool:
            values = list(pool.map(_neg_one, parts, chunksize=8))
    return math.fsum(values) / len(values)


def _modexp_and_iqft_states(inst: ShorInstance) -> tuple[StateVector, StateVector]:
    last = CheckpointId.after_modexp(inst.layout.upper_width - 1)
    captured = {}

    def hook(cp, snap):
        if cp == last or cp.stage is Stage.IQFT:
            captured[cp.stage] = snap

    run_full(inst, hook)
    return captured[Stage.MODEXP], captured[Stage.IQFT]


def cross_register_eof(state: StateVector, layout, clamp: bool = True) -> float:
    values = [
        concurrence_eof(reduced_density(state, (lo, up)), clamp=clamp)[1]
        for lo in layout.lower_qubits
        for up in layout.upper_qubits
    ]
    return math.fsum(values) / len(values)


def table1_experiment(N: int = 21, x: int = 2, workers: int | None = None, negativity_sizes: int = 5) -> Table1:
    """Subset-averaged entropies of both registers and upper-register negativity."""
    inst = ShorInstance(N, x, strict=True)
    layout = inst.layout
    before, after = _modexp_and_iqft_states(inst)
    upper = layout.upper_qubits
    lower = layout.lower_qubits

    def avg(state, qubits, k):
        vals = [subset_entropy(state, [qubits[i] for i in s]) for s in iter_subsets(len(qubits), k)]
        return math.fsum(vals) / len(vals)

    rho_upper = register_rdm(after, layout, "upper")
    rows = []
    for k in range(1, len(upper)):
        rows.append(
            Table1Row(
                size=k,
                small_register=avg(before, lower, k) if k <= len(lower) else None,
                large_after_modexp=avg(before, upper, k),
                large_after_iqft=avg(after, upper, k),
                negativity=_mean_negativity(rho_upper, k, workers) if k <= negativity_sizes else None,
            )
        )
    return Table1(N, x, rows, cross_register_eof(before, layout), cross_register_eof(after, layout))


# -- Table 2 ---------------------------------------------------------------


@dataclass
class CoprimeRun:
    N: int
    x: int
    r: int
    delta_e1: float
    register_entropy_modexp: float
    register_entropy_iqft: float


def coprime_run(args: tuple[int, int]) -> CoprimeRun:
    """One full simulation with one-qubit analytics at the two IQFT boundary checkpoints."""
    N, x = args
    inst = ShorInstance(N, x)
    layout = inst.layout
    before, after = _modexp_and_iqft_states(inst)
    run_id = f"N{N}-x{x}"
    reports = []
    for snap, cp in (
        (before, CheckpointId.after_modexp(layout.upper_width - 1)),
        (after, CheckpointId.after_iqft()),
    ):
        rep = EntanglementReport(cp, run_id)
        rep.per_qubit_entropy = per_qubit_entropies(snap).tolist()
        rep.register_entropy = register_entropy(snap, layout)
        reports.append(rep)
    return CoprimeRun(
        N,
        x,
        inst.period,
        per_qubit_entropy_delta(reports[0], reports[1], layout),
        reports[0].register_entropy,
        reports[1].register_entropy,
    )


@dataclass
class Table2Row:
    N: int
    factors: str
    r: int
    count: int
    mean_decrease: float


@dataclass
class Table2:
    rows: list[Table2Row]
    runs: list[CoprimeRun]

    def lookup(self, N: int, r: int) -> Table2Row:
        for row in self.rows:
            if row.N == N and row.r == r:
                return row
        raise KeyError((N, r))

    def render(self) -> str:
        lines = []
        for N in dict.fromkeys(row.N for row in self.rows):
            group = [row for row in self.rows if row.N == N]
            lines.append(f"{N:>4} {group[0].factors:>7}  " + "  ".join(f"{g.r} ({g.count})".rjust(9) for g in group))
            lines.append(" " * 14 + "  ".join(f"{g.mean_decrease:.3f}".rjust(9) for g in group))
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        rows = []
        for row in self.rows:
            rows.append((f"N{row.N}", row.N, "all", row.r, "iqft", "coprime_count", row.factors, row.count))
            rows.append((f"N{row.N}", row.N, "all", row.r, "iqft", "mean_delta_e1_decrease", row.factors, row.mean_decrease))
        for run in self.runs:
            rid = f"N{run.N}-x{run.x}"
            rows.append((rid, run.N, run.x, run.r, "iqft", "delta_e1", "upper", run.delta_e1))
            rows.append((rid, run.N, run.x, run.r, "modexp:last", "register_entropy", "upper|lower", run.register_entropy_modexp))
        return render_csv(rows, CSV_COLUMNS, ["shorent table2"])

    def to_json(self) -> str:
        return render_json(
            {
                "rows": [row.__dict__ for row in self.rows],
                "runs": [run.__dict__ for run in self.runs],
            }
        )


def table2_experiment(moduli: Sequence[int] = TABLE2_MODULI, workers: int | None = None) -> Table2:
    """Mean decrease of summed one-qubit entropies across the IQFT, grouped by period."""
    moduli = tuple(moduli)
    for N in moduli:
        if not nt.is_semiprime(N) or N % 2 == 0:
            raise InvalidInstanceError(f"{N} is not an odd semiprime")
        ShorInstance(N, nt.coprimes(N)[0])  # register cap check
    jobs = [(N, x) for N in moduli for x in nt.coprimes(N)]
    runs = _map(coprime_run, jobs, workers)
    runs.sort(key=lambda run: (moduli.index(run.N), run.x))
    rows = []
    for N in moduli:
        p, q = nt.small_prime_factors(N)
        for r, xs in nt.coprimes_by_period(N).items():
            deltas = [run.delta_e1 for run in runs if run.N == N and run.r == r]
            assert len(deltas) == len(xs)
            rows.append(Table2Row(N, f"{p}x{q}", r, len(xs), -math.fsum(deltas) / len(deltas)))
    return Table2(rows, runs)


# -- measurement distributions ---------------------------------------------


@dataclass
class DistributionSummary:
    N: int
    x: int
    r: int
    M: int
    distribution: np.ndarray
    peaks: list[tuple[int, float]]
    ideal_grid: list[int]
    off_grid_mass: float

    def to_csv(self) -> str:
        rid = f"N{self.N}-x{self.x}"
        rows = [(rid, self.N, self.x, self.r, "final", "probability", f"c={c}", p) for c, p in _nonzero(self.distribution)]
        rows.append((rid, self.N, self.x, self.r, "final", "peak_count", f"p>{PEAK_THRESHOLD:g}", len(self.peaks)))
        rows.append((rid, self.N, self.x, self.r, "final", "off_grid_mass", f"grid=round(kM/{self.r})", self.off_grid_mass))
        return render_csv(rows, CSV_COLUMNS, ["shorent dist", f"N={self.N} x={self.x} M={self.M}"])

    def to_json(self) -> str:
        return render_json(
            {
                "N": self.N,
                "x": self.x,
                "r": self.r,
                "M": self.M,
                "distribution": {str(c): p for c, p in _nonzero(self.distribution)},
                "peaks": self.peaks,
                "ideal_grid": self.ideal_grid,
                "off_grid_mass": self.off_grid_mass,
            }
        )

    def render(self) -> str:
        lines = [f"N={self.N} x={self.x} r={self.r} M={self.M}: {len(self.peaks)} outcomes above {PEAK_THRESHOLD:g}"]
        lines += [f"  c={c:>6}  p={p:.6f}" for c, p in self.peaks]
        lines.append(f"probability off the {self.r}-point ideal grid: {self.off_grid_mass:.6f}")
        return "\n".join(lines) + "\n"


def distribution_experiment(N: int, x: int, max_qubits: int = DEFAULT_MAX_QUBITS) -> DistributionSummary:
    inst = ShorInstance(N, x, max_qubits=max_qubits)
    dist = measure_distribution(run_full(inst), inst.layout)
    r, M = inst.period, inst.M
    peaks = [(c, p) for c, p in _nonzero(dist, PEAK_THRESHOLD)]
    grid = sorted({round(k * M / r) % M for k in range(r)})
    off = float(1.0 - dist[grid].sum())
    return DistributionSummary(N, x, r, M, dist, peaks, grid, max(off, 0.0))


# -- success statistics ----------------------------------------------------


def _success_one(args: tuple[int, int]) -> tuple[int, int, float]:
    N, x = args
    inst = ShorInstance(N, x)
    dist = measure_distribution(run_full(inst), inst.layout)
    return x, inst.period, success_probability(dist, N, x)


@dataclass
class SuccessStats:
    N: int
    per_x: list[tuple[int, int, float]]

    @property
    def aggregate(self) -> float:
        return math.fsum(p for _, _, p in self.per_x) / len(self.per_x)

    def render(self) -> str:
        lines = [f"N={self.N}: mean success probability per trial {self.aggregate:.6f}"]
        lines += [f"  x={x:>4} r={r:>3} P(success)={p:.6f}" for x, r, p in self.per_x]
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        rows = [(f"N{self.N}-x{x}", self.N, x, r, "classical", "success_probability", "", p) for x, r, p in self.per_x]
        rows.append((f"N{self.N}", self.N, "all", "", "classical", "mean_success_probability", "", self.aggregate))
        return render_csv(rows, CSV_COLUMNS, ["shorent success", f"N={self.N}"])

    def to_json(self) -> str:
        return render_json(
            {
                "N": self.N,
                "per_x": [{"x": x, "r": r, "success_probability": p} for x, r, p in self.per_x],
                "aggregate": self.aggregate,
            }
        )


def success_stats(N: int, workers: int | None = None) -> SuccessStats:
    if not nt.is_semiprime(N):
        raise InvalidInstanceError(f"{N} is not a semiprime")
    jobs = [(N, x) for x in nt.coprimes(N)]
    results = sorted(_map(_success_one, jobs, workers))
    return SuccessStats(N, results)
