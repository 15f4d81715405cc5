"""Experiment protocol: repeated seeded runs, order statistics, FE-ratio, tables.

Run ``k`` of an experiment draws from ``PCG64(base_seed + k)``, so an experiment
is reproducible run by run and its output does not depend on execution order.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, fields, replace
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .benchmarks import ACTIVE_CONSTRAINTS, get_problem
from .core import ConstrainedProblem, CountedEvaluator, RunResult, UsageError, make_rng
from .optimizers import DeConfig, PsoConfig, RgaConfig, run_de, run_pso, run_rga
from .repair import DEFAULT_IP_ALPHA, RepairStrategy, VelocityPolicy, parse_repair_kind

DEFAULT_RUNS = 50
DEFAULT_BUDGET = 1_000_000
CONSTRAINED_BUDGET = 200_000
DEFAULT_THRESHOLD = 1e-10
ENGINEERING_THRESHOLD = 1e-3
# no cap is reported for the dimension study; the tables use 1e6
SCALE_UP_BUDGET = 10_000_000

# optimizer id -> (runner, config class, fixed config fields)
OPTIMIZERS = {
    "pso": (run_pso, PsoConfig, {}),
    "de": (run_de, DeConfig, {}),
    "rga": (run_rga, RgaConfig, {}),
    "rga-elite": (run_rga, RgaConfig, {"elitist": True}),
    "rga-rigid": (run_rga, RgaConfig, {"rigid_bounds": True}),
    "rga-elite-rigid": (run_rga, RgaConfig, {"elitist": True, "rigid_bounds": True}),
}

TABLE_COLUMNS = ("strategy", "velocity_policy", "problem", "placement", "success_count",
                 "fe_best", "fe_median", "fe_worst", "fit_best", "fit_median", "fit_worst",
                 "dnc_flag")


@dataclass(frozen=True)
class ExperimentSpec:
    problem: str
    optimizer: str = "de"
    repair: str = "ip-s"
    velocity: Optional[str] = None
    runs: int = DEFAULT_RUNS
    budget: Optional[int] = None
    threshold: Optional[float] = None
    base_seed: int = 0
    alpha: float = DEFAULT_IP_ALPHA
    n: int = 20
    overrides: tuple = ()
    record_trace: bool = False

    def __post_init__(self):
        if self.runs < 1:
            raise UsageError("runs must be >= 1")
        if self.budget is not None and self.budget < 1:
            raise UsageError("budget must be >= 1")
        if self.optimizer not in OPTIMIZERS:
            raise UsageError(f"unknown optimizer {self.optimizer!r} "
                             f"(expected one of {', '.join(OPTIMIZERS)})")
        if isinstance(self.overrides, dict):
            object.__setattr__(self, "overrides", tuple(sorted(self.overrides.items())))

    def resolve_problem(self) -> ConstrainedProblem:
        return get_problem(self.problem, self.n)

    def effective_budget(self, problem: ConstrainedProblem) -> int:
        if self.budget is not None:
            return self.budget
        return CONSTRAINED_BUDGET if problem.has_general_constraints else DEFAULT_BUDGET

    def effective_threshold(self, problem: ConstrainedProblem) -> float:
        if self.threshold is not None:
            return self.threshold
        return ENGINEERING_THRESHOLD if problem.name in ACTIVE_CONSTRAINTS else DEFAULT_THRESHOLD

    def strategy_label(self) -> str:
        label = f"{self.optimizer}:{self.repair}"
        if parse_repair_kind(self.repair).is_ip and self.alpha != DEFAULT_IP_ALPHA:
            label += f"@{self.alpha:g}"
        return label

    def velocity_label(self) -> str:
        if self.optimizer != "pso":
            return ""
        return self.velocity or VelocityPolicy.RECOMPUTED.value

    def problem_labels(self) -> tuple:
        """(problem, placement) columns: scenario ids split off their placement."""
        problem = self.resolve_problem()
        name = problem.name
        if ":" in name:
            fid, rest = name.split(":", 1)
            placement, n = rest.split("@")
            return f"{fid}@{n}", placement
        return name, ""


def build_config(spec: ExperimentSpec):
    runner, cls, fixed = OPTIMIZERS[spec.optimizer]
    kwargs = dict(fixed)
    kwargs["repair"] = RepairStrategy.parse(spec.repair, spec.alpha)
    if spec.optimizer == "pso":
        if spec.velocity is not None:
            kwargs["velocity_policy"] = spec.velocity
    elif spec.velocity is not None:
        raise UsageError("a velocity policy only applies to pso")
    names = {f.name for f in fields(cls)}
    for key, value in spec.overrides:
        if key not in names:
            raise UsageError(f"{spec.optimizer} has no parameter {key!r}")
        kwargs[key] = value
    try:
        return runner, cls(**kwargs)
    except TypeError as exc:
        raise UsageError(str(exc)) from None


def run_single(spec: ExperimentSpec, k: int, problem: Optional[ConstrainedProblem] = None) -> RunResult:
    problem = problem or spec.resolve_problem()
    runner, config = build_config(spec)
    ev = CountedEvaluator(problem, spec.effective_budget(problem),
                          spec.effective_threshold(problem), record_trace=spec.record_trace)
    return runner(problem, config, ev, make_rng(spec.base_seed + k))


def lower_median(values: Sequence):
    """Median that picks the lower of the two middle elements for even counts."""
    if len(values) == 0:
        raise UsageError("median of an empty sequence")
    s = sorted(values)
    return s[(len(s) - 1) // 2]


@dataclass(frozen=True)
class ExperimentStatistics:
    strategy: str
    velocity_policy: str
    problem: str
    placement: str
    runs: int
    success_count: int
    fe_best: Optional[int]
    fe_median: Optional[int]
    fe_worst: Optional[int]
    fit_best: float
    fit_median: float
    fit_worst: float
    successful_fes: tuple = field(default=(), compare=False, repr=False)
    results: tuple = field(default=(), compare=False, repr=False)

    @property
    def dnc(self) -> bool:
        return self.success_count == 0

    @property
    def fe_mean(self) -> Optional[float]:
        return float(np.mean(self.successful_fes)) if self.successful_fes else None


def summarize(results: Sequence[RunResult], strategy: str = "", velocity_policy: str = "",
              problem: str = "", placement: str = "") -> ExperimentStatistics:
    if not results:
        raise UsageError("no runs to summarize")
    fes = [r.evaluations for r in results if r.success]
    fits = [float(r.best_fitness) for r in results]
    return ExperimentStatistics(
        strategy=strategy, velocity_policy=velocity_policy, problem=problem,
        placement=placement, runs=len(results), success_count=len(fes),
        fe_best=min(fes) if fes else None,
        fe_median=lower_median(fes) if fes else None,
        fe_worst=max(fes) if fes else None,
        fit_best=min(fits), fit_median=lower_median(fits), fit_worst=max(fits),
        successful_fes=tuple(fes), results=tuple(results),
    )


def run_experiment(spec: ExperimentSpec,
                   progress: Optional[Callable[[int, RunResult], None]] = None) -> ExperimentStatistics:
    problem = spec.resolve_problem()
    build_config(spec)  # validate before spending any evaluations
    results = []
    for k in range(spec.runs):
        res = run_single(spec, k, problem)
        results.append(res)
        if progress is not None:
            progress(k, res)
    name, placement = spec.problem_labels()
    return summarize(results, spec.strategy_label(), spec.velocity_label(), name, placement)


# ---------------------------------------------------------------- FE ratio

@dataclass
class FeRatioReport:
    rho: dict
    fe_ratio: dict
    excluded: list
    notes: list = field(default_factory=list)


def _solved(s: ExperimentStatistics) -> bool:
    # "more than 45 of 50"; scaled to other run counts
    return s.success_count > 0.9 * s.runs


def fe_ratio(results: Iterable[ExperimentStatistics]) -> FeRatioReport:
    """Normalized FE cost of each strategy over the problems it reliably solves.

    A strategy is keyed by ``(strategy, velocity_policy)`` and a problem by
    ``(problem, placement)``.  The per-problem reference cost is the mean of the
    solving strategies' mean FEs.
    """
    results = list(results)
    if not results:
        raise UsageError("fe_ratio needs at least one result")
    table = {}
    for s in results:
        table[(s.strategy, s.velocity_policy), (s.problem, s.placement)] = s
    strategies = sorted({k[0] for k in table})
    problems = sorted({k[1] for k in table})
    solved = {key: s.fe_mean for key, s in table.items() if _solved(s)}
    reference = {}
    for p in problems:
        vals = [solved[(j, p)] for j in strategies if (j, p) in solved]
        if vals:
            reference[p] = float(np.mean(vals))
    rho, ratio, excluded, notes = {}, {}, [], []
    for j in strategies:
        label = j[0] if not j[1] else f"{j[0]}/{j[1]}"
        mine = [p for p in problems if (j, p) in solved]
        rho[label] = len(mine)
        if not mine:
            excluded.append(label)
            notes.append(f"{label}: solved no problem reliably; no FE ratio")
            continue
        ratio[label] = float(sum(solved[(j, p)] / reference[p] for p in mine) / len(mine))
    return FeRatioReport(rho, ratio, excluded, notes)


def emit_fe_ratio(report: FeRatioReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["strategy", "rho", "fe_ratio"])
    for label in sorted(report.rho):
        r = report.fe_ratio.get(label)
        w.writerow([label, report.rho[label], "" if r is None else repr(r)])
    return buf.getvalue()


# ---------------------------------------------------------------- scale-up and alpha sweep

@dataclass
class ScaleUpReport:
    rows: list           # (function, n, success_count, runs, fe_median or None)
    slopes: dict         # function -> fitted log-log slope, or None
    dnc: list            # (function, n) pairs with at least one failed run


def scale_up_study(function_ids: Sequence[str], sizes: Sequence[int] = (20, 50, 100),
                   runs: int = 20, scale: float = 0.8, crossover: float = 0.9,
                   alpha: float = DEFAULT_IP_ALPHA, base_seed: int = 0,
                   budget: int = SCALE_UP_BUDGET, stop_on_failure: bool = False,
                   progress=None) -> ScaleUpReport:
    """Median FEs of DE + IP-S at growing dimension, with the log-log growth slope.

    With ``stop_on_failure`` a (function, n) cell ends at its first failed run;
    its row then reports the runs actually made.
    """
    rows, slopes, dnc = [], {}, []
    for fid in function_ids:
        ns, meds = [], []
        for n in sizes:
            spec = ExperimentSpec(problem=f"{fid}:center", optimizer="de", repair="ip-s",
                                  runs=runs, budget=budget, base_seed=base_seed, alpha=alpha,
                                  n=n, overrides={"scale": scale, "crossover": crossover})
            problem = spec.resolve_problem()
            results = []
            for k in range(runs):
                results.append(run_single(spec, k, problem))
                if stop_on_failure and not results[-1].success:
                    break
            st = summarize(results)
            rows.append((fid, n, st.success_count, st.runs, st.fe_median))
            if st.success_count < runs:
                dnc.append((fid, n))
            elif st.fe_median is not None:
                ns.append(n)
                meds.append(st.fe_median)
            if progress is not None:
                progress(fid, n, st)
        slopes[fid] = log_log_slope(ns, meds) if len(ns) >= 2 else None
    return ScaleUpReport(rows, slopes, dnc)


def emit_scale_up(report: ScaleUpReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["function", "n", "success_count", "runs", "fe_median", "slope"])
    for fid, n, sc, runs, med in report.rows:
        slope = report.slopes.get(fid)
        w.writerow([fid, n, sc, runs, "" if med is None else med,
                    "" if slope is None else repr(slope)])
    return buf.getvalue()


def alpha_sweep(spec: ExperimentSpec, alphas: Sequence[float] = (0.1, 1.0, 10.0, 1000.0),
                progress=None) -> list:
    if not parse_repair_kind(spec.repair).is_ip:
        raise UsageError("an alpha sweep needs ip-c or ip-s")
    out = []
    for a in alphas:
        st = run_experiment(replace(spec, alpha=float(a)))
        out.append(st)
        if progress is not None:
            progress(a, st)
    return out


# ---------------------------------------------------------------- tables and traces

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _row(s: ExperimentStatistics) -> list:
    return [s.strategy, s.velocity_policy, s.problem, s.placement, s.success_count,
            s.fe_best, s.fe_median, s.fe_worst, s.fit_best, s.fit_median, s.fit_worst,
            int(s.dnc)]


def emit_table(stats: Iterable[ExperimentStatistics], fmt: str = "csv") -> str:
    """Render statistics as CSV or a markdown table; empty FE cells mark DNC rows."""
    stats = list(stats)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TABLE_COLUMNS)
        for s in stats:
            w.writerow([_fmt(v) for v in _row(s)])
        return buf.getvalue()
    if fmt == "markdown":
        lines = ["| " + " | ".join(TABLE_COLUMNS) + " |",
                 "|" + "|".join("---" for _ in TABLE_COLUMNS) + "|"]
        for s in stats:
            cells = [_fmt(v) for v in _row(s)]
            if s.dnc:
                cells[8:11] = [f"*{c}*" for c in cells[8:11]]
            lines.append("| " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"
    raise UsageError(f"unknown table format {fmt!r} (expected csv or markdown)")


def parse_table(text: str, runs: int = DEFAULT_RUNS) -> list:
    """Read statistics back from :func:`emit_table` CSV output."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        return []
    if tuple(reader.fieldnames) != TABLE_COLUMNS:
        raise UsageError("unexpected table columns")

    def opt_int(v):
        return int(v) if v != "" else None

    out = []
    for row in reader:
        out.append(ExperimentStatistics(
            strategy=row["strategy"], velocity_policy=row["velocity_policy"],
            problem=row["problem"], placement=row["placement"], runs=runs,
            success_count=int(row["success_count"]),
            fe_best=opt_int(row["fe_best"]), fe_median=opt_int(row["fe_median"]),
            fe_worst=opt_int(row["fe_worst"]),
            fit_best=float(row["fit_best"]), fit_median=float(row["fit_median"]),
            fit_worst=float(row["fit_worst"]),
        ))
    return out


def emit_trace(result: RunResult) -> str:
    """Improvement-only convergence trace as CSV."""
    if result.trace is None:
        raise UsageError("run was made without trace recording")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["evaluations", "best_fitness"])
    for fe, best in result.trace:
        w.writerow([int(fe), repr(float(best))])
    return buf.getvalue()


def log_log_slope(ns: Sequence[float], values: Sequence[float]) -> float:
    if len(ns) < 2 or any(v <= 0 for v in values):
        raise UsageError("slope needs two or more positive points")
    return float(np.polyfit(np.log(ns), np.log(values), 1)[0])
