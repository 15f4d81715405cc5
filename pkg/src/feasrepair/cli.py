"""Command-line entry points: ``bench`` (experiments) and ``solve`` (single constrained run).

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 every run failed while
``--expect-success`` was given.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional, Sequence

import numpy as np
import yaml

from . import harness
from .benchmarks import ACTIVE_CONSTRAINTS, active_set_residuals
from .core import EvaluationError, UsageError

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_DNC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> list:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _override(text: str) -> tuple:
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        return key.strip(), json.loads(value)
    except json.JSONDecodeError:
        return key.strip(), value


def _write(text: str, path: Optional[str]) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _check_writable(*paths: Optional[str]) -> None:
    """Fail before any compute is spent when an output directory is missing."""
    for path in paths:
        if path is None or path == "-":
            continue
        folder = os.path.dirname(os.path.abspath(path))
        if not os.path.isdir(folder) or not os.access(folder, os.W_OK):
            raise OSError(f"cannot write to {path}")


def _add_run_options(p: argparse.ArgumentParser, problem_required: bool = True) -> None:
    p.add_argument("--problem", required=problem_required,
                   help="catalog id, e.g. elp, elp:center, sphere-ack-2, tp5")
    p.add_argument("--optimizer", default="de", choices=sorted(harness.OPTIMIZERS))
    p.add_argument("--repair", default="ip-s")
    p.add_argument("--velocity", default=None, help="PSO velocity policy")
    p.add_argument("--runs", type=int, default=harness.DEFAULT_RUNS)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=1.2, help="IP shape parameter")
    p.add_argument("--dim", type=int, default=20)
    p.add_argument("--set", dest="overrides", type=_override, action="append", default=[],
                   metavar="KEY=VALUE", help="optimizer parameter override (repeatable)")
    p.add_argument("--expect-success", action="store_true",
                   help="exit 3 if no run succeeds")


def _spec(args) -> harness.ExperimentSpec:
    return harness.ExperimentSpec(
        problem=args.problem, optimizer=args.optimizer, repair=args.repair,
        velocity=args.velocity, runs=args.runs, budget=args.budget, threshold=args.threshold,
        base_seed=args.seed, alpha=args.alpha, n=args.dim, overrides=dict(args.overrides))


def _cmd_run(args) -> int:
    _check_writable(args.out)
    st = harness.run_experiment(_spec(args))
    _write(harness.emit_table([st], args.format), args.out)
    return EXIT_DNC if args.expect_success and st.dnc else EXIT_OK


def _load_config(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        try:
            cfg = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise UsageError(f"cannot parse {path}: {exc}") from None
    if not isinstance(cfg, dict) or "problems" not in cfg or "strategies" not in cfg:
        raise UsageError("config needs 'problems' and 'strategies' lists")
    return cfg


def matrix_specs(cfg: dict) -> list:
    """Expand a matrix config into experiment specs (strategies outer, problems inner)."""
    common = {"runs": cfg.get("runs", harness.DEFAULT_RUNS), "budget": cfg.get("budget"),
              "threshold": cfg.get("threshold"), "base_seed": cfg.get("seed", 0),
              "n": cfg.get("dim", 20)}
    specs = []
    for strat in cfg["strategies"]:
        if not isinstance(strat, dict) or "repair" not in strat:
            raise UsageError(f"strategy entry needs a 'repair' key: {strat!r}")
        for prob in cfg["problems"]:
            specs.append(harness.ExperimentSpec(
                problem=str(prob), optimizer=strat.get("optimizer", "de"),
                repair=strat["repair"], velocity=strat.get("velocity"),
                alpha=float(strat.get("alpha", 1.2)), overrides=strat.get("params", {}),
                **common))
    return specs


def _cmd_matrix(args) -> int:
    _check_writable(args.out, args.ratio_out)
    specs = matrix_specs(_load_config(args.config))
    stats = []
    for spec in specs:
        stats.append(harness.run_experiment(spec))
        if args.verbose:
            s = stats[-1]
            print(f"{s.strategy} {s.velocity_policy} {s.problem} {s.placement}: "
                  f"{s.success_count}/{s.runs}", file=sys.stderr)
    _write(harness.emit_table(stats, args.format), args.out)
    report = harness.fe_ratio(stats)
    _write(harness.emit_fe_ratio(report), args.ratio_out)
    for note in report.notes:
        print(note, file=sys.stderr)
    if args.expect_success and all(s.dnc for s in stats):
        return EXIT_DNC
    return EXIT_OK


def _cmd_scaleup(args) -> int:
    _check_writable(args.out)
    report = harness.scale_up_study(args.functions.split(","), args.sizes, runs=args.runs,
                                    base_seed=args.seed, budget=args.budget,
                                    stop_on_failure=args.stop_on_failure)
    _write(harness.emit_scale_up(report), args.out)
    for fid, n in report.dnc:
        print(f"{fid} n={n}: not every run succeeded", file=sys.stderr)
    if args.expect_success and all(r[2] == 0 for r in report.rows):
        return EXIT_DNC
    return EXIT_OK


def _cmd_alpha_sweep(args) -> int:
    _check_writable(args.out)
    stats = harness.alpha_sweep(_spec(args), args.alphas)
    _write(harness.emit_table(stats, args.format), args.out)
    if args.expect_success and all(s.dnc for s in stats):
        return EXIT_DNC
    return EXIT_OK


def bench_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bench", description="Run repair-strategy experiments.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="one strategy on one problem")
    _add_run_options(run)
    run.add_argument("--format", choices=("csv", "markdown"), default="csv")
    run.add_argument("--out", default=None)
    run.set_defaults(func=_cmd_run)

    mat = sub.add_parser("matrix", help="strategy x problem grid from a YAML/JSON config")
    mat.add_argument("--config", required=True)
    mat.add_argument("--format", choices=("csv", "markdown"), default="csv")
    mat.add_argument("--out", default=None)
    mat.add_argument("--ratio-out", default=None, help="FE-ratio CSV (default stdout)")
    mat.add_argument("--expect-success", action="store_true")
    mat.add_argument("-v", "--verbose", action="store_true")
    mat.set_defaults(func=_cmd_matrix)

    sc = sub.add_parser("scaleup", help="DE + IP-S growth of FEs with dimension")
    sc.add_argument("--functions", default="elp,sch,ack,ros")
    sc.add_argument("--sizes", type=_ints, default=[20, 50, 100])
    sc.add_argument("--runs", type=int, default=20)
    sc.add_argument("--seed", type=int, default=0)
    sc.add_argument("--budget", type=int, default=harness.SCALE_UP_BUDGET)
    sc.add_argument("--stop-on-failure", action="store_true",
                    help="end a (function, n) cell at its first failed run")
    sc.add_argument("--out", default=None)
    sc.add_argument("--expect-success", action="store_true")
    sc.set_defaults(func=_cmd_scaleup)

    sw = sub.add_parser("alpha-sweep", help="vary the IP shape parameter")
    _add_run_options(sw)
    sw.add_argument("--alphas", type=_floats, default=[0.1, 1.0, 10.0, 1000.0])
    sw.add_argument("--format", choices=("csv", "markdown"), default="csv")
    sw.add_argument("--out", default=None)
    sw.set_defaults(func=_cmd_alpha_sweep)
    return p


def solve_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="solve", description="Single DE run on a constrained engineering problem.")
    p.add_argument("--problem", required=True, choices=sorted(ACTIVE_CONSTRAINTS))
    p.add_argument("--trace", default=None, help="write the convergence trace CSV here")
    p.add_argument("--repair", default="ip-s", choices=("ip-s", "ip-c"))
    p.add_argument("--budget", type=int, default=harness.CONSTRAINED_BUDGET)
    p.add_argument("--threshold", type=float, default=harness.ENGINEERING_THRESHOLD)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=1.2)
    return p


def _guard(fn, args) -> int:
    try:
        return fn(args)
    except (UsageError, EvaluationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


def bench_main(argv: Optional[Sequence[str]] = None) -> int:
    args = bench_parser().parse_args(argv)
    return _guard(args.func, args)


def _cmd_solve(args) -> int:
    spec = harness.ExperimentSpec(problem=args.problem, optimizer="de", repair=args.repair,
                                  runs=1, budget=args.budget, threshold=args.threshold,
                                  base_seed=args.seed, alpha=args.alpha,
                                  record_trace=args.trace is not None)
    _check_writable(args.trace)
    problem = spec.resolve_problem()
    res = harness.run_single(spec, 0, problem)
    if args.trace is not None:
        _write(harness.emit_trace(res), args.trace)
    point = np.array2string(res.best_point, precision=6, separator=", ")
    print(f"problem        {problem.name}")
    print(f"best_fitness   {res.best_fitness!r}")
    print(f"evaluations    {res.evaluations}")
    print(f"success        {int(res.success)}")
    print(f"best_point     {point}")
    resid = active_set_residuals(problem, res.best_point)
    active = set(ACTIVE_CONSTRAINTS[problem.name])
    for name, value in resid.items():
        print(f"{name:<4} residual {value:.3e}{'  (active)' if name in active else ''}")
    return EXIT_OK


def solve_main(argv: Optional[Sequence[str]] = None) -> int:
    args = solve_parser().parse_args(argv)
    return _guard(_cmd_solve, args)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "solve":
        return solve_main(argv[1:])
    return bench_main(argv)


if __name__ == "__main__":
    sys.exit(main())
