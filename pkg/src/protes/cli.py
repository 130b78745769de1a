"""Command-line entry point: ``protes run | bench | sweep``.

Outputs are JSON-lines traces (first line is a header echoing the full
configuration), ``summary.json`` and CSV tables. ``--plot`` additionally
renders PNG figures next to them. ``PROTES_THREADS`` caps the number of
repetitions run concurrently.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .constraints import is_min_run_admissible
from .learner import ProtesConfig, RunTrace, protes_minimize
from .problems import (
    ANALYTIC_FUNCTIONS,
    QUBO_KINDS,
    Problem,
    analytic_problem,
    brute_force_min,
    constrained_control_problem,
    control_problem,
    planted_problem,
    qubo_problem,
)
from .problems.qubo import ALIASES as QUBO_ALIASES

log = logging.getLogger("protes")

BRUTE_FORCE_LIMIT = 1 << 20


class UsageError(Exception):
    """Bad problem name or flag value; reported with exit status 2."""


@dataclass
class RunConfig:
    problem: str
    d: int = 7
    grid: int = 16
    T: int = 25
    substeps: int = 10
    interval: float = 1.0
    constraint_l: int = 3
    protes: ProtesConfig = field(default_factory=ProtesConfig)
    reps: int = 1
    mode: str = "min"
    out: Path = Path("protes_out")
    filter: bool = False
    timing: bool = True

    def __post_init__(self):
        if self.reps < 1:
            raise UsageError("--reps must be >= 1")
        if self.mode not in ("min", "max"):
            raise UsageError("--mode must be 'min' or 'max'")


@dataclass
class Job:
    label: str
    problem: Problem
    config: ProtesConfig
    init: object = None
    admissible: object = None
    freeze_zeros: bool = False
    negate: bool = False


@dataclass
class JobResult:
    job: Job
    best_x: Optional[list]
    best_y: float
    trace: RunTrace
    wall_time_s: float


def build_problem(cfg: RunConfig, seed: int):
    """Return ``(problem, init, admissible_fn)`` for the selector in ``cfg``."""
    name = cfg.problem
    if name in ANALYTIC_FUNCTIONS:
        return analytic_problem(name, cfg.d, cfg.grid), None, None
    if name in QUBO_KINDS or name in QUBO_ALIASES:
        # instance seed follows the run seed so repetitions are independent instances
        return qubo_problem(name, cfg.d, seed), None, None
    if name == "control":
        return control_problem(cfg.T, cfg.substeps, interval=cfg.interval), None, None
    if name == "control_constrained":
        prob, ind = constrained_control_problem(cfg.T, cfg.constraint_l, cfg.substeps, cfg.interval)
        l = cfg.constraint_l
        return prob, ind, (lambda X: is_min_run_admissible(X, l))
    if name == "planted":
        return planted_problem(cfg.d, cfg.grid, seed), None, None
    raise UsageError(f"unknown problem {name!r}")


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("PROTES_THREADS", "1")))
    except ValueError:
        return 1


def execute(job: Job) -> JobResult:
    problem = job.problem.negated() if job.negate else job.problem
    x, y, trace = protes_minimize(
        problem,
        job.config,
        job.init,
        admissible=job.admissible,
        freeze_zeros=job.freeze_zeros,
    )
    if job.negate:
        y = -y
        for r in trace.records:
            r.best_y = -r.best_y
    wall = trace.records[-1].t_s if trace.records else 0.0
    return JobResult(job, None if x is None else [int(v) for v in x], float(y), trace, wall)


def execute_all(jobs: list[Job]) -> list[JobResult]:
    n = min(_workers(), len(jobs))
    if n <= 1:
        return [execute(j) for j in jobs]
    with ThreadPoolExecutor(n) as pool:
        return list(pool.map(execute, jobs))


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    tmp.replace(path)


def _strip_timing(res: JobResult) -> None:
    for r in res.trace.records:
        r.t_s = 0.0
    res.wall_time_s = 0.0


def _header(res: JobResult, extra: dict) -> dict:
    return {
        "config": asdict(res.job.config),
        "problem": res.job.problem.describe(),
        "mode": "max" if res.job.negate else "min",
        "freeze_zeros": res.job.freeze_zeros,
        "filter": res.job.admissible is not None,
        **extra,
    }


def _summary(results: list[JobResult], mode: str) -> dict:
    bests = [r.best_y for r in results]
    pick = max if mode == "max" else min
    return {
        "mean_best": float(np.mean(bests)),
        ("max_best" if mode == "max" else "min_best"): float(pick(bests)),
        "per_seed": [
            {
                "seed": r.job.config.seed,
                "best_y": r.best_y,
                "best_x": r.best_x,
                "evals": r.trace.records[-1].evals if r.trace.records else 0,
            }
            for r in results
        ],
    }


def make_jobs(cfg: RunConfig, label: Optional[str] = None) -> list[Job]:
    jobs = []
    for rep in range(cfg.reps):
        seed = cfg.protes.seed + rep
        problem, init, admissible = build_problem(cfg, seed)
        jobs.append(
            Job(
                label=label or problem.name,
                problem=problem,
                config=replace(cfg.protes, seed=seed),
                init=init,
                admissible=admissible if cfg.filter else None,
                freeze_zeros=init is not None,
                negate=cfg.mode == "max",
            )
        )
    return jobs


def run(cfg: RunConfig, plot: bool = False) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    results = execute_all(make_jobs(cfg))
    for res in results:
        if not cfg.timing:
            _strip_timing(res)
        seed = res.job.config.seed
        text = res.trace.to_jsonl(_header(res, {"run": _run_fields(cfg)}))
        _write_atomic(out / f"trace_seed{seed}.jsonl", text)
    summary = _summary(results, cfg.mode)
    _write_atomic(out / "summary.json", json.dumps(summary, indent=2) + "\n")
    if plot:
        from .plotting import plot_convergence

        plot_convergence({results[0].job.label: [r.trace for r in results]}, out / "convergence.png")
    log.info("best %s over %d seed(s): %s", cfg.mode, cfg.reps, summary)
    return 0


def _run_fields(cfg: RunConfig) -> dict:
    return {
        "problem": cfg.problem, "d": cfg.d, "grid": cfg.grid, "T": cfg.T,
        "substeps": cfg.substeps, "interval": cfg.interval,
        "constraint_l": cfg.constraint_l, "reps": cfg.reps, "filter": cfg.filter,
    }


# suite -> list of (label, RunConfig overrides); desk-scale defaults
SUITES = {
    "analytic": [(name, {"problem": name, "d": 7, "grid": 16}) for name in ANALYTIC_FUNCTIONS],
    "qubo": [(f"{k}_d50", {"problem": k, "d": 50}) for k in QUBO_KINDS]
    + [(f"{k}_d16", {"problem": k, "d": 16}) for k in QUBO_KINDS],
    "control": [(f"control_T{T}", {"problem": "control", "T": T}) for T in (25, 50, 100)],
    "control_constrained": [
        (f"control_constrained_T{T}", {"problem": "control_constrained", "T": T, "constraint_l": 3})
        for T in (25, 50, 100)
    ],
}
SUITES["all"] = [e for key in ("analytic", "qubo", "control", "control_constrained") for e in SUITES[key]]

BENCH_COLUMNS = ["problem", "seed", "best_y", "evals", "wall_time_s"]


def bench(suite: str, base: RunConfig, plot: bool = False, only: Optional[list[str]] = None) -> int:
    if suite not in SUITES:
        raise UsageError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    entries = SUITES[suite]
    if only:
        entries = [e for e in entries if e[0] in only]
    out = Path(base.out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = []
    for label, overrides in entries:
        cfg = replace(base, **overrides)
        jobs.extend(make_jobs(cfg, label))
    results = execute_all(jobs)
    rows = []
    for res in results:
        if not base.timing:
            _strip_timing(res)
        seed = res.job.config.seed
        _write_atomic(
            out / f"trace_{res.job.label}_seed{seed}.jsonl",
            res.trace.to_jsonl(_header(res, {"suite": suite, "label": res.job.label})),
        )
        rows.append(
            {
                "problem": res.job.label,
                "seed": seed,
                "best_y": repr(res.best_y),
                "evals": res.trace.records[-1].evals if res.trace.records else 0,
                "wall_time_s": f"{res.wall_time_s:.3f}",
            }
        )
    _write_csv(out / "bench.csv", BENCH_COLUMNS, rows)
    if plot:
        from .plotting import plot_convergence

        grouped: dict = {}
        for res in results:
            grouped.setdefault(res.job.label, []).append(res.trace)
        plot_convergence(grouped, out / f"bench_{suite}.png", title=f"suite: {suite}")
    return 0


def _write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    tmp = path.with_suffix(".csv.tmp")
    with open(tmp, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    tmp.replace(path)


SWEEP_KEYS = ("K", "k", "k_gd", "lr", "R")


def sweep(base: RunConfig, grid: dict, plot: bool = False) -> int:
    """Run every combination in ``grid`` (keys from ``SWEEP_KEYS``)."""
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise UsageError("empty hyperparameter grid")
    out = Path(base.out)
    out.mkdir(parents=True, exist_ok=True)
    keys = list(grid)
    optimum = _oracle_optimum(base)
    rows = []
    for values in itertools.product(*(grid[k] for k in keys)):
        try:
            pc = replace(base.protes, **dict(zip(keys, values)))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        results = execute_all(make_jobs(replace(base, protes=pc)))
        summary = _summary(results, base.mode)
        row = {key: getattr(pc, key) for key in SWEEP_KEYS}
        row["mean_best"] = summary["mean_best"]
        row["min_best"] = summary.get("min_best", summary.get("max_best"))
        if optimum is not None:
            row["rel_err"] = abs(summary["mean_best"] - optimum) / max(abs(optimum), 1e-300)
        rows.append(row)
    columns = list(SWEEP_KEYS) + ["mean_best", "min_best"] + (["rel_err"] if optimum is not None else [])
    _write_csv(out / "sweep.csv", columns, rows)
    if plot:
        from .plotting import plot_sweep

        plot_sweep(rows, out / "sweep.png", "rel_err" if optimum is not None else "mean_best")
    return 0


def _oracle_optimum(cfg: RunConfig) -> Optional[float]:
    """Exhaustive optimum for small grids with a single instance (reps == 1)."""
    if cfg.reps != 1:
        return None
    problem, _, admissible = build_problem(cfg, cfg.protes.seed)
    if int(np.prod(problem.shape)) > BRUTE_FORCE_LIMIT or admissible is not None:
        return None
    if cfg.mode == "max":
        return -brute_force_min(problem.negated())[1]
    return brute_force_min(problem)[1]


def _list_of(type_):
    def parse(text):
        if text.strip() == "":
            return []
        return [type_(v) for v in text.split(",")]

    return parse


def _add_common(p: argparse.ArgumentParser, sweepable: bool = False) -> None:
    p.add_argument("--d", type=int, default=None, help="dimension (analytic: 7, QUBO: 50)")
    p.add_argument("--grid", type=int, default=None, help="grid nodes per dimension (16; planted: 4)")
    p.add_argument("--T", type=int, default=25, help="control horizon")
    p.add_argument("--substeps", type=int, default=10, help="RK4 steps per control interval")
    p.add_argument("--interval", type=float, default=1.0, help="time each control value is held")
    p.add_argument("--constraint-l", type=int, default=3, help="minimum run length of ones")
    p.add_argument("--budget", "-M", type=int, default=10_000)
    if sweepable:
        p.add_argument("--K", type=_list_of(int), default=[100])
        p.add_argument("--k", type=_list_of(int), default=[10])
        p.add_argument("--kgd", type=_list_of(int), default=[1])
        p.add_argument("--lr", type=_list_of(float), default=[0.05])
        p.add_argument("--rank", "-R", type=_list_of(int), default=[5])
    else:
        p.add_argument("--K", type=int, default=100)
        p.add_argument("--k", type=int, default=10)
        p.add_argument("--kgd", type=int, default=1)
        p.add_argument("--lr", type=float, default=0.05)
        p.add_argument("--rank", "-R", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--mode", choices=("min", "max"), default="min")
    p.add_argument("--filter", action="store_true", help="drop inadmissible samples from the top-k")
    p.add_argument("--out", type=Path, default=Path("protes_out"))
    p.add_argument("--plot", action="store_true", help="render PNG figures next to the outputs")
    p.add_argument("--no-timing", action="store_true", help="write 0.0 for all timings")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="protes", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="optimise one problem for one or more seeds")
    p_run.add_argument("--problem", required=True)
    _add_common(p_run)

    p_bench = sub.add_parser("bench", help="run a benchmark suite and write bench.csv")
    p_bench.add_argument("--suite", required=True, choices=sorted(SUITES))
    p_bench.add_argument("--only", type=_list_of(str), default=None, help="comma list of suite labels")
    _add_common(p_bench)

    p_sweep = sub.add_parser("sweep", help="hyperparameter grid over one problem")
    p_sweep.add_argument("--problem", required=True)
    _add_common(p_sweep, sweepable=True)
    return parser


def _config_from_args(args, problem: str, **protes_fields) -> RunConfig:
    d = args.d
    if d is None:
        d = 50 if (problem in QUBO_KINDS or problem in QUBO_ALIASES) else (6 if problem == "planted" else 7)
    grid = args.grid if args.grid is not None else (4 if problem == "planted" else 16)
    try:
        pc = ProtesConfig(M=args.budget, seed=args.seed, **protes_fields)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return RunConfig(
        problem=problem, d=d, grid=grid, T=args.T, substeps=args.substeps,
        interval=args.interval, constraint_l=args.constraint_l, protes=pc,
        reps=args.reps, mode=args.mode, out=args.out, filter=args.filter,
        timing=not args.no_timing,
    )


def _validated(args) -> tuple[RunConfig, Optional[dict]]:
    """Build the run configuration, turning any bad value into a UsageError."""
    try:
        if args.command == "bench":
            fields = dict(K=args.K, k=args.k, k_gd=args.kgd, lr=args.lr, R=args.rank)
            return _config_from_args(args, "ackley", **fields), None
        if args.command == "run":
            fields = dict(K=args.K, k=args.k, k_gd=args.kgd, lr=args.lr, R=args.rank)
            grid = None
        else:
            grid = {"K": args.K, "k": args.k, "k_gd": args.kgd, "lr": args.lr, "R": args.rank}
            if any(len(v) == 0 for v in grid.values()):
                raise UsageError("empty hyperparameter grid")
            fields = {key: vals[0] for key, vals in grid.items()}
        cfg = _config_from_args(args, args.problem, **fields)
        build_problem(cfg, cfg.protes.seed)
        return cfg, grid
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg, grid = _validated(args)
        if args.command == "run":
            return run(cfg, plot=args.plot)
        if args.command == "bench":
            return bench(args.suite, cfg, plot=args.plot, only=args.only)
        return sweep(cfg, grid, plot=args.plot)
    except UsageError as exc:
        print(f"protes: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"protes: failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
