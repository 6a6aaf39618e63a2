"""Benchmark harness: run one problem, list the builtins, or run the suite.

Every run writes a trace CSV, a text summary, and a convergence figure into
the output directory (``--out`` or the MMP_NLP_OUT environment variable).
Exit codes for ``run``: 0 converged, 2 diverged, 3 iteration budget, 4 inner
solver failure, 1 config or I/O error.
"""
from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

from . import diagnostics, report
from .config import ConfigError, RunConfig, load_config
from .methods import MethodResult, solve_problem
from .mmp import CONVERGED, DIVERGED, MAX_ITERS, SUBPROBLEM_FAILURE
from .poly import NlpProblem
from .problems import BUILTIN_PROBLEMS, BuiltinProblem, get_builtin, list_problems

EXIT_CODES = {CONVERGED: 0, DIVERGED: 2, MAX_ITERS: 3, SUBPROBLEM_FAILURE: 4}


def _config_from_builtin(bp: BuiltinProblem, method: Optional[str]) -> tuple[RunConfig, NlpProblem]:
    method = method or bp.methods[0]
    if method not in bp.methods:
        raise ConfigError(
            f"method {method!r} is not applicable to builtin {bp.name!r} "
            f"(applicable: {', '.join(bp.methods)})"
        )
    cfg = RunConfig(
        name=bp.name,
        source="builtin",
        method=method,
        x0=bp.x0.copy(),
        feas_tol=bp.feas_tol,
    )
    return cfg, bp.build()


def _resolve(problem_arg: str, method: Optional[str]) -> tuple[RunConfig, NlpProblem, Optional[BuiltinProblem]]:
    if problem_arg in {bp.name for bp in BUILTIN_PROBLEMS}:
        bp = get_builtin(problem_arg)
        cfg, problem = _config_from_builtin(bp, method)
        return cfg, problem, bp
    cfg, problem = load_config(problem_arg)
    if method is not None:
        cfg.method = method
    return cfg, problem, None


def _out_dir(arg: Optional[str]) -> Path:
    out = Path(arg) if arg else Path(os.environ.get("MMP_NLP_OUT", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _execute(cfg: RunConfig, problem: NlpProblem, out: Path, figures: bool) -> MethodResult:
    result = solve_problem(
        problem, cfg.method, cfg.x0, stop=cfg.stop_criteria(), **cfg.solver_params()
    )
    rate = None
    if len(result.run.points) >= 10:
        rate = diagnostics.estimate_rate(result.run.points, result.run.final.x)
    stem = f"{cfg.name}_{cfg.method}"
    report.write_trace_csv(out / f"{stem}_trace.csv", result.run.trace)
    (out / f"{stem}_summary.txt").write_text(
        report.summary_text(cfg.name, result, rate, seed=cfg.seed), encoding="utf-8"
    )
    if figures and result.run.trace:
        report.render_figure(out / f"{stem}_convergence.png", result.run.trace, f"{cfg.name} / {cfg.method}")
    return result


def cmd_run(args) -> int:
    try:
        cfg, problem, _ = _resolve(args.problem, args.method)
        out = _out_dir(args.out)
        result = _execute(cfg, problem, out, not args.no_figures)
    except (ConfigError, ValueError, KeyError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    run = result.run
    print(f"{cfg.name} [{cfg.method}]: {run.status} after {len(run.trace)} iterations")
    if run.failure_message:
        print(f"  {run.failure_message}")
    if result.kkt is not None:
        k = result.kkt
        print(
            f"  kkt residuals: stationarity {k.stationarity:.3e}, "
            f"feasibility {k.feasibility:.3e}, complementarity {k.complementarity:.3e}"
        )
    print(f"  outputs in {out}")
    return EXIT_CODES[run.status]


def cmd_list(_args) -> int:
    print(list_problems())
    return 0


def run_suite(out: Path, figures: bool = True, jobs: int = 1):
    """Run every builtin with every applicable method; returns row dicts."""
    tasks = [(bp, method) for bp in BUILTIN_PROBLEMS for method in bp.methods]

    def one(task):
        bp, method = task
        cfg, problem = _config_from_builtin(bp, method)
        try:
            result = _execute(cfg, problem, out, figures)
            status = result.run.status
            iters = len(result.run.trace)
            kkt = result.kkt
        except ValueError as err:
            # applicability errors surface as rows, not crashes
            return {"problem": bp.name, "method": method, "status": f"error: {err}",
                    "iterations": 0, "kkt": None, "expected": bp.expected_status}
        return {"problem": bp.name, "method": method, "status": status,
                "iterations": iters, "kkt": kkt, "expected": bp.expected_status}

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(one, tasks))
    else:
        rows = [one(t) for t in tasks]
    return rows


def suite_table(rows) -> str:
    header = f"{'problem':<28} {'method':<9} {'status':<20} {'iters':>7}  {'kkt stationarity':>17}"
    lines = [header, "-" * len(header)]
    for row in rows:
        kkt = row["kkt"]
        stat = f"{kkt.stationarity:.6e}" if kkt is not None else "-"
        lines.append(
            f"{row['problem']:<28} {row['method']:<9} {row['status']:<20} {row['iterations']:>7}  {stat:>17}"
        )
    return "\n".join(lines)


def cmd_suite(args) -> int:
    try:
        out = _out_dir(args.out)
        rows = run_suite(out, figures=not args.no_figures, jobs=args.jobs)
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    table = suite_table(rows)
    print(table)
    (out / "suite_summary.txt").write_text(table + "\n", encoding="utf-8")
    mismatched = [r for r in rows if r["status"] != r["expected"]]
    if mismatched:
        print(f"\n{len(mismatched)} run(s) did not end in their expected status", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmsqp",
        description="Benchmark harness for model-minimization SQP solvers",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one builtin problem or config file")
    p_run.add_argument("problem", help="builtin name or path to a key=value config")
    p_run.add_argument("--method", choices=["mb", "esqm", "sl1qp", "gradproj"], default=None)
    p_run.add_argument("--out", default=None, help="output directory (default $MMP_NLP_OUT or ./out)")
    p_run.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    p_run.set_defaults(func=cmd_run)

    p_list = sub.add_parser("list", help="list builtin problems")
    p_list.set_defaults(func=cmd_list)

    p_suite = sub.add_parser("suite", help="run all builtins with all applicable methods")
    p_suite.add_argument("--out", default=None)
    p_suite.add_argument("--no-figures", action="store_true")
    p_suite.add_argument("--jobs", type=int, default=1, help="worker threads")
    p_suite.set_defaults(func=cmd_suite)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
