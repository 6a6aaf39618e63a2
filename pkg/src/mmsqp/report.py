"""Run artifacts: trace CSV, text summary, and convergence figures.

Traces are written with 17 significant digits so reruns are byte-identical.
Figures are a convenience rendering of the same columns and never feed back
into any computation.
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Optional, Sequence

from .diagnostics import RateEstimate
from .methods import MethodResult
from .mmp import TraceRecord


def _fmt(value: float) -> str:
    return f"{float(value):.17g}"


def trace_csv_text(trace: Sequence[TraceRecord]) -> str:
    lines = [",".join(TraceRecord.CSV_FIELDS)]
    for rec in trace:
        lines.append(
            ",".join(
                [
                    str(rec.k),
                    _fmt(rec.merit),
                    _fmt(rec.f),
                    _fmt(rec.F),
                    _fmt(rec.step_norm),
                    _fmt(rec.beta),
                    _fmt(rec.max_constraint_violation),
                    str(rec.subproblem_iters),
                    _fmt(rec.kkt_stationarity),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def write_trace_csv(path, trace: Sequence[TraceRecord]) -> None:
    Path(path).write_text(trace_csv_text(trace), encoding="utf-8")


def summary_text(
    problem_name: str,
    result: MethodResult,
    rate: Optional[RateEstimate] = None,
    seed: int = 0,
) -> str:
    run = result.run
    lines = [
        f"problem = {problem_name}",
        f"method = {result.method}",
        f"status = {run.status}",
        f"iterations = {len(run.trace)}",
        f"seed = {seed}",
        "final_x = " + " ".join(_fmt(v) for v in run.final.x),
        f"final_merit = {_fmt(run.final.merit_value)}",
        f"final_step_norm = {_fmt(run.final.last_step_norm)}",
        f"mu_final = {_fmt(result.mu_final)}",
    ]
    if result.lam is not None:
        lines.append(f"lambda = {_fmt(result.lam)}")
    if result.lam_prime is not None:
        lines.append(f"lambda_prime = {_fmt(result.lam_prime)}")
    if result.penalty_state is not None:
        ps = result.penalty_state
        lines.append(f"beta_final = {_fmt(ps.beta)}")
        lines.append(f"beta_updates = {ps.update_count}")
        lines.append(f"beta_stabilized_at = {ps.stabilized_at if ps.stabilized_at is not None else 'none'}")
    if result.kkt is not None:
        k = result.kkt
        lines.append(f"kkt_stationarity = {_fmt(k.stationarity)}")
        lines.append(f"kkt_feasibility = {_fmt(k.feasibility)}")
        lines.append(f"kkt_complementarity = {_fmt(k.complementarity)}")
        lines.append("multipliers = " + (" ".join(_fmt(v) for v in k.multipliers) if k.multipliers.size else "none"))
    if rate is not None:
        lines.append(f"rate_regime = {rate.regime}")
        lines.append(f"rate_parameter = {_fmt(rate.parameter) if rate.parameter is not None else 'none'}")
        lines.append(f"rate_fit_quality = {_fmt(rate.fit_quality)}")
        lines.append(f"rate_tail_start = {rate.tail_start}")
    else:
        lines.append("rate_regime = n/a (trace too short)")
    if run.failure_message:
        lines.append(f"failure = {run.failure_message}")
    return "\n".join(lines) + "\n"


def render_figure(path, trace: Sequence[TraceRecord], title: str) -> None:
    """Render merit/value, step norms, residuals and beta to one PNG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ks = [rec.k for rec in trace]
    fig, axes = plt.subplots(2, 2, figsize=(9.5, 6.5))
    fig.suptitle(title)

    ax = axes[0][0]
    ax.plot(ks, [rec.merit for rec in trace], label="merit", lw=1.4)
    ax.plot(ks, [rec.F for rec in trace], label="model value F", lw=1.0, ls="--")
    ax.set_xlabel("iteration")
    ax.legend(fontsize=8)
    ax.set_title("merit and value function", fontsize=9)

    ax = axes[0][1]
    steps = [rec.step_norm if rec.step_norm > 0 else math.nan for rec in trace]
    ax.semilogy(ks, steps, lw=1.2, color="tab:orange")
    ax.set_xlabel("iteration")
    ax.set_title("step norm", fontsize=9)

    ax = axes[1][0]
    stat = [rec.kkt_stationarity if rec.kkt_stationarity > 0 else math.nan for rec in trace]
    viol = [rec.max_constraint_violation if rec.max_constraint_violation > 0 else math.nan for rec in trace]
    ax.semilogy(ks, stat, lw=1.2, label="stationarity")
    ax.semilogy(ks, viol, lw=1.2, label="violation")
    ax.set_xlabel("iteration")
    ax.legend(fontsize=8)
    ax.set_title("KKT residuals", fontsize=9)

    ax = axes[1][1]
    ax.step(ks, [rec.beta for rec in trace], where="post", lw=1.2, color="tab:green")
    ax.set_xlabel("iteration")
    ax.set_title("penalty weight beta", fontsize=9)

    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
