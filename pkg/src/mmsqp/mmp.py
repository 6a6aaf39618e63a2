"""Abstract model-minimization loop with descent and sandwich diagnostics.

Each method supplies an oracle that, at a point x, minimizes its strongly
convex upper model and returns the minimizer together with the model value
(the value function F) and the certified inner solution.  The loop iterates
``x_{k+1} = p(x_k)`` until the step norm collapses, the iterates escape a
divergence radius, or the iteration budget runs out, recording a full trace.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .subproblems import SubproblemSolution

CONVERGED = "converged"
DIVERGED = "diverged"
MAX_ITERS = "max_iters"
SUBPROBLEM_FAILURE = "subproblem_failure"


class SubproblemError(RuntimeError):
    """Inner solve did not certify; wraps the failed solution."""

    def __init__(self, message: str, solution: Optional[SubproblemSolution] = None):
        super().__init__(message)
        self.solution = solution


@dataclass
class OracleStep:
    """One oracle evaluation: next iterate, model value, inner certificate."""

    y: np.ndarray
    model_value: float
    solution: SubproblemSolution
    f_value: float
    merit_value: float
    kkt_stationarity: float
    max_violation: float


class ModelOracle:
    """Interface every method driver implements.

    ``solve_model`` is pure: it minimizes the current upper model at x and
    must satisfy model(x, x) = merit(x).  ``after_step`` is the driver hook
    run once per accepted step (penalty parameter updates live there), so
    diagnostics can call ``solve_model`` without perturbing the run.
    """

    @property
    def mu(self) -> float:
        raise NotImplementedError

    @property
    def beta(self) -> Optional[float]:
        return None

    def merit(self, x) -> float:
        raise NotImplementedError

    def solve_model(self, x) -> OracleStep:
        raise NotImplementedError

    def after_step(self, k: int, x, y) -> None:
        return None


@dataclass
class StopCriteria:
    tol_step: float = 1e-9
    max_iters: int = 100_000
    divergence_radius: float = 1e6

    def __post_init__(self):
        if self.tol_step <= 0 or self.max_iters <= 0 or self.divergence_radius <= 0:
            raise ValueError("stop criteria must all be positive")


@dataclass
class MmpState:
    x: np.ndarray
    k: int
    last_step_norm: float
    F_value: float
    merit_value: float


@dataclass
class TraceRecord:
    """Per-iteration scalars; the fields double as the trace CSV columns."""

    k: int
    merit: float
    f: float
    F: float
    step_norm: float
    beta: float
    max_constraint_violation: float
    subproblem_iters: int
    kkt_stationarity: float

    CSV_FIELDS = (
        "k", "merit", "f", "F", "step_norm", "beta",
        "max_constraint_violation", "subproblem_iters", "kkt_stationarity",
    )


@dataclass
class RunResult:
    status: str
    final: MmpState
    trace: list[TraceRecord]
    points: list[np.ndarray]
    mus: list[float]
    last_solution: Optional[SubproblemSolution] = None
    failure_message: str = ""


def run_mmp(
    oracle: ModelOracle,
    x0,
    stop: StopCriteria,
    monitors: Sequence[Callable[[int, np.ndarray, OracleStep], None]] = (),
) -> RunResult:
    """Iterate the oracle's minimization map from x0 until a stop fires.

    Statuses: ``converged`` (step norm <= tol_step), ``diverged`` (iterate
    norm past the divergence radius), ``max_iters``, ``subproblem_failure``.
    """
    x = np.asarray(x0, dtype=float).copy()
    trace: list[TraceRecord] = []
    mus: list[float] = []
    points = [x.copy()]
    last_solution = None
    status = MAX_ITERS
    failure_message = ""

    for k in range(stop.max_iters):
        if float(np.linalg.norm(x)) > stop.divergence_radius:
            status = DIVERGED
            break
        try:
            step = oracle.solve_model(x)
        except SubproblemError as err:
            status = SUBPROBLEM_FAILURE
            failure_message = str(err)
            last_solution = err.solution
            break
        step_norm = float(np.linalg.norm(step.y - x))
        beta = oracle.beta
        trace.append(
            TraceRecord(
                k=k,
                merit=step.merit_value,
                f=step.f_value,
                F=step.model_value,
                step_norm=step_norm,
                beta=0.0 if beta is None else float(beta),
                max_constraint_violation=step.max_violation,
                subproblem_iters=step.solution.inner_iters,
                kkt_stationarity=step.kkt_stationarity,
            )
        )
        mus.append(oracle.mu)
        last_solution = step.solution
        for mon in monitors:
            mon(k, x, step)
        oracle.after_step(k, x, step.y)
        x = step.y.copy()
        points.append(x.copy())
        # a beta update changes the model, so the fixed-point test is stale
        beta_moved = oracle.beta is not None and float(oracle.beta) != trace[-1].beta
        if step_norm <= stop.tol_step and not beta_moved:
            status = CONVERGED
            break

    final = MmpState(
        x=x,
        k=len(trace),
        last_step_norm=trace[-1].step_norm if trace else 0.0,
        F_value=trace[-1].F if trace else float("nan"),
        merit_value=oracle.merit(x),
    )
    return RunResult(status, final, trace, points, mus, last_solution, failure_message)


def value_function(oracle: ModelOracle, x) -> float:
    """F(x): the optimal value of the model anchored at x (one oracle call)."""
    return oracle.solve_model(x).model_value


def sandwich_check(trace: Sequence[TraceRecord], mus: Sequence[float], tol_check: float = 1e-9) -> list[int]:
    """Indices where F(x_k) + (mu/2)step^2 <= merit(x_k) <= F(x_{k-1}) fails.

    The cross-iteration comparison is only meaningful while the penalty
    weight is unchanged, so pairs straddling a beta update are skipped.
    """
    bad = []
    for k in range(1, len(trace)):
        rec, prev = trace[k], trace[k - 1]
        ok = rec.F + 0.5 * mus[k] * rec.step_norm**2 <= rec.merit + tol_check
        if prev.beta == rec.beta:
            ok = ok and rec.merit <= prev.F + tol_check
        if not ok:
            bad.append(k)
    return bad


def descent_check(trace: Sequence[TraceRecord], mus: Sequence[float], tol_check: float = 1e-9) -> list[int]:
    """Indices where merit(x_k) >= merit(x_{k+1}) + (mu/2)step^2 fails.

    Comparisons across a beta update are skipped, as the merit changes
    meaning when the penalty weight moves.
    """
    bad = []
    for k in range(len(trace) - 1):
        rec, nxt = trace[k], trace[k + 1]
        if rec.beta != nxt.beta:
            continue
        if rec.merit < nxt.merit + 0.5 * mus[k] * rec.step_norm**2 - tol_check:
            bad.append(k)
    return bad
