"""Independent verification: KKT residuals, qualification checks, rate fits,
and a brute-force grid reference solver for small instances.

Everything here recomputes from raw problem data so it can certify the
solvers rather than echo them.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .poly import NlpProblem, eval_poly_many
from .sets import Simplex, WholeSpace, project_rows, stationarity_residual
from .methods import KktReport

FINITE_STEPS = "finite_steps"
GEOMETRIC = "geometric"
POWER = "power"
INCONCLUSIVE = "inconclusive"


def kkt_residual(problem: NlpProblem, x, lam) -> KktReport:
    """Stationarity, feasibility and complementarity at an arbitrary (x, lam).

    This is the checker the solvers are audited against; it recomputes
    everything from the problem data.
    """
    x = np.asarray(x, dtype=float)
    lam = np.asarray(lam, dtype=float).reshape(-1)
    if lam.size != problem.num_constraints:
        raise ValueError("multiplier vector length must match the constraint count")
    if np.any(lam < 0):
        raise ValueError("multipliers must be nonnegative")
    v = problem.objective.grad(x).copy()
    vals = np.zeros(lam.size)
    for i, ci in enumerate(problem.constraints):
        vals[i] = ci(x)
        v += lam[i] * ci.grad(x)
    stat = stationarity_residual(problem.simple_set, x, v)
    feas = float(max(0.0, np.max(vals))) if vals.size else 0.0
    compl = float(np.max(np.abs(lam * vals))) if vals.size else 0.0
    return KktReport(stat, feas, compl, lam)


@dataclass
class MfqcReport:
    """Distance from the origin to the hull of active constraint gradients."""

    active_set: list[int]
    hull_distance: float
    satisfied: bool
    partial: bool = False  # simple set other than the whole space: hull only


def check_mfqc(problem: NlpProblem, x, active_tol: float = 1e-6) -> MfqcReport:
    """Check the Mangasarian-Fromovitz condition at a feasible point.

    Active set: indices with |f_i(x)| <= active_tol.  The hull distance is
    min over the unit simplex of ||sum u_i grad f_i(x)||, computed by
    projected gradient; the condition holds iff the distance exceeds 1e-8.
    For simple sets other than the whole space only the hull distance of the
    gradients is computed and the report is flagged partial.
    """
    x = np.asarray(x, dtype=float)
    if problem.max_violation(x) > active_tol:
        raise ValueError("x is infeasible beyond active_tol")
    active = [i for i, ci in enumerate(problem.constraints) if abs(ci(x)) <= active_tol]
    partial = not isinstance(problem.simple_set, WholeSpace)
    if not active:
        return MfqcReport(active, float(np.finfo(float).max), True, partial)
    A = np.stack([problem.constraints[i].grad(x) for i in active], axis=1)  # n x k
    u = simplex_min_norm_combination(A)
    dist = float(np.linalg.norm(A @ u))
    return MfqcReport(active, dist, dist > 1e-8, partial)


def simplex_min_norm_combination(A: np.ndarray, iters: int = 20000, tol: float = 1e-14) -> np.ndarray:
    """argmin_{u in unit simplex} ||A u||^2 by projected gradient."""
    k = A.shape[1]
    simplex = Simplex(1.0)
    ata = A.T @ A
    lip = 2.0 * float(np.linalg.norm(ata, 2)) if k else 0.0
    step = 1.0 / max(lip, 1e-12)
    u = np.full(k, 1.0 / k)
    for _ in range(iters):
        grad = 2.0 * ata @ u
        u_next = simplex.project(u - step * grad)
        if float(np.linalg.norm(u_next - u)) <= tol:
            u = u_next
            break
        u = u_next
    return u


@dataclass
class RateEstimate:
    """Tail behaviour of ||x_k - x_ref||: finite, geometric q^k, or power k^-g."""

    regime: str
    parameter: Optional[float]
    fit_quality: float
    tail_start: int


def _r_squared(y: np.ndarray, y_hat: np.ndarray) -> float:
    ss_res = float(np.sum((y - y_hat) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res <= 1e-24 else 0.0
    return max(0.0, 1.0 - ss_res / ss_tot)


def estimate_rate(points: Sequence[np.ndarray], x_ref, fit_threshold: float = 0.9) -> RateEstimate:
    """Classify the convergence rate of an iterate sequence toward x_ref.

    Exact zeros that persist to the end mean finite-step convergence.
    Otherwise the tail (last half, excluding the final 3 near-roundoff
    entries and exact zeros) is fitted both as log d vs k and log d vs
    log k; the better coefficient of determination wins, and anything
    below ``fit_threshold`` is inconclusive.
    """
    x_ref = np.asarray(x_ref, dtype=float)
    d = np.array([float(np.linalg.norm(np.asarray(p, dtype=float) - x_ref)) for p in points])
    n = d.size
    if n < 10:
        raise ValueError("need at least 10 points to classify a rate")

    # x_ref is usually the last iterate, so the final distance is zero by
    # construction; finite-step convergence requires the sequence to have
    # settled strictly earlier and stayed put
    nz = np.nonzero(d)[0]
    trailing_zeros = n - 1 - int(nz[-1]) if nz.size else n
    if trailing_zeros >= 2:
        first_settled = n - trailing_zeros
        return RateEstimate(FINITE_STEPS, None, 1.0, first_settled)

    tail_start = n // 2
    idx = np.arange(tail_start, n - 3)
    idx = idx[d[idx] > 0.0]
    if idx.size < 2:
        return RateEstimate(INCONCLUSIVE, None, 0.0, tail_start)
    logs = np.log(d[idx])
    ks = idx.astype(float)

    slope_g, icept_g = np.polyfit(ks, logs, 1)
    r2_g = _r_squared(logs, slope_g * ks + icept_g)
    q = float(np.exp(slope_g))

    logk = np.log(ks)
    slope_p, icept_p = np.polyfit(logk, logs, 1)
    r2_p = _r_squared(logs, slope_p * logk + icept_p)
    gamma = float(-slope_p)

    candidates = []
    if 0.0 < q < 1.0:
        candidates.append((r2_g, GEOMETRIC, q))
    if gamma > 0.0:
        candidates.append((r2_p, POWER, gamma))
    if not candidates:
        return RateEstimate(INCONCLUSIVE, None, 0.0, tail_start)
    best_r2, regime, param = max(candidates, key=lambda t: t[0])
    if best_r2 < fit_threshold:
        return RateEstimate(INCONCLUSIVE, None, best_r2, tail_start)
    return RateEstimate(regime, param, best_r2, tail_start)


def _grid_points(lower: np.ndarray, upper: np.ndarray, resolution: int) -> np.ndarray:
    axes = [np.linspace(lower[i], upper[i], resolution) for i in range(lower.size)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _eval_function_many(fn, points: np.ndarray) -> np.ndarray:
    if getattr(fn, "poly", None) is not None:
        return eval_poly_many(fn.poly, points)
    return np.array([fn(p) for p in points])


def oracle_solve(problem: NlpProblem, resolution: int, lower, upper, feas_tol: float = 1e-9) -> np.ndarray:
    """Dense-grid minimizer of the objective over the feasible set in a box,
    refined by one local dense pass around the best cell.

    Grid points are projected onto the simple set before the feasibility
    screen, so thin sets (simplices) still receive candidates.  Accuracy is
    on the order of box width / resolution.  Dimension is capped at 3.
    """
    n = problem.dimension
    if n > 3:
        raise ValueError("grid search is limited to dimension <= 3")
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)

    def best_on_grid(lo, hi):
        pts = project_rows(problem.simple_set, _grid_points(lo, hi, resolution))
        mask = np.ones(pts.shape[0], dtype=bool)
        for ci in problem.constraints:
            mask &= _eval_function_many(ci, pts) <= feas_tol
        if not np.any(mask):
            return None, None
        cand = pts[mask]
        vals = _eval_function_many(problem.objective, cand)
        j = int(np.argmin(vals))
        return cand[j], float(vals[j])

    x_best, v_best = best_on_grid(lower, upper)
    if x_best is None:
        raise ValueError("no feasible grid point found")
    spacing = (upper - lower) / (resolution - 1)
    lo2 = np.maximum(x_best - 2.0 * spacing, lower)
    hi2 = np.minimum(x_best + 2.0 * spacing, upper)
    x_ref, v_ref = best_on_grid(lo2, hi2)
    if x_ref is not None and v_ref <= v_best:
        return x_ref
    return x_best
