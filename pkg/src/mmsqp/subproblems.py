"""Strongly convex inner problems solved to certified tolerance with duals.

Three solvers share one architecture: projected gradient ascent on the
concave dual with a closed-form primal-from-dual recovery map.

* ball-constrained quadratic (moving balls step): dual over u >= 0,
  primal ``y(u) = x - (g0 + sum u_i g_i) / (L + sum u_i L_i)``;
* max-penalty quadratic (linf): dual over the capped simplex
  {u >= 0, sum u <= beta}, primal ``y(u) = P_Q(x - (g0 + sum u_i g_i)/mu)``;
* sum-penalty quadratic (l1): dual over the box [0, beta]^m, same primal map.

Every solve returns a primal-dual residual (stationarity, feasibility,
complementarity) so callers never trust an uncertified answer.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .sets import SimpleSet, SimplexCap, WholeSpace, stationarity_residual

SOLVED = "solved"
INFEASIBLE = "infeasible"
MAX_INNER_ITERS = "max_inner_iters"

DEFAULT_EPS_SUB = 1e-10
DEFAULT_MAX_INNER = 100_000
MULTIPLIER_CAP = 1e8


@dataclass(frozen=True)
class LinearizedConstraint:
    """Constraint data frozen at the expansion point: value and gradient there.

    ``weight`` carries the curvature constant L_i for ball-constrained solves
    and is ignored by the penalized ones.
    """

    value: float
    gradient: np.ndarray
    weight: float = 0.0


@dataclass(frozen=True)
class BallData:
    """Ball form of one linearized constraint: ||y - center||^2 <= squared_radius.

    A negative squared radius signals an empty ball, i.e. an infeasible
    expansion point.
    """

    center: np.ndarray
    squared_radius: float
    weight: float

    @staticmethod
    def from_constraint(x: np.ndarray, con: LinearizedConstraint) -> "BallData":
        li = con.weight
        g = con.gradient
        return BallData(
            center=x - g / li,
            squared_radius=float(g @ g) / li**2 - 2.0 * con.value / li,
            weight=li,
        )


@dataclass
class SubproblemSolution:
    """One certified inner solve: primal point, duals, slacks, residual."""

    y: np.ndarray
    multipliers: np.ndarray
    slack: Optional[object]  # None (ball form), float (max-penalty), ndarray (sum-penalty)
    pd_residual: float
    status: str
    inner_iters: int = 0
    detail: str = ""


def _stack(constraints: list[LinearizedConstraint], n: int):
    m = len(constraints)
    c = np.array([con.value for con in constraints], dtype=float)
    G = np.array([np.asarray(con.gradient, dtype=float) for con in constraints]).reshape(m, n)
    w = np.array([con.weight for con in constraints], dtype=float)
    return c, G, w


# ---------------------------------------------------------------------------
# Ball-constrained quadratic (moving balls inner step)
# ---------------------------------------------------------------------------

def _mb_residual(x, g0, L, c, G, w, y, u):
    """Max of stationarity, constraint violation and complementarity at (y, u)."""
    d = y - x
    sq = float(d @ d)
    if c.size:
        cons = c + G @ d + 0.5 * w * sq
        stat = float(np.linalg.norm(g0 + G.T @ u + (L + float(u @ w)) * d))
        feas = float(max(0.0, np.max(cons)))
        compl = float(np.max(np.abs(u * cons)))
    else:
        cons = np.zeros(0)
        stat = float(np.linalg.norm(g0 + L * d))
        feas = 0.0
        compl = 0.0
    return max(stat, feas, compl), cons


def _mb_dual_value(g0, L, c, G, w, u):
    gbar = g0 + G.T @ u
    sigma = L + float(u @ w)
    return float(u @ c) - float(gbar @ gbar) / (2.0 * sigma)


def mb_subproblem(
    x,
    g0,
    L: float,
    constraints: list[LinearizedConstraint],
    eps_sub: float = DEFAULT_EPS_SUB,
    max_inner: int = DEFAULT_MAX_INNER,
    multiplier_cap: float = MULTIPLIER_CAP,
    dual_init=None,
) -> SubproblemSolution:
    """Minimize g0.(y-x) + (L/2)||y-x||^2 over the ball intersection
    c_i + g_i.(y-x) + (w_i/2)||y-x||^2 <= 0.

    Projected gradient ascent on the dual with monotone adaptive steps.
    Reports ``infeasible`` when a ball is empty (negative squared radius) or
    when a multiplier escapes past ``multiplier_cap``, which under a
    qualification condition cannot happen for bounded multipliers.
    """
    x = np.asarray(x, dtype=float)
    g0 = np.asarray(g0, dtype=float)
    c, G, w = _stack(constraints, x.size)
    m = c.size
    if np.any(w <= 0) or L <= 0:
        raise ValueError("curvature weights must be strictly positive")

    if m == 0:
        y = x - g0 / L
        resid, _ = _mb_residual(x, g0, L, c, G, w, y, np.zeros(0))
        return SubproblemSolution(y, np.zeros(0), None, resid, SOLVED, 0)

    r2 = np.array([BallData.from_constraint(x, con).squared_radius for con in constraints])
    if np.any(r2 < -1e-10):
        worst = int(np.argmin(r2))
        return SubproblemSolution(
            x.copy(), np.zeros(m), None, np.inf, INFEASIBLE, 0,
            detail=f"empty ball for constraint {worst} (squared radius {r2[worst]:.3e})",
        )

    u = np.zeros(m) if dual_init is None else np.maximum(np.asarray(dual_init, dtype=float), 0.0)
    val_best = _mb_dual_value(g0, L, c, G, w, u)
    prev_u = None
    prev_phi = None
    t = None
    for it in range(max_inner):
        sigma = L + float(u @ w)
        d = -(g0 + G.T @ u) / sigma
        y = x + d
        resid, phi = _mb_residual(x, g0, L, c, G, w, y, u)
        if resid <= eps_sub:
            return SubproblemSolution(y, u, None, resid, SOLVED, it)
        if np.max(u) > multiplier_cap:
            return SubproblemSolution(
                y, u, None, resid, INFEASIBLE, it,
                detail="dual multiplier exceeded cap; qualification (MFQC) violation suspected",
            )
        # spectral (Barzilai-Borwein) step; the first one falls back to the
        # inverse of the local curvature, whose closed form is J^T J / sigma
        # with J rows g_i + w_i d
        if prev_u is None:
            J = G + np.outer(w, d)
            t = 1.0 / max(float(np.sum(J * J)) / sigma, 1e-18)
        else:
            su = u - prev_u
            sphi = phi - prev_phi
            denom = -float(su @ sphi)  # positive when the dual curves
            if denom > 1e-30:
                t = float(su @ su) / denom
            else:
                t = t * 16.0  # flat ray: escalate
        t = min(max(t, 1e-30), 1e20)
        prev_u, prev_phi = u, phi
        # ascend with a safeguard against losing the best value seen; the
        # fallback t -> 0 recovers the current iterate, so this terminates
        floor_val = val_best - 1e-12 * max(1.0, abs(val_best))
        u_trial = np.minimum(np.maximum(u + t * phi, 0.0), 10.0 * multiplier_cap)
        val_trial = _mb_dual_value(g0, L, c, G, w, u_trial)
        for _ in range(60):
            if val_trial >= floor_val:
                break
            t *= 0.5
            u_trial = np.minimum(np.maximum(u + t * phi, 0.0), 10.0 * multiplier_cap)
            val_trial = _mb_dual_value(g0, L, c, G, w, u_trial)
        u = u_trial
        val_best = max(val_best, val_trial)
    sigma = L + float(u @ w)
    y = x - (g0 + G.T @ u) / sigma
    resid, _ = _mb_residual(x, g0, L, c, G, w, y, u)
    return SubproblemSolution(y, u, None, resid, MAX_INNER_ITERS, max_inner)


# ---------------------------------------------------------------------------
# Penalized quadratics (linf and l1 merit steps)
# ---------------------------------------------------------------------------

def _penalty_residual(kind, x, g0, beta, mu, c, G, q, y, u):
    """Residual of the slack-form KKT system at (y, u) with recovered slack."""
    d = y - x
    if c.size:
        tests = c + G @ d
        gbar = g0 + G.T @ u
    else:
        tests = np.zeros(0)
        gbar = g0
    stat = stationarity_residual(q, y, gbar + mu * d)
    if c.size == 0:
        return stat, 0.0 if kind == "linf" else np.zeros(0)
    if kind == "linf":
        s = float(max(0.0, np.max(tests)))
        feas = float(max(0.0, np.max(tests - s)))
        compl_u = float(np.max(np.abs(u * (tests - s))))
        compl_v = abs((beta - float(np.sum(u))) * s)
        return max(stat, feas, compl_u, compl_v), s
    s = np.maximum(tests, 0.0)
    feas = float(max(0.0, np.max(tests - s)))
    compl_u = float(np.max(np.abs(u * (tests - s))))
    compl_v = float(np.max((beta - u) * s))
    return max(stat, feas, compl_u, abs(compl_v)), s


def _penalty_subproblem(
    kind, x, g0, beta, mu, constraints, q, eps_sub, max_inner, dual_init
) -> SubproblemSolution:
    x = np.asarray(x, dtype=float)
    g0 = np.asarray(g0, dtype=float)
    if beta <= 0 or mu <= 0:
        raise ValueError("beta and mu must be strictly positive")
    c, G, _ = _stack(constraints, x.size)
    m = c.size

    if m == 0:
        y = q.project(x - g0 / mu)
        resid, s = _penalty_residual(kind, x, g0, beta, mu, c, G, q, y, np.zeros(0))
        return SubproblemSolution(y, np.zeros(0), s, resid, SOLVED, 0)

    dual_set = SimplexCap(beta) if kind == "linf" else None
    u = np.zeros(m)
    if dual_init is not None:
        u = np.asarray(dual_init, dtype=float)
        u = dual_set.project(u) if dual_set is not None else np.clip(u, 0.0, beta)

    # 1/L step from the standard dual smoothness bound sum ||g_i||^2 / mu
    l_dual = max(float(np.sum(G * G)), 1e-16) / mu
    step = 1.0 / l_dual
    for it in range(max_inner):
        y = q.project(x - (g0 + G.T @ u) / mu)
        resid, s = _penalty_residual(kind, x, g0, beta, mu, c, G, q, y, u)
        if resid <= eps_sub:
            return SubproblemSolution(y, u, s, resid, SOLVED, it)
        grad = c + G @ (y - x)
        u_next = u + step * grad
        u = dual_set.project(u_next) if dual_set is not None else np.clip(u_next, 0.0, beta)
    y = q.project(x - (g0 + G.T @ u) / mu)
    resid, s = _penalty_residual(kind, x, g0, beta, mu, c, G, q, y, u)
    return SubproblemSolution(y, u, s, resid, MAX_INNER_ITERS, max_inner)


def esqm_subproblem(
    x, g0, beta, mu, constraints, q: SimpleSet,
    eps_sub: float = DEFAULT_EPS_SUB, max_inner: int = DEFAULT_MAX_INNER, dual_init=None,
) -> SubproblemSolution:
    """Minimize g0.(y-x) + beta*s + (mu/2)||y-x||^2 over y in q, s >= 0,
    s >= c_i + g_i.(y-x); always feasible thanks to the shared slack."""
    return _penalty_subproblem("linf", x, g0, beta, mu, constraints, q, eps_sub, max_inner, dual_init)


def sl1qp_subproblem(
    x, g0, beta, mu, constraints, q: SimpleSet,
    eps_sub: float = DEFAULT_EPS_SUB, max_inner: int = DEFAULT_MAX_INNER, dual_init=None,
) -> SubproblemSolution:
    """Minimize g0.(y-x) + beta*sum(s_i) + (mu/2)||y-x||^2 over y in q,
    s_i >= 0, s_i >= c_i + g_i.(y-x)."""
    return _penalty_subproblem("l1", x, g0, beta, mu, constraints, q, eps_sub, max_inner, dual_init)


def subproblem_kkt_residual(
    solution: SubproblemSolution,
    *,
    kind: str,
    x,
    g0,
    constraints: list[LinearizedConstraint],
    L: float | None = None,
    beta: float | None = None,
    mu: float | None = None,
    q: SimpleSet | None = None,
) -> float:
    """Recompute the primal-dual residual of a solved instance from scratch.

    ``kind`` is one of ``"mb"``, ``"linf"``, ``"l1"``.  Self-consistency:
    the result equals ``solution.pd_residual`` to within 1e-12.
    """
    if solution.status != SOLVED:
        raise ValueError("residual recomputation requires a solved instance")
    x = np.asarray(x, dtype=float)
    g0 = np.asarray(g0, dtype=float)
    c, G, w = _stack(constraints, x.size)
    if kind == "mb":
        if L is None:
            raise ValueError("ball-constrained residual needs the curvature L")
        resid, _ = _mb_residual(x, g0, L, c, G, w, solution.y, solution.multipliers)
        return resid
    if kind in ("linf", "l1"):
        if beta is None or mu is None or q is None:
            raise ValueError("penalized residual needs beta, mu and the simple set")
        resid, _ = _penalty_residual(kind, x, g0, beta, mu, c, G, q, solution.y, solution.multipliers)
        return resid
    raise ValueError(f"unknown subproblem kind {kind!r}")
