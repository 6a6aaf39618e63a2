"""The three SQP drivers and the plain gradient-projection oracle.

Each driver linearizes the problem data at the current iterate, hands the
resulting strongly convex model to its inner solver, and exposes the whole
thing as a model oracle for the outer loop.  The penalized drivers also run
the linearized feasibility tests that decide whether the penalty weight
beta must grow.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .mmp import (
    CONVERGED,
    ModelOracle,
    OracleStep,
    RunResult,
    StopCriteria,
    SubproblemError,
    run_mmp,
)
from .poly import NlpProblem
from .sets import WholeSpace, stationarity_residual
from .subproblems import (
    DEFAULT_EPS_SUB,
    DEFAULT_MAX_INNER,
    MULTIPLIER_CAP,
    SOLVED,
    INFEASIBLE,
    LinearizedConstraint,
    SubproblemSolution,
    esqm_subproblem,
    mb_subproblem,
    sl1qp_subproblem,
)

MB = "mb"
ESQM = "esqm"
SL1QP = "sl1qp"
GRADPROJ = "gradproj"
METHODS = (MB, ESQM, SL1QP, GRADPROJ)


@dataclass
class KktReport:
    """Residuals of the stationarity system at a candidate primal-dual pair."""

    stationarity: float
    feasibility: float
    complementarity: float
    multipliers: np.ndarray


def merit_linf(problem: NlpProblem, beta: float, x) -> float:
    """f(x) + beta * max(0, f_1(x), ..., f_m(x)); the zero enters the max."""
    x = np.asarray(x, dtype=float)
    worst = problem.max_violation(x)
    return problem.objective(x) + beta * worst


def merit_l1(problem: NlpProblem, beta: float, x) -> float:
    """f(x) + beta * sum_i max(0, f_i(x))."""
    x = np.asarray(x, dtype=float)
    total = 0.0
    if problem.constraints:
        total = float(np.sum(np.maximum(problem.constraint_values(x), 0.0)))
    return problem.objective(x) + beta * total


def extract_kkt(problem: NlpProblem, x, solution: Optional[SubproblemSolution], method: str) -> KktReport:
    """Map the final inner duals to multipliers of the original program.

    All three drivers parameterize their duals so that the inner multipliers
    are the outer ones directly (the penalized dual sets already carry the
    beta scaling).
    """
    x = np.asarray(x, dtype=float)
    m = problem.num_constraints
    lam = np.zeros(m)
    if solution is not None and solution.multipliers.size == m:
        lam = np.maximum(np.asarray(solution.multipliers, dtype=float), 0.0)
    return kkt_from_multipliers(problem, x, lam)


def kkt_from_multipliers(problem: NlpProblem, x, lam) -> KktReport:
    x = np.asarray(x, dtype=float)
    lam = np.asarray(lam, dtype=float)
    v = problem.objective.grad(x)
    vals = problem.constraint_values(x) if problem.constraints else np.zeros(0)
    for li, ci in zip(lam, problem.constraints):
        v = v + li * ci.grad(x)
    stat = stationarity_residual(problem.simple_set, x, v)
    feas = float(max(0.0, np.max(vals))) if vals.size else 0.0
    compl = float(np.max(np.abs(lam * vals))) if vals.size else 0.0
    return KktReport(stat, feas, compl, lam)


def _linearize(problem: NlpProblem, x, weights=None):
    cons = []
    for i, ci in enumerate(problem.constraints):
        w = weights[i] if weights is not None else 0.0
        cons.append(LinearizedConstraint(ci(x), ci.grad(x), w))
    return cons


# ---------------------------------------------------------------------------
# Moving balls
# ---------------------------------------------------------------------------

@dataclass
class MovingBallsConfig:
    problem: NlpProblem
    L: Optional[float] = None
    L_i: Optional[list[float]] = None
    eps_sub: float = DEFAULT_EPS_SUB
    stop: StopCriteria = field(default_factory=StopCriteria)
    feas_tol: float = 1e-9
    max_inner: int = DEFAULT_MAX_INNER
    multiplier_cap: float = MULTIPLIER_CAP

    def __post_init__(self):
        if not isinstance(self.problem.simple_set, WholeSpace):
            raise ValueError("the ball-constrained driver requires the whole space as simple set")
        if self.L is None:
            self.L = self.problem.objective.lipschitz_grad
        if self.L_i is None:
            self.L_i = [c.lipschitz_grad for c in self.problem.constraints]
        if self.L <= 0 or any(li <= 0 for li in self.L_i):
            raise ValueError("curvature constants must be strictly positive")


class MovingBallsOracle(ModelOracle):
    def __init__(self, config: MovingBallsConfig):
        self.config = config

    @property
    def mu(self) -> float:
        return self.config.L

    def merit(self, x) -> float:
        return self.config.problem.objective(x)

    def solve_model(self, x) -> OracleStep:
        cfg = self.config
        x = np.asarray(x, dtype=float)
        g0 = cfg.problem.objective.grad(x)
        cons = _linearize(cfg.problem, x, cfg.L_i)
        sol = mb_subproblem(
            x, g0, cfg.L, cons,
            eps_sub=cfg.eps_sub, max_inner=cfg.max_inner, multiplier_cap=cfg.multiplier_cap,
        )
        if sol.status != SOLVED:
            reason = (
                "ball-intersection model infeasible"
                if sol.status == INFEASIBLE
                else "inner solver hit its iteration cap"
            )
            raise SubproblemError(f"{reason}: {sol.detail}" if sol.detail else reason, sol)
        d = sol.y - x
        f_x = cfg.problem.objective(x)
        model_value = f_x + float(g0 @ d) + 0.5 * cfg.L * float(d @ d)
        kkt = kkt_from_multipliers(cfg.problem, sol.y, sol.multipliers)
        return OracleStep(
            y=sol.y,
            model_value=model_value,
            solution=sol,
            f_value=f_x,
            merit_value=f_x,
            kkt_stationarity=kkt.stationarity,
            max_violation=cfg.problem.max_violation(x),
        )


def mb_step(config: MovingBallsConfig, x):
    """One ball-constrained step from a feasible x: (next point, inner solution)."""
    x = np.asarray(x, dtype=float)
    if config.problem.max_violation(x) > config.feas_tol:
        raise ValueError("expansion point is infeasible for the ball-constrained driver")
    step = MovingBallsOracle(config).solve_model(x)
    return step.y, step.solution


# ---------------------------------------------------------------------------
# Penalized drivers (linf merit: esqm, l1 merit: sl1qp)
# ---------------------------------------------------------------------------

@dataclass
class PenaltyConfig:
    problem: NlpProblem
    kind: str = ESQM
    beta0: float = 1.0
    delta: float = 1.0
    lam: Optional[float] = None
    lam_prime: Optional[float] = None
    eps_sub: float = DEFAULT_EPS_SUB
    stop: StopCriteria = field(default_factory=StopCriteria)
    feas_tol: float = 0.0
    max_inner: int = DEFAULT_MAX_INNER

    def __post_init__(self):
        if self.kind not in (ESQM, SL1QP):
            raise ValueError(f"unknown penalty kind {self.kind!r}")
        if self.beta0 <= 0 or self.delta <= 0 or self.feas_tol < 0:
            raise ValueError("beta0 and delta must be positive, feas_tol nonnegative")
        L = self.problem.objective.lipschitz_grad
        lips = [c.lipschitz_grad for c in self.problem.constraints]
        bound = 0.0
        if lips:
            bound = max(lips) if self.kind == ESQM else float(sum(lips))
        bound = max(bound, 1e-8)
        if self.lam is None:
            self.lam = L
        if self.lam_prime is None:
            self.lam_prime = bound
        # overrides may only tighten upward; smaller values would break the
        # majorization property of the model
        if self.lam < L - 1e-15:
            raise ValueError(f"lam override {self.lam} is below the certified bound {L}")
        if self.lam_prime < bound - 1e-15:
            raise ValueError(f"lam_prime override {self.lam_prime} is below the certified bound {bound}")


@dataclass
class PenaltyState:
    beta: float
    update_count: int = 0
    stabilized_at: Optional[int] = None
    last_update_iter: int = -1

    def bump(self, delta: float, k: int) -> "PenaltyState":
        return PenaltyState(self.beta + delta, self.update_count + 1, None, k)


class PenaltyOracle(ModelOracle):
    def __init__(self, config: PenaltyConfig, state: Optional[PenaltyState] = None):
        self.config = config
        self.state = state if state is not None else PenaltyState(beta=config.beta0)

    @property
    def mu(self) -> float:
        return self.config.lam + self.state.beta * self.config.lam_prime

    @property
    def beta(self) -> float:
        return self.state.beta

    def merit(self, x) -> float:
        fn = merit_linf if self.config.kind == ESQM else merit_l1
        return fn(self.config.problem, self.state.beta, x)

    def solve_model(self, x) -> OracleStep:
        cfg = self.config
        x = np.asarray(x, dtype=float)
        g0 = cfg.problem.objective.grad(x)
        cons = _linearize(cfg.problem, x)
        solver = esqm_subproblem if cfg.kind == ESQM else sl1qp_subproblem
        sol = solver(
            x, g0, self.state.beta, self.mu, cons, cfg.problem.simple_set,
            eps_sub=cfg.eps_sub, max_inner=cfg.max_inner,
        )
        if sol.status != SOLVED:
            raise SubproblemError("penalized inner solver hit its iteration cap", sol)
        d = sol.y - x
        f_x = cfg.problem.objective(x)
        if cons:
            tests = np.array([con.value for con in cons]) + np.array([con.gradient for con in cons]) @ d
            if cfg.kind == ESQM:
                pen = float(max(0.0, np.max(tests)))
            else:
                pen = float(np.sum(np.maximum(tests, 0.0)))
        else:
            pen = 0.0
        model_value = f_x + float(g0 @ d) + self.state.beta * pen + 0.5 * self.mu * float(d @ d)
        kkt = kkt_from_multipliers(cfg.problem, sol.y, sol.multipliers)
        return OracleStep(
            y=sol.y,
            model_value=model_value,
            solution=sol,
            f_value=f_x,
            merit_value=self.merit(x),
            kkt_stationarity=kkt.stationarity,
            max_violation=cfg.problem.max_violation(x),
        )

    def after_step(self, k: int, x, y) -> None:
        if self._tests_pass(x, y):
            return
        self.state = self.state.bump(self.config.delta, k)

    def _tests_pass(self, x, y) -> bool:
        cfg = self.config
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        for ci in cfg.problem.constraints:
            if ci(x) + float(ci.grad(x) @ (y - x)) > cfg.feas_tol:
                return False
        return True

    def finalize(self, total_iters: int, converged: bool = False, quiet_window: int = 200) -> PenaltyState:
        """Mark the stabilization point once beta is provably quiet.

        Quiet means no update over the trailing window, or a converged run
        whose last iteration left beta alone (the iteration map is
        deterministic, so a fixed point freezes beta for good).
        """
        st = self.state
        quiet = total_iters - (st.last_update_iter + 1)
        if st.update_count == 0:
            st.stabilized_at = 0
        elif quiet >= quiet_window or (converged and quiet >= 1):
            st.stabilized_at = st.last_update_iter + 1
        return st


def _penalty_step(config: PenaltyConfig, state: PenaltyState, x):
    oracle = PenaltyOracle(config, state)
    step = oracle.solve_model(x)
    oracle.after_step(state.last_update_iter + 1, x, step.y)
    return step.y, oracle.state, step.solution


def esqm_step(config: PenaltyConfig, state: PenaltyState, x):
    """One linf-penalized step: (next point, new penalty state, inner solution)."""
    if config.kind != ESQM:
        raise ValueError("config.kind must be 'esqm'")
    return _penalty_step(config, state, x)


def sl1qp_step(config: PenaltyConfig, state: PenaltyState, x):
    """One l1-penalized step: (next point, new penalty state, inner solution)."""
    if config.kind != SL1QP:
        raise ValueError("config.kind must be 'sl1qp'")
    return _penalty_step(config, state, x)


# ---------------------------------------------------------------------------
# Gradient projection (the archetypal model oracle; m = 0 only)
# ---------------------------------------------------------------------------

class GradientProjectionOracle(ModelOracle):
    def __init__(self, problem: NlpProblem, L: Optional[float] = None):
        if problem.constraints:
            raise ValueError("gradient projection handles only simple-set constraints")
        self.problem = problem
        self.L = L if L is not None else problem.objective.lipschitz_grad
        if self.L <= 0:
            raise ValueError("L must be strictly positive")

    @property
    def mu(self) -> float:
        return self.L

    def merit(self, x) -> float:
        return self.problem.objective(x)

    def solve_model(self, x) -> OracleStep:
        x = np.asarray(x, dtype=float)
        g = self.problem.objective.grad(x)
        y = self.problem.simple_set.project(x - g / self.L)
        d = y - x
        f_x = self.problem.objective(x)
        resid = stationarity_residual(self.problem.simple_set, y, g + self.L * d)
        sol = SubproblemSolution(y, np.zeros(0), None, resid, SOLVED, 0)
        kkt = kkt_from_multipliers(self.problem, y, np.zeros(0))
        return OracleStep(
            y=y,
            model_value=f_x + float(g @ d) + 0.5 * self.L * float(d @ d),
            solution=sol,
            f_value=f_x,
            merit_value=f_x,
            kkt_stationarity=kkt.stationarity,
            max_violation=0.0,
        )


# ---------------------------------------------------------------------------
# One-call driver used by the CLI and the test harness
# ---------------------------------------------------------------------------

@dataclass
class MethodResult:
    method: str
    run: RunResult
    kkt: Optional[KktReport]
    penalty_state: Optional[PenaltyState]
    mu_final: float
    lam: Optional[float] = None
    lam_prime: Optional[float] = None


def build_oracle(problem: NlpProblem, method: str, **params) -> ModelOracle:
    if method == MB:
        cfg = MovingBallsConfig(
            problem,
            L=params.get("L"),
            L_i=params.get("L_i"),
            eps_sub=params.get("eps_sub", DEFAULT_EPS_SUB),
            stop=params.get("stop", StopCriteria()),
            max_inner=params.get("max_inner", DEFAULT_MAX_INNER),
        )
        return MovingBallsOracle(cfg)
    if method in (ESQM, SL1QP):
        cfg = PenaltyConfig(
            problem,
            kind=method,
            beta0=params.get("beta0", 1.0),
            delta=params.get("delta", 1.0),
            lam=params.get("lam"),
            lam_prime=params.get("lam_prime"),
            eps_sub=params.get("eps_sub", DEFAULT_EPS_SUB),
            stop=params.get("stop", StopCriteria()),
            feas_tol=params.get("feas_tol", 0.0),
            max_inner=params.get("max_inner", DEFAULT_MAX_INNER),
        )
        return PenaltyOracle(cfg)
    if method == GRADPROJ:
        return GradientProjectionOracle(problem, L=params.get("L"))
    raise ValueError(f"unknown method {method!r}")


def solve_problem(problem: NlpProblem, method: str, x0, stop: Optional[StopCriteria] = None, **params) -> MethodResult:
    """Run one method on one problem and assemble the final certificates."""
    stop = stop if stop is not None else params.pop("stop", None) or StopCriteria()
    params["stop"] = stop
    x0 = np.asarray(x0, dtype=float)

    if method == MB and problem.max_violation(x0) > 1e-9:
        raise ValueError("the ball-constrained driver needs a feasible starting point")
    if method in (ESQM, SL1QP, GRADPROJ) and not problem.simple_set.contains(x0, 1e-9):
        raise ValueError("starting point must belong to the simple set")

    oracle = build_oracle(problem, method, **params)
    result = run_mmp(oracle, x0, stop)

    penalty_state = None
    if isinstance(oracle, PenaltyOracle):
        penalty_state = oracle.finalize(len(result.trace), converged=result.status == CONVERGED)

    kkt = None
    if result.status == CONVERGED:
        kkt = extract_kkt(problem, result.final.x, result.last_solution, method)

    return MethodResult(
        method=method,
        run=result,
        kkt=kkt,
        penalty_state=penalty_state,
        mu_final=oracle.mu,
        lam=getattr(getattr(oracle, "config", None), "lam", None),
        lam_prime=getattr(getattr(oracle, "config", None), "lam_prime", None),
    )
