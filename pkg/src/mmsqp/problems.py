"""Builtin benchmark problems.

Each entry stores expression text, the simple set, a starting point, the
trust box on which gradient Lipschitz constants are certified, and where
known a reference optimum validated against the grid solver.  The set spans
feasible-start convex programs, nonconvex polynomials, infeasible starts for
the penalty drivers, a diverging linear objective, and a qualification
violation that makes the ball-constrained driver abort.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .methods import ESQM, GRADPROJ, MB, SL1QP
from .poly import NlpProblem, parse_polynomial, smooth_from_polynomial
from .sets import Box, EuclideanBall, NonnegOrthant, Simplex, SimplexCap, SimpleSet, WholeSpace

SQRT2 = float(np.sqrt(2.0))


def build_problem(
    dimension: int,
    objective_text: str,
    constraint_texts: list[str],
    simple_set: SimpleSet,
    trust_lower,
    trust_upper,
    lipschitz_overrides: Optional[dict[str, float]] = None,
) -> NlpProblem:
    """Parse expression text into a problem with certified constants."""
    overrides = lipschitz_overrides or {}
    lo = np.asarray(trust_lower, dtype=float)
    hi = np.asarray(trust_upper, dtype=float)
    objective = smooth_from_polynomial(
        parse_polynomial(objective_text, dimension), lo, hi,
        lipschitz_override=overrides.get("objective"),
    )
    constraints = []
    for i, text in enumerate(constraint_texts):
        constraints.append(
            smooth_from_polynomial(
                parse_polynomial(text, dimension), lo, hi,
                lipschitz_override=overrides.get(f"constraint.{i + 1}"),
            )
        )
    return NlpProblem(dimension, objective, constraints, simple_set)


@dataclass
class BuiltinProblem:
    name: str
    description: str
    dimension: int
    objective_text: str
    constraint_texts: list[str]
    simple_set: SimpleSet
    x0: np.ndarray
    trust_lower: np.ndarray
    trust_upper: np.ndarray
    methods: tuple[str, ...]
    lipschitz_overrides: dict[str, float] = field(default_factory=dict)
    reference_optimum: Optional[np.ndarray] = None
    reference_value: Optional[float] = None
    expected_status: str = "converged"
    qualifying: bool = False  # penalty-method qualification assumption holds (m >= 1)
    # Nonzero feas_tol is the noisy-arithmetic override for the linearized
    # feasibility tests: inner solves certify to 1e-10, so iterates can sit
    # ~1e-11 outside a constraint and an exact zero test would flap forever.
    feas_tol: float = 0.0

    def build(self) -> NlpProblem:
        return build_problem(
            self.dimension,
            self.objective_text,
            self.constraint_texts,
            self.simple_set,
            self.trust_lower,
            self.trust_upper,
            self.lipschitz_overrides,
        )

    @property
    def num_constraints(self) -> int:
        return len(self.constraint_texts)


def _entry(**kw) -> BuiltinProblem:
    kw["x0"] = np.asarray(kw["x0"], dtype=float)
    kw["trust_lower"] = np.asarray(kw["trust_lower"], dtype=float)
    kw["trust_upper"] = np.asarray(kw["trust_upper"], dtype=float)
    if kw.get("reference_optimum") is not None:
        kw["reference_optimum"] = np.asarray(kw["reference_optimum"], dtype=float)
    return BuiltinProblem(**kw)


BUILTIN_PROBLEMS: list[BuiltinProblem] = [
    _entry(
        name="quadratic-2d",
        description="strictly convex quadratic, unconstrained",
        dimension=2,
        objective_text="x1^2 + x2^2",
        constraint_texts=[],
        simple_set=WholeSpace(),
        x0=[1.0, 1.0],
        trust_lower=[-2.0, -2.0],
        trust_upper=[2.0, 2.0],
        methods=(MB, ESQM, SL1QP, GRADPROJ),
        reference_optimum=[0.0, 0.0],
        reference_value=0.0,
    ),
    _entry(
        name="linear-over-halfline",
        description="linear objective on the halfline x1 >= 0",
        dimension=1,
        objective_text="x1",
        constraint_texts=["-x1"],
        simple_set=WholeSpace(),
        x0=[1.0],
        trust_lower=[-2.0],
        trust_upper=[2.0],
        methods=(MB, ESQM, SL1QP),
        lipschitz_overrides={"objective": 1.0, "constraint.1": 1.0},
        reference_optimum=[0.0],
        reference_value=0.0,
        qualifying=True,
        feas_tol=1e-9,
    ),
    _entry(
        name="disk-linear",
        description="linear objective over the unit disk",
        dimension=2,
        objective_text="x1 + x2",
        constraint_texts=["x1^2 + x2^2 - 1"],
        simple_set=WholeSpace(),
        x0=[0.0, 0.0],
        trust_lower=[-2.0, -2.0],
        trust_upper=[2.0, 2.0],
        methods=(MB, ESQM, SL1QP),
        reference_optimum=[-SQRT2 / 2.0, -SQRT2 / 2.0],
        reference_value=-SQRT2,
        qualifying=True,
        feas_tol=1e-9,
    ),
    _entry(
        name="infeasible-start-quadratic",
        description="convex quadratic with an infeasible starting point",
        dimension=2,
        objective_text="x1^2 + x2^2",
        constraint_texts=["1 - x1"],
        simple_set=WholeSpace(),
        x0=[0.0, 0.0],
        trust_lower=[-2.0, -2.0],
        trust_upper=[2.0, 2.0],
        methods=(ESQM, SL1QP),
        reference_optimum=[1.0, 0.0],
        reference_value=1.0,
        qualifying=True,
        feas_tol=1e-9,
    ),
    _entry(
        name="corner-quadratic",
        description="quadratic pulled into the corner of two halfplanes",
        dimension=2,
        objective_text="(x1 - 2)^2 + (x2 - 2)^2",
        constraint_texts=["x1 - 1", "x2 - 1"],
        simple_set=WholeSpace(),
        x0=[0.0, 0.0],
        trust_lower=[-3.0, -3.0],
        trust_upper=[3.0, 3.0],
        methods=(MB, ESQM, SL1QP),
        reference_optimum=[1.0, 1.0],
        reference_value=2.0,
        qualifying=True,
        feas_tol=1e-9,
    ),
    _entry(
        name="saddle-disk",
        description="nonconvex saddle objective over the unit disk",
        dimension=2,
        objective_text="x1*x2",
        constraint_texts=["x1^2 + x2^2 - 1"],
        simple_set=WholeSpace(),
        x0=[0.4, -0.3],
        trust_lower=[-2.0, -2.0],
        trust_upper=[2.0, 2.0],
        methods=(MB, ESQM, SL1QP),
        reference_value=-0.5,
        qualifying=True,
        feas_tol=1e-9,
    ),
    _entry(
        name="rosenbrock-box",
        description="nonconvex valley quartic over a box",
        dimension=2,
        objective_text="(1 - x1)^2 + 4*(x2 - x1^2)^2",
        constraint_texts=[],
        simple_set=Box([-2.0, -2.0], [2.0, 2.0]),
        x0=[-1.2, 1.0],
        trust_lower=[-2.0, -2.0],
        trust_upper=[2.0, 2.0],
        methods=(GRADPROJ, ESQM, SL1QP),
        reference_optimum=[1.0, 1.0],
        reference_value=0.0,
    ),
    _entry(
        name="simplex-least-squares",
        description="nearest point to a target on the unit simplex",
        dimension=3,
        objective_text="0.5*((x1 - 0.8)^2 + (x2 - 0.3)^2 + (x3 + 0.1)^2)",
        constraint_texts=[],
        simple_set=Simplex(1.0),
        x0=[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        trust_lower=[-1.0, -1.0, -1.0],
        trust_upper=[1.0, 1.0, 1.0],
        methods=(GRADPROJ, ESQM, SL1QP),
        reference_optimum=[0.75, 0.25, 0.0],
        reference_value=0.0075,  # 0.5*(0.05^2 + 0.05^2 + 0.1^2)
    ),
    _entry(
        name="box-quadratic",
        description="quadratic whose free minimum lies outside the box",
        dimension=2,
        objective_text="(x1 + 1)^2 + (x2 - 3)^2",
        constraint_texts=[],
        simple_set=Box([0.0, 0.0], [1.0, 1.0]),
        x0=[0.5, 0.5],
        trust_lower=[-1.0, -1.0],
        trust_upper=[4.0, 4.0],
        methods=(GRADPROJ, ESQM, SL1QP),
        reference_optimum=[0.0, 1.0],
        reference_value=5.0,
    ),
    _entry(
        name="ballq-quadratic",
        description="quadratic over a unit-ball simple set",
        dimension=2,
        objective_text="(x1 - 2)^2 + x2^2",
        constraint_texts=[],
        simple_set=EuclideanBall([0.0, 0.0], 1.0),
        x0=[0.0, 0.0],
        trust_lower=[-2.0, -2.0],
        trust_upper=[2.0, 2.0],
        methods=(GRADPROJ, ESQM, SL1QP),
        reference_optimum=[1.0, 0.0],
        reference_value=1.0,
    ),
    _entry(
        name="diverging-linear",
        description="linear objective with no minimizer: the diverging case",
        dimension=1,
        objective_text="-x1",
        constraint_texts=[],
        simple_set=WholeSpace(),
        x0=[0.0],
        trust_lower=[-2.0],
        trust_upper=[2.0],
        methods=(MB, ESQM, SL1QP, GRADPROJ),
        expected_status="diverged",
    ),
    _entry(
        name="mfqc-violating-line",
        description="opposing constraint gradients: qualification fails",
        dimension=2,
        objective_text="x1 + x2^2",
        constraint_texts=["x1", "-x1"],
        simple_set=WholeSpace(),
        x0=[0.0, 1.0],
        trust_lower=[-2.0, -2.0],
        trust_upper=[2.0, 2.0],
        methods=(MB,),
        expected_status="subproblem_failure",
    ),
]

_BY_NAME = {p.name: p for p in BUILTIN_PROBLEMS}


def get_builtin(name: str) -> BuiltinProblem:
    try:
        return _BY_NAME[name]
    except KeyError:
        raise KeyError(f"unknown builtin problem {name!r}; see 'list'") from None


def builtin_names() -> list[str]:
    return [p.name for p in BUILTIN_PROBLEMS]


def list_problems() -> str:
    """One line per builtin: name, n, m, simple set, reference optimum."""
    lines = []
    header = f"{'name':<28} {'n':>2} {'m':>2} {'set':<24} {'reference optimum'}"
    lines.append(header)
    lines.append("-" * len(header))
    for p in BUILTIN_PROBLEMS:
        if p.reference_optimum is not None:
            ref = "(" + ", ".join(f"{v:.6g}" for v in p.reference_optimum) + ")"
        elif p.reference_value is not None:
            ref = f"value {p.reference_value:.6g}"
        else:
            ref = "-"
        lines.append(f"{p.name:<28} {p.dimension:>2} {p.num_constraints:>2} {p.simple_set.describe():<24} {ref}")
    return "\n".join(lines)
