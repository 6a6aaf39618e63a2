"""Model-minimization SQP solvers with convergence diagnostics.

Three instantiations of one outer loop, each minimizing a strongly convex
upper model at the current iterate: a ball-constrained quadratic method
(feasible iterates), and two penalized quadratic methods driven by linf and
l1 exact-penalty merit functions with an online penalty-weight update.
"""

from .mmp import (
    CONVERGED,
    DIVERGED,
    MAX_ITERS,
    SUBPROBLEM_FAILURE,
    ModelOracle,
    RunResult,
    StopCriteria,
    TraceRecord,
    descent_check,
    run_mmp,
    sandwich_check,
    value_function,
)
from .methods import (
    ESQM,
    GRADPROJ,
    MB,
    SL1QP,
    GradientProjectionOracle,
    KktReport,
    MethodResult,
    MovingBallsConfig,
    MovingBallsOracle,
    PenaltyConfig,
    PenaltyOracle,
    PenaltyState,
    extract_kkt,
    merit_l1,
    merit_linf,
    solve_problem,
)
from .poly import (
    Monomial,
    NlpProblem,
    Polynomial,
    PolynomialParseError,
    SmoothFunction,
    eval_poly,
    finite_diff_check,
    grad_poly,
    lipschitz_grad_bound,
    parse_polynomial,
    smooth_from_polynomial,
)
from .problems import BUILTIN_PROBLEMS, build_problem, get_builtin, list_problems
from .sets import (
    Box,
    EuclideanBall,
    NonnegOrthant,
    Simplex,
    SimplexCap,
    SimpleSet,
    WholeSpace,
    contains,
    project,
    stationarity_residual,
)
from .subproblems import (
    BallData,
    LinearizedConstraint,
    SubproblemSolution,
    esqm_subproblem,
    mb_subproblem,
    sl1qp_subproblem,
    subproblem_kkt_residual,
)
from .diagnostics import (
    MfqcReport,
    RateEstimate,
    check_mfqc,
    estimate_rate,
    kkt_residual,
    oracle_solve,
)

__version__ = "0.1.0"
