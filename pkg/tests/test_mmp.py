import dataclasses

import numpy as np
import pytest

from mmsqp.methods import GradientProjectionOracle, MovingBallsConfig, MovingBallsOracle
from mmsqp.mmp import (
    CONVERGED,
    DIVERGED,
    StopCriteria,
    descent_check,
    run_mmp,
    sandwich_check,
    value_function,
)
from mmsqp.poly import parse_polynomial, smooth_from_polynomial, NlpProblem
from mmsqp.problems import build_problem, get_builtin
from mmsqp.sets import Box, WholeSpace, stationarity_residual


def make_problem(obj_text, dim, q=None, lo=-2.0, hi=2.0, lipschitz=None):
    overrides = {"objective": lipschitz} if lipschitz else None
    return build_problem(dim, obj_text, [], q or WholeSpace(),
                         np.full(dim, lo), np.full(dim, hi), overrides)


class TestRunMmp:
    def test_half_square_norm_converges_in_one_step(self):
        # h(x, y) = f(x) + <grad, y-x> + (1/2)||y-x||^2 with L exactly 1:
        # the map sends any point straight to the origin
        problem = make_problem("0.5*(x1^2 + x2^2)", 2)
        oracle = GradientProjectionOracle(problem)
        assert oracle.L == 1.0
        res = run_mmp(oracle, [1.0, 1.0], StopCriteria())
        assert res.status == CONVERGED
        assert np.array_equal(res.points[1], [0.0, 0.0])
        assert np.array_equal(res.final.x, [0.0, 0.0])
        # one moving step plus the confirming zero step
        assert len(res.trace) == 2
        assert res.trace[1].step_norm == 0.0

    def test_linear_objective_diverges(self):
        problem = make_problem("-x1", 1)
        res = run_mmp(GradientProjectionOracle(problem), [0.0], StopCriteria())
        assert res.status == DIVERGED
        assert np.linalg.norm(res.final.x) > 1e6

    def test_rosenbrock_type_quartic_on_box(self):
        bp = get_builtin("rosenbrock-box")
        problem = bp.build()
        res = run_mmp(GradientProjectionOracle(problem), bp.x0, StopCriteria(tol_step=1e-9))
        assert res.status == CONVERGED
        grad = problem.objective.grad(res.final.x)
        assert stationarity_residual(problem.simple_set, res.final.x, grad) <= 1e-6
        assert np.allclose(res.final.x, [1.0, 1.0], atol=1e-4)

    def test_identical_runs_produce_identical_traces(self):
        bp = get_builtin("rosenbrock-box")
        problem = bp.build()
        r1 = run_mmp(GradientProjectionOracle(problem), bp.x0, StopCriteria())
        r2 = run_mmp(GradientProjectionOracle(problem), bp.x0, StopCriteria())
        assert len(r1.trace) == len(r2.trace)
        for a, b in zip(r1.trace, r2.trace):
            assert a == b

    def test_monitors_see_every_iteration(self):
        problem = make_problem("x1^2", 1)
        seen = []
        run_mmp(GradientProjectionOracle(problem), [1.0], StopCriteria(),
                monitors=[lambda k, x, step: seen.append((k, float(x[0])))])
        assert seen[0] == (0, 1.0)
        assert len(seen) >= 2


class TestValueFunction:
    def test_fixed_point_value_equals_merit(self):
        problem = make_problem("x1^2 + x2^2", 2)
        oracle = GradientProjectionOracle(problem)
        assert value_function(oracle, [0.0, 0.0]) == oracle.merit([0.0, 0.0]) == 0.0

    def test_half_square_arithmetic(self):
        problem = make_problem("0.5*x1^2", 1)
        oracle = GradientProjectionOracle(problem)
        # h(1, 0) = 0.5 + 1*(0-1) + 0.5 = 0
        assert value_function(oracle, [1.0]) == 0.0

    def test_value_below_merit_along_trace(self):
        bp = get_builtin("rosenbrock-box")
        problem = bp.build()
        res = run_mmp(GradientProjectionOracle(problem), bp.x0, StopCriteria())
        for rec in res.trace:
            assert rec.F <= rec.merit + 1e-9


class TestSandwichAndDescent:
    def _mb_run(self):
        bp = get_builtin("corner-quadratic")
        problem = bp.build()
        oracle = MovingBallsOracle(MovingBallsConfig(problem))
        return run_mmp(oracle, bp.x0, StopCriteria())

    def test_converged_run_has_no_violations(self):
        res = self._mb_run()
        assert res.status == CONVERGED
        assert sandwich_check(res.trace, res.mus) == []
        assert descent_check(res.trace, res.mus) == []

    def test_gradient_oracle_tight_at_one_step(self):
        problem = make_problem("0.5*x1^2", 1)
        res = run_mmp(GradientProjectionOracle(problem), [1.0], StopCriteria())
        assert sandwich_check(res.trace, res.mus) == []
        assert descent_check(res.trace, res.mus) == []
        # single step of the square: 0.5 >= 0 + 0.5 * 1, with equality
        rec = res.trace[0]
        assert rec.merit == pytest.approx(rec.F + 0.5 * res.mus[0] * rec.step_norm**2)

    def test_corrupted_value_is_reported(self):
        res = self._mb_run()
        trace = list(res.trace)
        k = 1
        trace[k] = dataclasses.replace(trace[k], F=trace[k].F + 1.0)
        bad = sandwich_check(trace, res.mus)
        assert k in bad or (k + 1) in bad
        trace2 = list(res.trace)
        trace2[0] = dataclasses.replace(trace2[0], merit=trace2[0].merit - 10.0)
        assert descent_check(trace2, res.mus) != []


class TestSequenceProperties:
    def test_merit_nonincreasing_and_steps_square_summable(self):
        for name in ("corner-quadratic", "disk-linear", "saddle-disk"):
            bp = get_builtin(name)
            problem = bp.build()
            res = run_mmp(MovingBallsOracle(MovingBallsConfig(problem)), bp.x0, StopCriteria())
            merits = [rec.merit for rec in res.trace]
            assert all(a >= b - 1e-9 for a, b in zip(merits, merits[1:]))
            total = sum(rec.step_norm**2 for rec in res.trace)
            mu = min(res.mus)
            assert total <= (merits[0] - min(merits)) * 2.0 / mu + 1e-6

    def test_fixed_point_soundness(self):
        # empirical counterpart of the subgradient bound: the final outer
        # stationarity is a problem constant times the stopping step norm
        bp = get_builtin("corner-quadratic")
        problem = bp.build()
        cfg = MovingBallsConfig(problem)
        res = run_mmp(MovingBallsOracle(cfg), bp.x0, StopCriteria(tol_step=1e-9))
        assert res.status == CONVERGED
        u = res.last_solution.multipliers
        kappa = 2.0 * (cfg.L + float(np.sum(u * np.asarray(cfg.L_i))) + 1.0)
        assert res.trace[-1].kkt_stationarity <= kappa * 1e-9

    def test_divergence_radius_respected(self):
        problem = make_problem("-x1", 1, lipschitz=1.0)
        res = run_mmp(GradientProjectionOracle(problem), [0.0],
                      StopCriteria(tol_step=1e-9, max_iters=10_000, divergence_radius=50.0))
        assert res.status == DIVERGED
        # one step past the radius at most, then the guard fires
        assert np.linalg.norm(res.points[-1]) >= 50.0
