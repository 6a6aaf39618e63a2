import numpy as np
import pytest

from mmsqp.sets import (
    Box,
    EuclideanBall,
    NonnegOrthant,
    Simplex,
    SimplexCap,
    WholeSpace,
    contains,
    project,
    stationarity_residual,
)


def simplex_projection_oracle(z, scale):
    """Enumerate KKT threshold candidates by support set; pick the closest."""
    z = np.asarray(z, dtype=float)
    n = z.size
    best, best_d = None, np.inf
    for mask in range(1, 2**n):
        support = [i for i in range(n) if mask >> i & 1]
        tau = (z[support].sum() - scale) / len(support)
        cand = np.maximum(z - tau, 0.0)
        if abs(cand.sum() - scale) > 1e-9:
            continue
        if any(cand[i] == 0 for i in support) and len(support) > 1:
            pass  # still a valid candidate; distance comparison decides
        d = np.linalg.norm(cand - z)
        if d < best_d - 1e-15:
            best, best_d = cand, d
    return best


VARIANTS = [
    WholeSpace(),
    Box(np.array([-1.0, 0.0]), np.array([1.0, 2.0])),
    Box(np.array([-np.inf, 0.0]), np.array([np.inf, 1.0])),
    EuclideanBall(np.array([0.5, -0.5]), 1.5),
    Simplex(1.0),
    SimplexCap(2.0),
    NonnegOrthant(),
]


class TestProject:
    def test_box_clamp(self):
        q = Box(np.zeros(2), np.ones(2))
        assert np.allclose(project(q, [2.0, -1.0]), [1.0, 0.0])

    def test_wholespace_identity(self):
        z = np.array([3.0, -4.0])
        assert np.array_equal(project(WholeSpace(), z), z)

    def test_simplex_example_against_oracle(self):
        z = np.array([1.0, 0.5])
        got = project(Simplex(1.0), z)
        assert np.allclose(got, [0.75, 0.25], atol=1e-12)
        assert np.allclose(got, simplex_projection_oracle(z, 1.0), atol=1e-12)

    def test_simplex_random_against_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = int(rng.integers(1, 5))
            z = rng.normal(size=n) * rng.uniform(0.5, 3)
            scale = float(rng.uniform(0.5, 2.5))
            assert np.allclose(
                project(Simplex(scale), z), simplex_projection_oracle(z, scale), atol=1e-9
            )

    def test_simplexcap_two_branches(self):
        q = SimplexCap(1.0)
        inside = project(q, np.array([0.2, -0.5, 0.3]))
        assert np.allclose(inside, [0.2, 0.0, 0.3])
        over = project(q, np.array([0.9, 0.8, 0.0]))
        assert over.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(over >= 0)

    def test_ball_radial(self):
        q = EuclideanBall(np.zeros(2), 1.0)
        assert np.allclose(project(q, [2.0, 0.0]), [1.0, 0.0])
        z = np.array([0.3, -0.2])
        assert np.array_equal(project(q, z), z)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            project(Box(np.zeros(2), np.ones(2)), [1.0])


class TestContains:
    def test_examples(self):
        assert contains(Box(np.array([0.0]), np.array([1.0])), [0.5], 0.0)
        assert not contains(EuclideanBall(np.zeros(2), 1.0), [2.0, 0.0], 0.0)
        assert contains(Simplex(1.0), [0.75, 0.25], 1e-12)

    def test_negative_tol_rejected(self):
        with pytest.raises(ValueError):
            contains(WholeSpace(), [0.0], -1.0)


class TestStationarityResidual:
    def test_wholespace_gives_norm(self):
        assert stationarity_residual(WholeSpace(), [1.0, 1.0], [3.0, 4.0]) == 5.0

    def test_box_active_face_absorbs_outward_push(self):
        # at the upper face, a negative gradient pushes outward and the clamp
        # kills it
        assert stationarity_residual(Box(np.array([0.0]), np.array([1.0])), [1.0], [-3.0]) == 0.0

    def test_ball_boundary(self):
        q = EuclideanBall(np.zeros(2), 1.0)
        x = np.array([1.0, 0.0])
        # outward-pointing -v lies in the normal cone: residual zero
        assert stationarity_residual(q, x, [-2.0, 0.0]) == 0.0
        # a tangential component survives: x - v = (1, -1) projects to the
        # boundary and the fixed-point gap is sqrt(2 - sqrt(2))
        got = stationarity_residual(q, x, [0.0, 1.0])
        assert got == pytest.approx(np.sqrt(2.0 - np.sqrt(2.0)), abs=1e-12)
        assert got > 0.5

    def test_zero_vector_is_stationary_everywhere(self):
        # zero residual up to projection idempotence noise
        rng = np.random.default_rng(4)
        for q in VARIANTS:
            x = project(q, rng.normal(size=2) if not isinstance(q, Simplex) else rng.uniform(0, 1, 2))
            assert stationarity_residual(q, x, np.zeros(2)) <= 1e-12

    def test_requires_membership(self):
        with pytest.raises(ValueError):
            stationarity_residual(EuclideanBall(np.zeros(2), 1.0), [2.0, 0.0], [0.0, 0.0])


class TestProjectionProperties:
    @pytest.mark.parametrize("q", VARIANTS, ids=lambda q: q.describe())
    def test_idempotent_nonexpansive_variational(self, q):
        rng = np.random.default_rng(99)
        z = rng.normal(size=(2000, 2)) * 2.0
        w_src = rng.normal(size=(2000, 2)) * 2.0
        for i in range(z.shape[0]):
            pz = project(q, z[i])
            assert np.linalg.norm(project(q, pz) - pz) <= 1e-12
            pw = project(q, w_src[i])
            assert np.linalg.norm(pz - pw) <= np.linalg.norm(z[i] - w_src[i]) + 1e-12
            # variational inequality with w a member of the set
            assert float((z[i] - pz) @ (pw - pz)) <= 1e-10
