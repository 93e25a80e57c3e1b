import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gplincc import InvalidArgumentError, RankError
from gplincc.benchmarks import example2_generate
from gplincc.linearization import (
    LinearizedModel,
    ObservationSet,
    SimulationBundle,
    assemble_calibration_matrices,
    fit_linear_coefficients,
    gls_blocks,
)


def bundle_1d(theta, y):
    k = len(theta)
    return SimulationBundle(np.zeros(k, int), np.zeros(k, int), np.asarray(theta, float)[:, None], np.asarray(y, float))


class TestFitLinear:
    def test_exact_line(self):
        lin = fit_linear_coefficients(bundle_1d([0, 1], [0, 2]))
        assert lin.intercepts[0, 0] == pytest.approx(0, abs=1e-14)
        assert lin.slopes[0, 0, 0] == pytest.approx(2, abs=1e-14)
        assert lin.residual_var[0, 0] == 0

    def test_constant(self):
        lin = fit_linear_coefficients(bundle_1d([0, 1, 3], [7, 7, 7]))
        assert lin.intercepts[0, 0] == pytest.approx(7)
        assert lin.slopes[0, 0, 0] == pytest.approx(0, abs=1e-13)

    def test_quadratic(self):
        # OLS of theta^2 on (1, theta) over {-1, 0, 1}: slope 0, intercept mean = 2/3
        lin = fit_linear_coefficients(bundle_1d([-1, 0, 1], [1, 0, 1]))
        assert lin.slopes[0, 0, 0] == pytest.approx(0, abs=1e-14)
        assert lin.intercepts[0, 0] == pytest.approx(2 / 3, rel=1e-14)
        # residuals (1/3, -2/3, 1/3) over one degree of freedom
        assert lin.residual_var[0, 0] == pytest.approx(2 / 3, rel=1e-12)

    def test_zero_intercept(self):
        lin = fit_linear_coefficients(bundle_1d([1, 2], [3, 6]), force_zero_intercept=True)
        assert lin.slopes[0, 0, 0] == pytest.approx(3)
        assert lin.zero_intercept

    def test_rank_deficient_names_location(self):
        b = SimulationBundle(np.array([0, 0, 1, 1]), np.array([0, 0, 0, 0]),
                             np.array([[1.0], [2.0], [1.0], [1.0]]), np.array([1.0, 2, 3, 4]))
        with pytest.raises(InvalidArgumentError, match="lambda_index=1, x_index=0"):
            fit_linear_coefficients(b)

    def test_recovers_benchmark(self):
        bench = example2_generate(8, seed=1)
        design = np.linspace(0.05, 0.95, 4)[:, None]
        lin = fit_linear_coefficients(bench.simulate(design, n_sim=5, seed=3), force_zero_intercept=True)
        np.testing.assert_allclose(lin.slopes, bench.coefficients(design), rtol=1e-10)


class TestGLS:
    def test_sample_mean(self, rng):
        z = rng.standard_normal(7)
        theta, cov = gls_blocks(np.ones((1, 7, 1)), z, np.full(7, 3.0))
        assert theta[0, 0] == pytest.approx(z.mean(), rel=1e-13)
        assert cov[0, 0, 0] == pytest.approx(3.0 / 7, rel=1e-13)

    def test_example1_blocks(self, rng):
        z = 5 + rng.standard_normal(50)
        for lam in (1.0, 3.3, 10.0):
            theta, cov = gls_blocks(np.full((1, 50, 1), lam), z, np.full(50, 2.0))
            assert theta[0, 0] == pytest.approx(z.mean() / lam, rel=1e-12)
            assert cov[0, 0, 0] == pytest.approx(2 / (50 * lam ** 2), rel=1e-12)

    def test_interpolating(self, rng):
        g = rng.standard_normal((1, 3, 3)) + 2 * np.eye(3)
        z = rng.standard_normal(3)
        theta, _ = gls_blocks(g, z, np.ones(3))
        np.testing.assert_allclose(theta[0], np.linalg.solve(g[0], z), rtol=1e-10)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000), st.floats(0.1, 10), st.integers(1, 3))
    def test_scaling(self, seed, c, p):
        r = np.random.default_rng(seed)
        g = r.standard_normal((2, 6, p))
        z, noise = r.standard_normal(6), r.uniform(0.5, 2, 6)
        t1, d1 = gls_blocks(g, z, noise)
        t2, d2 = gls_blocks(c * g, z, noise)
        np.testing.assert_allclose(t2, t1 / c, rtol=1e-9, atol=1e-12)
        np.testing.assert_allclose(d2, d1 / c ** 2, rtol=1e-9, atol=1e-14)
        for blk in d1:
            assert np.all(np.linalg.eigvalsh(blk) > 0)

    def test_singular(self):
        g = np.ones((2, 4, 2))
        with pytest.raises(RankError, match="lambda 0.7"):
            gls_blocks(g, np.zeros(4), np.ones(4), labels=[0.7, 0.9])


class TestAssemble:
    def test_intercepts_subtracted(self, rng):
        m, n = 3, 5
        g = rng.uniform(1, 2, (m, n, 1))
        g0 = rng.standard_normal((m, n))
        obs = ObservationSet(rng.standard_normal(n), np.arange(n), np.ones(n))
        data = assemble_calibration_matrices(LinearizedModel(g0, g, zero_intercept=False), obs,
                                             np.arange(m)[:, None])
        for j in range(m):
            expect = g[j, :, 0] @ (obs.z - g0[j]) / (g[j, :, 0] @ g[j, :, 0])
            assert data.theta_gls[j, 0] == pytest.approx(expect, rel=1e-12)

    def test_layout_of_G(self, rng):
        g = rng.standard_normal((3, 4, 2))
        obs = ObservationSet(rng.standard_normal(4), np.arange(4), np.ones(4))
        data = assemble_calibration_matrices(LinearizedModel.exact(g), obs, np.arange(3.0))
        np.testing.assert_array_equal(data.G[:, 2:4], g[1])

    def test_mismatched_sizes(self, rng):
        obs = ObservationSet(np.zeros(4), np.arange(4), np.ones(4))
        with pytest.raises(InvalidArgumentError):
            assemble_calibration_matrices(LinearizedModel.exact(np.ones((2, 3, 1))), obs, np.arange(2.0))
        with pytest.raises(InvalidArgumentError):
            assemble_calibration_matrices(LinearizedModel.exact(np.ones((2, 4, 1))), obs, np.arange(3.0))

    def test_observation_validation(self):
        with pytest.raises(InvalidArgumentError):
            ObservationSet(np.zeros(3), np.arange(3), np.array([1.0, 0.0, 1.0]))
