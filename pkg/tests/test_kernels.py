import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gplincc import InvalidArgumentError, NumericError, kernels
from gplincc.kernels import (
    JITTER,
    ComponentKernel,
    VectorizationLayout,
    build_prior_cov,
    cross_cov,
    kernel_matrix,
    matern52,
)


def matern_oracle(d, s2, psi):
    r = math.sqrt(5.0) * d / psi
    return s2 * (1.0 + r + r * r / 3.0) * math.exp(-r)


class TestMatern52:
    def test_zero_distance(self):
        assert matern52(0.0, 1.0, 1.0) == 1.0

    def test_unit_distance(self):
        # independent scalar evaluation
        assert matern52(1.0, 1.0, 1.0) == pytest.approx(0.523994, abs=1e-6)
        assert matern52(1.0) == pytest.approx(matern_oracle(1.0, 1.0, 1.0), rel=1e-14)

    def test_far_field(self):
        assert matern52(1e6, 1.0, 1.0) < 1e-300

    @given(st.floats(0, 50), st.floats(0.01, 100), st.floats(0.01, 10))
    def test_matches_oracle(self, d, s2, psi):
        np.testing.assert_allclose(matern52(d, s2, psi), matern_oracle(d, s2, psi), rtol=1e-12, atol=1e-300)

    def test_monotone(self):
        d = np.linspace(0, 20, 5001)
        k = matern52(d, 2.0, 0.7)
        assert np.all(np.diff(k) <= 0)

    @pytest.mark.parametrize("args", [(np.nan, 1, 1), (np.inf, 1, 1), (1, 0, 1), (1, 1, -1), (-1, 1, 1)])
    def test_invalid(self, args):
        with pytest.raises(InvalidArgumentError):
            matern52(*args)


class TestKernelMatrix:
    def test_single_point(self):
        k = ComponentKernel(3.5, [0.2])
        np.testing.assert_array_equal(kernel_matrix([[0.4]], [[0.4]], k), [[3.5]])

    def test_symmetric(self, rng):
        A = rng.uniform(size=(12, 2))
        K = kernel_matrix(A, A, ComponentKernel(2.0, [0.3, 0.5]))
        assert np.max(np.abs(K - K.T)) == 0.0

    def test_transpose(self, rng):
        A, B = rng.uniform(size=(5, 2)), rng.uniform(size=(7, 2))
        k = ComponentKernel(1.3, [0.3, 0.9])
        np.testing.assert_array_equal(kernel_matrix(A, B, k), kernel_matrix(B, A, k).T)

    def test_product_over_dimensions(self):
        k = ComponentKernel(1.0, [0.4, 2.0])
        val = kernel_matrix([[0.0, 0.5]], [[0.3, 0.5]], k)[0, 0]
        assert val == pytest.approx(matern_oracle(0.3, 1.0, 0.4) * 1.0, rel=1e-14)
        k2 = ComponentKernel(2.5, [0.4, 2.0])
        val2 = kernel_matrix([[0.0, 0.0]], [[0.3, 1.1]], k2)[0, 0]
        assert val2 == pytest.approx(2.5 * matern_oracle(0.3, 1, 0.4) * matern_oracle(1.1, 1, 2.0), rel=1e-13)

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            kernel_matrix(np.zeros((2, 1)), np.zeros((2, 2)), ComponentKernel(1.0, [1.0]))


class TestPriorCov:
    def kernels(self):
        return [ComponentKernel(2.0, [0.3]), ComponentKernel(0.5, [0.8])]

    def test_single_component(self, rng):
        d = rng.uniform(size=(6, 1))
        k = ComponentKernel(1.7, [0.25])
        K = build_prior_cov(d, [k])
        np.testing.assert_allclose(K, kernel_matrix(d, d, k) + JITTER * 1.7 * np.eye(6), rtol=0, atol=1e-15)

    def test_one_design_point(self):
        K = build_prior_cov([[0.3]], self.kernels())
        np.testing.assert_allclose(K, np.diag([2.0, 0.5]) * (1 + JITTER), rtol=1e-15)

    def test_permutation_identity(self, rng):
        d = rng.uniform(size=(5, 1))
        ks = self.kernels()
        K = build_prior_cov(d, ks, jitter=False)
        P = VectorizationLayout(2, 5).permutation()
        expected = np.zeros((10, 10))
        for u, k in enumerate(ks):
            expected[u * 5:(u + 1) * 5, u * 5:(u + 1) * 5] = kernel_matrix(d, d, k)
        np.testing.assert_array_equal(K[np.ix_(P, P)], expected)

    def test_layout_index(self):
        lay = VectorizationLayout(3, 4)
        assert lay.size == 12
        assert lay.index(2, 1) == 7

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 20), st.integers(0, 10_000))
    def test_positive_definite(self, m, seed):
        d = np.random.default_rng(seed).uniform(size=(m, 1))
        K = build_prior_cov(d, self.kernels())
        np.linalg.cholesky(K)
        Kx = build_prior_cov(d, self.kernels(), jitter=False)
        assert np.max(np.abs(Kx - Kx.T)) == 0.0

    def test_jitter_escalates(self, monkeypatch):
        monkeypatch.setattr(kernels, "JITTER", 1e-20)
        d = np.linspace(0, 1, 30)[:, None]
        K = build_prior_cov(d, [ComponentKernel(1.0, [50.0])])
        np.linalg.cholesky(K)
        assert K[0, 0] - 1.0 > 1e-19

    def test_jitter_exhausted(self, monkeypatch):
        monkeypatch.setattr(kernels, "JITTER", 1e-20)
        monkeypatch.setattr(kernels, "MAX_JITTER", 1e-19)
        d = np.linspace(0, 1, 30)[:, None]
        with pytest.raises(NumericError, match="condition number"):
            build_prior_cov(d, [ComponentKernel(1.0, [50.0])])


class TestCrossCov:
    def test_self(self, rng):
        d = rng.uniform(size=(4, 1))
        ks = [ComponentKernel(2.0, [0.3]), ComponentKernel(0.5, [0.8])]
        np.testing.assert_array_equal(cross_cov(d, d, ks), build_prior_cov(d, ks, jitter=False))

    def test_row_at_design_point(self, rng):
        d = rng.uniform(size=(4, 1))
        ks = [ComponentKernel(2.0, [0.3]), ComponentKernel(0.5, [0.8])]
        C = cross_cov(d[2:3], d, ks)
        np.testing.assert_array_equal(C, build_prior_cov(d, ks, jitter=False)[4:6])

    def test_far_decay(self):
        ks = [ComponentKernel(2.0, [0.3]), ComponentKernel(0.5, [0.8])]
        C = cross_cov([[1e3]], [[0.0], [0.5]], ks)
        assert np.max(np.abs(C)) < 1e-12 * 2.0
