import math
import threading

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from logdetective.operator import (
    DimensionError,
    SpsdOperator,
    ValidationError,
    dense_eigh,
    make_rng,
    random_orthogonal,
    sample_gaussian_matrix,
    shifted_identity,
    trace_log_exact,
)

# sum(log1p(exp(-0.1 i) / 1e-4)), i = 1..1000, evaluated with mpmath at 40 digits
GEOM_1000_TRACE_LOG = 436.00330184848686148


def random_spsd(n, seed, rank=None):
    Z = make_rng(seed).standard_normal((n, rank or n))
    return Z @ Z.T


class TestGaussianSampling:
    def test_deterministic(self):
        a = sample_gaussian_matrix(2, 2, 7)
        b = sample_gaussian_matrix(2, 2, 7)
        assert np.array_equal(a, b)

    def test_seeds_differ(self):
        assert not np.array_equal(sample_gaussian_matrix(4, 3, 1), sample_gaussian_matrix(4, 3, 2))

    def test_moments(self):
        G = sample_gaussian_matrix(10000, 10, 1)
        assert abs(G.mean()) <= 0.02
        assert 0.95 <= G.var() <= 1.05

    def test_single_entry(self):
        G = sample_gaussian_matrix(1, 1, 3)
        assert G.shape == (1, 1) and np.isfinite(G[0, 0])

    def test_invalid_shape(self):
        with pytest.raises(DimensionError):
            sample_gaussian_matrix(0, 3, 1)

    def test_streams_are_order_independent(self):
        first = make_rng(5, 2, 7).standard_normal(4)
        make_rng(5, 2, 6).standard_normal(100)
        assert np.array_equal(first, make_rng(5, 2, 7).standard_normal(4))


class TestSpsdOperator:
    def test_counts_vectors_and_blocks(self):
        op = SpsdOperator.from_dense(np.eye(5))
        op.apply(np.ones(5))
        op.apply(np.ones((5, 3)))
        op @ np.ones(5)
        assert op.matvecs == 5

    def test_dense_agreement(self):
        M = random_spsd(30, 0)
        op = SpsdOperator.from_dense(M)
        v = make_rng(1).standard_normal(30)
        np.testing.assert_allclose(op.apply(v), M @ v, rtol=1e-12)

    def test_view_has_own_counter(self):
        op = SpsdOperator.from_spectrum([3.0, 1.0])
        view = op.view()
        view.apply(np.ones(2))
        assert view.matvecs == 1 and op.matvecs == 0

    def test_counter_is_thread_safe(self):
        op = SpsdOperator.from_spectrum(np.ones(4))

        def worker():
            for _ in range(500):
                op.apply(np.ones(4))

        threads = [threading.Thread(target=worker) for _ in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert op.matvecs == 2000

    def test_shifted_identity(self):
        op = SpsdOperator.from_spectrum([2.0, 0.5])
        B = shifted_identity(op)
        np.testing.assert_allclose(B.apply(np.array([1.0, 1.0])), [3.0, 1.5])
        assert op.matvecs == 1

    def test_rejects_wrong_shape(self):
        with pytest.raises(DimensionError):
            SpsdOperator.from_dense(np.eye(3)).apply(np.ones(4))

    def test_rotated_spectrum(self):
        lam = np.array([5.0, 2.0, 1.0, 0.0])
        op = SpsdOperator.from_spectrum(lam, rotation_seed=3)
        np.testing.assert_allclose(dense_eigh(op.dense())[0], lam, atol=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
    def test_linearity_symmetry_psd(self, seed, a, b):
        M = random_spsd(12, seed)
        op = SpsdOperator.from_dense(M)
        rng = make_rng(seed, 1)
        u, v = rng.standard_normal(12), rng.standard_normal(12)
        scale = np.linalg.norm(M, 2)
        np.testing.assert_allclose(
            op.apply(a * u + b * v), a * op.apply(u) + b * op.apply(v), atol=1e-10 * scale * 10
        )
        assert abs(u @ op.apply(v) - v @ op.apply(u)) <= 1e-10 * np.linalg.norm(u) * np.linalg.norm(v) * scale
        assert v @ op.apply(v) >= -1e-10 * (v @ v) * scale


class TestDenseEigh:
    def test_identity(self):
        lam, _ = dense_eigh(np.eye(3))
        np.testing.assert_allclose(lam, [1, 1, 1])

    def test_diagonal_permutation(self):
        lam, U = dense_eigh(np.diag([1.0, 4.0, 0.0]))
        np.testing.assert_allclose(lam, [4, 1, 0])
        np.testing.assert_allclose(np.abs(U), np.eye(3)[:, [1, 0, 2]])

    def test_reconstruction(self):
        M = random_spsd(50, 4)
        lam, U = dense_eigh(M)
        assert np.all(np.diff(lam) <= 0)
        resid = np.linalg.norm(M - (U * lam) @ U.T)
        assert resid <= 1e-10 * np.linalg.norm(M)

    def test_clamps_negative_roundoff(self):
        M = random_spsd(20, 1, rank=3)
        lam, _ = dense_eigh(M)
        assert lam.min() == 0.0 or lam.min() > 0

    def test_rejects_asymmetric(self):
        with pytest.raises(ValidationError):
            dense_eigh(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_size_guard(self):
        with pytest.raises(DimensionError):
            dense_eigh(np.broadcast_to(0.0, (8193, 8193)))


class TestTraceLogExact:
    def test_zero(self):
        assert trace_log_exact(np.zeros(5)) == 0.0

    def test_single(self):
        assert trace_log_exact([math.e - 1]) == pytest.approx(1.0, rel=1e-15)

    def test_geometric_summation(self):
        lam = np.exp(-0.1 * np.arange(1, 1001)) / 1e-4
        assert trace_log_exact(lam) == pytest.approx(GEOM_1000_TRACE_LOG, rel=1e-14)

    def test_negative_rejected(self):
        with pytest.raises(ValidationError):
            trace_log_exact([1.0, -1e-6])

    def test_rotation_invariance(self):
        lam = np.linspace(3, 0, 40) ** 2
        Q = random_orthogonal(40, 11)
        M = (Q * lam) @ Q.T
        M = 0.5 * (M + M.T)
        assert trace_log_exact(dense_eigh(M)[0]) == pytest.approx(trace_log_exact(lam), rel=1e-8)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(0, 1e6), min_size=1, max_size=30), st.integers(0, 29), st.floats(0, 10))
    def test_monotone(self, lam, i, bump):
        lam = np.array(lam)
        i = i % lam.size
        bigger = lam.copy()
        bigger[i] += bump
        assert trace_log_exact(bigger) >= trace_log_exact(lam)
