import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from scaleopt.errors import DuplicatePointsError, InsufficientDataError
from scaleopt.gp import (
    CorrelationKernel,
    EvaluationHistory,
    build_posterior,
    correlation_matrix,
    estimate_mle,
    estimate_sample,
)

KERNEL = CorrelationKernel("exponential", 5.0)

FIG1_POINTS = np.array([[0.0], [0.2], [0.5], [0.9], [1.0]])
FIG1_VALUES = np.array([-0.8, -0.9, -0.65, -0.85, -0.55])


def history_1d(points, values, lower=0.0, upper=1.0):
    return EvaluationHistory([lower], [upper], np.atleast_2d(points).T
                             if np.ndim(points) == 1 else points, values)


def fig1_history():
    return EvaluationHistory([0.0], [1.0], FIG1_POINTS, FIG1_VALUES)


class TestHistory:
    def test_rejects_duplicates(self):
        with pytest.raises(DuplicatePointsError):
            history_1d(np.array([0.1, 0.1]), [1.0, 2.0])

    def test_rejects_point_outside_region(self):
        with pytest.raises(ValueError):
            history_1d(np.array([0.1, 1.5]), [1.0, 2.0])

    def test_rejects_mismatched_lengths(self):
        with pytest.raises(ValueError):
            history_1d(np.array([0.1, 0.2]), [1.0])

    def test_append(self):
        h = history_1d(np.array([0.1, 0.2]), [1.0, 2.0])
        h2 = h.with_observation([0.4], 3.0)
        assert h2.n == 3 and h.n == 2
        assert h2.values[-1] == 3.0


class TestCorrelationMatrix:
    def test_single_point_unit(self):
        h = history_1d(np.array([0.3]), [1.0])
        np.testing.assert_array_equal(correlation_matrix(h, KERNEL), [[1.0]])

    def test_two_point_exponential(self):
        h = history_1d(np.array([0.0, 0.2]), [0.0, 1.0])
        s = correlation_matrix(h, KERNEL)
        assert s[0, 1] == pytest.approx(math.exp(-1.0))
        assert s[1, 0] == s[0, 1]
        assert s[0, 0] == s[1, 1] == 1.0

    def test_fig1_matches_elementwise_oracle(self):
        h = fig1_history()
        s = correlation_matrix(h, KERNEL)
        ref = oracles.correlation_matrix_loop(FIG1_POINTS, KERNEL)
        np.testing.assert_allclose(s, ref, rtol=0, atol=0)

    def test_squared_exponential(self):
        kernel = CorrelationKernel("squared-exponential", 2.0)
        h = history_1d(np.array([0.0, 0.5]), [0.0, 1.0])
        s = correlation_matrix(h, kernel)
        assert s[0, 1] == pytest.approx(math.exp(-2.0 * 0.25))


class TestSampleEstimator:
    def test_constant_values(self):
        params = estimate_sample(history_1d(np.array([0.1, 0.5, 0.9]),
                                            [2.0, 2.0, 2.0]))
        assert params.mu == 2.0 and params.sigma2 == 0.0

    def test_two_points(self):
        params = estimate_sample(history_1d(np.array([0.1, 0.9]), [0.0, 2.0]))
        assert params.mu == pytest.approx(1.0)
        assert params.sigma2 == pytest.approx(2.0)

    def test_single_point_rejected(self):
        with pytest.raises(InsufficientDataError):
            estimate_sample(history_1d(np.array([0.1]), [1.0]))

    @given(a=st.floats(-1e3, 1e3).filter(lambda v: abs(v) > 1e-6),
           b=st.floats(-1e3, 1e3))
    @settings(max_examples=50, deadline=None)
    def test_affine_equivariance(self, a, b):
        base = estimate_sample(fig1_history())
        scaled = estimate_sample(
            EvaluationHistory([0.0], [1.0], FIG1_POINTS, a * FIG1_VALUES + b))
        assert scaled.mu == pytest.approx(a * base.mu + b, rel=1e-9, abs=1e-9)
        assert scaled.sigma2 == pytest.approx(a * a * base.sigma2, rel=1e-9)


class TestMleEstimator:
    def test_single_point(self):
        params = estimate_mle(history_1d(np.array([0.3]), [1.5]), KERNEL)
        assert params.mu == 1.5 and params.sigma2 == 0.0

    def test_constant_values(self):
        params = estimate_mle(history_1d(np.array([0.1, 0.5, 0.9]),
                                         [2.0, 2.0, 2.0]), KERNEL)
        assert params.mu == pytest.approx(2.0)
        assert params.sigma2 == pytest.approx(0.0, abs=1e-28)

    def test_fig1_matches_explicit_inverse_oracle(self):
        params = estimate_mle(fig1_history(), KERNEL)
        mu_ref, sigma2_ref = oracles.mle_closed_form(FIG1_POINTS, FIG1_VALUES,
                                                     KERNEL)
        assert params.mu == pytest.approx(mu_ref, rel=1e-10)
        assert params.sigma2 == pytest.approx(sigma2_ref, rel=1e-10)

    @given(a=st.floats(-1e3, 1e3).filter(lambda v: abs(v) > 1e-6),
           b=st.floats(-1e3, 1e3))
    @settings(max_examples=50, deadline=None)
    def test_affine_equivariance(self, a, b):
        base = estimate_mle(fig1_history(), KERNEL)
        scaled = estimate_mle(
            EvaluationHistory([0.0], [1.0], FIG1_POINTS, a * FIG1_VALUES + b),
            KERNEL)
        assert scaled.mu == pytest.approx(a * base.mu + b, rel=1e-9, abs=1e-9)
        assert scaled.sigma2 == pytest.approx(a * a * base.sigma2, rel=1e-9)


class TestConditionalMoments:
    def test_single_point_interpolates(self):
        posterior = build_posterior(history_1d(np.array([0.3]), [1.5]), KERNEL)
        m, s2, clamped = posterior.conditional_moments([0.3])
        assert m == pytest.approx(1.5) and s2 == pytest.approx(0.0, abs=1e-15)
        assert not clamped

    def test_far_point_reverts_to_prior(self):
        kernel = CorrelationKernel("exponential", 50.0)
        h = history_1d(np.array([0.0, 0.05]), [1.0, 3.0])
        posterior = build_posterior(h, kernel)
        m, s2, _ = posterior.conditional_moments([1.0])
        params = posterior.parameters
        assert m == pytest.approx(params.mu, rel=1e-6)
        assert s2 == pytest.approx(params.sigma2, rel=1e-6)

    def test_fig1_matches_explicit_inverse_oracle(self):
        posterior = build_posterior(fig1_history(), KERNEL)
        params = posterior.parameters
        m, s2, _ = posterior.conditional_moments([0.35])
        m_ref, s2_ref = oracles.conditional_moments_explicit(
            FIG1_POINTS, FIG1_VALUES, KERNEL, params.mu, params.sigma2, [0.35])
        assert m == pytest.approx(m_ref, rel=1e-10)
        assert s2 == pytest.approx(s2_ref, rel=1e-10)

    def test_random_histories_match_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            n = int(rng.integers(2, 7))
            d = int(rng.integers(1, 3))
            points, values = oracles.random_history(rng, n, d)
            h = EvaluationHistory([0.0] * d, [1.0] * d, points, values)
            posterior = build_posterior(h, KERNEL)
            params = posterior.parameters
            x = rng.uniform(0, 1, size=d)
            m, s2, _ = posterior.conditional_moments(x)
            m_ref, s2_ref = oracles.conditional_moments_explicit(
                points, values, KERNEL, params.mu, params.sigma2, x)
            assert m == pytest.approx(m_ref, rel=1e-10, abs=1e-12)
            assert s2 == pytest.approx(max(s2_ref, 0.0), rel=1e-10, abs=1e-12)

    def test_interpolation_and_variance_bounds(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            n = int(rng.integers(2, 11))
            d = int(rng.integers(1, 3))
            points, values = oracles.random_history(rng, n, d)
            h = EvaluationHistory([0.0] * d, [1.0] * d, points, values)
            posterior = build_posterior(h, KERNEL)
            sigma2 = posterior.parameters.sigma2
            for i in range(n):
                m, s2, _ = posterior.conditional_moments(points[i])
                assert abs(m - values[i]) <= 1e-8 * (1 + abs(values[i]))
                assert s2 <= 1e-8 * sigma2 + 1e-20
            grid = rng.uniform(0, 1, size=(200, d))
            _, variances, _ = posterior.moments_grid(grid)
            assert np.all(variances >= 0)
            assert np.all(variances <= sigma2 * (1 + 1e-10))

    def test_standardized_moment_scale_invariance(self):
        h = fig1_history()
        a, b = 3.9765, 3.1804
        scaled = EvaluationHistory([0.0], [1.0], FIG1_POINTS,
                                   a * FIG1_VALUES + b)
        post_f = build_posterior(h, KERNEL)
        post_z = build_posterior(scaled, KERNEL)
        y_on = FIG1_VALUES.min() - 0.1 * post_f.parameters.sigma
        z_on = (a * FIG1_VALUES + b).min() - 0.1 * post_z.parameters.sigma
        xs = np.linspace(0.01, 0.99, 97)[:, None]
        m_f, v_f, _ = post_f.moments_grid(xs)
        m_z, v_z, _ = post_z.moments_grid(xs)
        mask = np.sqrt(v_f) > 1e-6
        q_f = (y_on - m_f[mask]) / np.sqrt(v_f[mask])
        q_z = (z_on - m_z[mask]) / np.sqrt(v_z[mask])
        np.testing.assert_allclose(q_z, q_f, rtol=1e-9)

    def test_grid_moments_match_pointwise(self):
        posterior = build_posterior(fig1_history(), KERNEL)
        xs = np.linspace(0, 1, 31)[:, None]
        means, variances, _ = posterior.moments_grid(xs)
        for k, x in enumerate(xs):
            m, s2, _ = posterior.conditional_moments(x)
            assert means[k] == pytest.approx(m, rel=1e-12, abs=1e-15)
            assert variances[k] == pytest.approx(s2, rel=1e-12, abs=1e-15)
