import numpy as np
import pytest

from signstorm import (
    InvalidConstant,
    bounded_nonconvex,
    make_problem,
    make_rng,
    noisy_quadratic,
    synthetic_logistic,
    verify_assumptions,
)


def central_difference(value_fn, x, h=1e-5):
    d = len(x)
    g = np.empty(d)
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        g[j] = (value_fn(x + e) - value_fn(x - e)) / (2 * h)
    return g


class TestNoisyQuadratic:
    def test_hand_arithmetic(self):
        p = noisy_quadratic(2, np.ones(2), np.zeros(2), np.array([1.0, 2.0]))
        np.testing.assert_array_equal(p.exact_grad(np.array([1.0, 2.0])), [1.0, 2.0])
        assert p.value(np.array([1.0, 2.0])) == 2.5
        assert p.constants.delta_upper == 2.5
        np.testing.assert_array_equal(p.constants.x_star, [0.0, 0.0])

    def test_zero_noise_means_exact(self):
        p = noisy_quadratic(3, np.ones(3), np.zeros(3), np.ones(3))
        rng = make_rng(0)
        for _ in range(20):
            xi = p.draw_noise(rng)
            x = rng.standard_normal(3)
            np.testing.assert_array_equal(p.stoch_grad(x, xi), p.exact_grad(x))

    def test_declared_smoothness_constants(self):
        h = np.array([1.0, 2.0, 3.0, 4.0])
        p = noisy_quadratic(4, h, np.zeros(4), np.ones(4))
        np.testing.assert_allclose(p.constants.L_vec, [2.0, 4.0, 6.0, 8.0])
        # numeric check of the per-coordinate inequality over random triples
        rng = make_rng(1)
        sqrt_d = 2.0
        for _ in range(10_000):
            x, y = rng.standard_normal(4), rng.standard_normal(4)
            xi = p.draw_noise(rng)
            diff = np.abs(p.stoch_grad(x, xi) - p.stoch_grad(y, xi))
            assert np.all(diff * sqrt_d <= p.constants.L_vec * np.linalg.norm(x - y)
                          * (1 + 1e-12))

    def test_additive_noise_point_independent(self):
        # the same payload enters both evaluations; each recovered noise differs
        # from it only by the rounding of one addition
        p = noisy_quadratic(3, np.ones(3), 0.4 * np.ones(3), np.ones(3))
        rng = make_rng(2)
        xi = p.draw_noise(rng)
        x, y = rng.standard_normal(3), rng.standard_normal(3)
        nx = p.stoch_grad(x, xi) - p.exact_grad(x)
        ny = p.stoch_grad(y, xi) - p.exact_grad(y)
        ulp = np.spacing(np.maximum(np.abs(p.exact_grad(x)), np.abs(p.exact_grad(y))))
        assert np.all(np.abs(nx - xi.payload) <= ulp)
        assert np.all(np.abs(ny - xi.payload) <= ulp)

    def test_invalid_hessian(self):
        with pytest.raises(InvalidConstant):
            noisy_quadratic(2, np.array([1.0, 0.0]), np.zeros(2), np.ones(2))

    def test_presample_matches_single_draws(self):
        p = noisy_quadratic(3, np.ones(3), np.array([0.1, 0.0, 2.0]), np.ones(3))
        batch = p.presample_payloads(make_rng(5), 50)
        rng = make_rng(5)
        singles = np.stack([p.draw_noise(rng).payload for _ in range(50)])
        np.testing.assert_array_equal(batch, singles)


class TestBoundedNonConvex:
    def test_global_minimum_at_origin(self):
        p = bounded_nonconvex(3, np.ones(3), np.zeros(3), np.ones(3))
        np.testing.assert_array_equal(p.exact_grad(np.zeros(3)), np.zeros(3))
        assert p.value(np.zeros(3)) == 0.0
        rng = make_rng(3)
        for _ in range(100):
            assert p.value(rng.standard_normal(3) * 5) >= 0.0

    def test_curvature_supremum_is_two(self):
        # numeric maximization of |d^2/du^2 u^2/(1+u^2)| over a fine grid
        u = np.linspace(-10, 10, 2_000_001)
        h2 = 2 * (1 - 3 * u ** 2) / (1 + u ** 2) ** 3
        assert np.max(np.abs(h2)) == pytest.approx(2.0, abs=1e-9)
        assert abs(u[np.argmax(np.abs(h2))]) < 1e-5

    def test_gradient_matches_finite_differences(self):
        a = np.array([1.0, 0.5, 2.0])
        p = bounded_nonconvex(3, a, np.zeros(3), np.ones(3))
        rng = make_rng(4)
        for _ in range(100):
            x = rng.standard_normal(3) * 3
            np.testing.assert_allclose(p.exact_grad(x),
                                       central_difference(p.value, x),
                                       atol=1e-6)

    def test_nonconvexity_along_coordinates(self):
        # value function flattens: f(3x) < 9 f(x) fails convexity through 0
        p = bounded_nonconvex(1, np.ones(1), np.zeros(1), np.ones(1))
        x = np.array([2.0])
        mid = p.value(x)
        assert p.value(2 * x) < 2 * mid  # sublinear growth beyond the shoulder


class TestSyntheticLogistic:
    def test_single_sample_is_exact(self):
        p = synthetic_logistic(3, 1, 1.0, np.zeros(3))
        rng = make_rng(6)
        xi = p.draw_noise(rng)
        x = rng.standard_normal(3)
        np.testing.assert_allclose(p.stoch_grad(x, xi), p.exact_grad(x), rtol=1e-15)

    def test_exhaustive_unbiasedness(self):
        p = synthetic_logistic(4, 12, 1.0, np.zeros(4))
        rng = make_rng(7)
        for _ in range(10):
            x = rng.standard_normal(4)
            mean = np.mean([p.stoch_grad(x, xi) for xi in p.noise_support()], axis=0)
            np.testing.assert_allclose(mean, p.exact_grad(x), atol=1e-12)

    def test_noise_bound_over_all_indices(self):
        p = synthetic_logistic(4, 12, 1.5, np.zeros(4))
        sigma = p.constants.sigma_vec
        rng = make_rng(8)
        for _ in range(100):
            x = rng.standard_normal(4) * 2
            exact = p.exact_grad(x)
            for xi in p.noise_support():
                assert np.all(np.abs(p.stoch_grad(x, xi) - exact) <= sigma)

    def test_gradient_matches_finite_differences(self):
        p = synthetic_logistic(3, 8, 1.0, np.zeros(3))
        rng = make_rng(9)
        for _ in range(25):
            x = rng.standard_normal(3)
            np.testing.assert_allclose(p.exact_grad(x),
                                       central_difference(p.value, x), atol=1e-6)

    def test_data_generation_deterministic(self):
        a = synthetic_logistic(3, 5, 1.0, np.zeros(3), seed=42)
        b = synthetic_logistic(3, 5, 1.0, np.zeros(3), seed=42)
        np.testing.assert_array_equal(a.features, b.features)
        np.testing.assert_array_equal(a.labels, b.labels)


class TestVerifyAssumptions:
    def test_quadratic_passes(self):
        p = noisy_quadratic(4, np.array([1.0, 2.0, 3.0, 4.0]),
                            0.5 * np.ones(4), np.ones(4))
        rep = verify_assumptions(p, 2000, make_rng(10))
        assert rep.all_passed
        for check in rep.checks():
            assert check.worst_ratio <= 1.0

    def test_halved_L_fails_with_ratio_near_two(self):
        import dataclasses
        p = noisy_quadratic(4, np.ones(4), 0.5 * np.ones(4), np.ones(4))
        p.constants = dataclasses.replace(p.constants,
                                          L_vec=0.5 * p.constants.L_vec)
        rep = verify_assumptions(p, 10_000, make_rng(11))
        assert not rep.smoothness.passed
        assert rep.smoothness.worst_ratio == pytest.approx(2.0, rel=0.15)

    def test_zero_noise_reported_as_pass(self):
        p = noisy_quadratic(3, np.ones(3), np.zeros(3), np.ones(3))
        rep = verify_assumptions(p, 500, make_rng(12))
        assert rep.noise_bound.passed
        assert rep.noise_bound.worst_ratio == 0.0

    def test_logistic_passes(self):
        p = synthetic_logistic(3, 10, 1.0, np.zeros(3))
        rep = verify_assumptions(p, 1000, make_rng(13))
        assert rep.all_passed

    def test_bounded_nonconvex_passes(self):
        p = bounded_nonconvex(4, np.ones(4), 0.3 * np.ones(4), np.ones(4))
        rep = verify_assumptions(p, 2000, make_rng(14))
        assert rep.all_passed

    def test_probe_count_validation(self):
        p = noisy_quadratic(2, np.ones(2), np.zeros(2), np.ones(2))
        with pytest.raises(InvalidConstant):
            verify_assumptions(p, 0, make_rng(0))


class TestMakeProblem:
    def test_scalar_broadcast(self):
        p = make_problem("noisy_quadratic",
                         {"d": 3, "hessian_diag": 2.0, "sigma": 0.1, "x_init": 1.0})
        np.testing.assert_array_equal(p.h, [2.0, 2.0, 2.0])

    def test_unknown_name(self):
        with pytest.raises(InvalidConstant):
            make_problem("rosenbrock", {"d": 2})

    def test_unknown_params_rejected(self):
        with pytest.raises(InvalidConstant):
            make_problem("noisy_quadratic", {"d": 2, "bogus": 1})

    def test_missing_dimension(self):
        with pytest.raises(InvalidConstant):
            make_problem("noisy_quadratic", {})
