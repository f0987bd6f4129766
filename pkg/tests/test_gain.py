"""Monte-Carlo gain engine: scalings, identities, interval objective."""

import math

import numpy as np
import pytest

from steinpp import (
    BallWindow,
    DegenerateDenominatorError,
    ExponentialPhi,
    InvalidIntervalError,
    confidence_interval,
    datadriven_objective,
    datadriven_optimized,
    expected_gain,
    gamma_star,
    optimize_gamma_kappa,
    optimized_gain,
    stein_mse,
)
from steinpp.gain import quadratic_terms
from tests.conftest import make_rng


class TestExpectedGain:
    def test_gamma_zero_is_exactly_zero(self, rng):
        est = expected_gain(5, ExponentialPhi(0.0, 3.0), 10.0, BallWindow(2), 1000, rng)
        assert est.value == 0.0 and est.std_error == 0.0

    def test_reference_value_d2(self):
        # optimal (gamma, kappa) at k = 34, theta = 10, d = 2 gives ~46% gain
        window = BallWindow(2)
        params = optimize_gamma_kappa(
            34, 10.0, window, n_samples=50_000, rng=make_rng(11), n_confirm=None
        ).params
        family = ExponentialPhi(params.gamma, params.kappa)
        est = expected_gain(34, family, 10.0, window, 500_000, make_rng(12))
        assert est.value == pytest.approx(0.46, abs=0.03)

    def test_reference_value_d1(self):
        window = BallWindow(1)
        params = optimize_gamma_kappa(
            11, 5.0, window, n_samples=50_000, rng=make_rng(13), n_confirm=None
        ).params
        family = ExponentialPhi(params.gamma, params.kappa)
        est = expected_gain(11, family, 5.0, window, 500_000, make_rng(14))
        assert est.value == pytest.approx(0.43, abs=0.04)

    def test_mismatched_parameters_give_negative_gain(self):
        # k far below theta|W| with gamma < 0: the kernel sits in its negative region
        window = BallWindow(2)
        family = ExponentialPhi(-5.0, 3.0)
        est = expected_gain(10, family, 20.0, window, 50_000, make_rng(15))
        assert est.value < 0.0

    def test_rejects_bad_inputs(self, rng):
        family = ExponentialPhi(-1.0, 2.0)
        with pytest.raises(ValueError):
            expected_gain(5, family, -1.0, BallWindow(2), 1000, rng)
        with pytest.raises(ValueError):
            expected_gain(5, family, 10.0, BallWindow(2), 1, rng)
        with pytest.raises(ValueError):
            expected_gain(5, family, 10.0, BallWindow(2, 2.0), 1000, rng)


class TestSteinMse:
    def test_gamma_zero_gives_mle_mse(self, rng):
        est = stein_mse(5, ExponentialPhi(0.0, 3.0), 10.0, BallWindow(2), 1000, rng)
        assert est.value == 10.0 / BallWindow(2).volume

    def test_identity_with_expected_gain(self):
        window = BallWindow(2)
        family = ExponentialPhi(-8.0, 2.5)
        g = expected_gain(30, family, 10.0, window, 30_000, make_rng(21))
        m = stein_mse(30, family, 10.0, window, 30_000, make_rng(21))
        mse_mle = 10.0 / window.volume
        assert abs(m.value + g.value * mse_mle - mse_mle) <= 1e-12

    def test_reference_value_theta5_d1(self):
        window = BallWindow(1)
        params = optimize_gamma_kappa(
            11, 5.0, window, n_samples=50_000, rng=make_rng(22), n_confirm=None
        ).params
        family = ExponentialPhi(params.gamma, params.kappa)
        est = stein_mse(11, family, 5.0, window, 500_000, make_rng(23))
        assert est.value == pytest.approx(1.44, abs=0.12)

    def test_reference_value_theta40_d3(self):
        window = BallWindow(3)
        params = optimize_gamma_kappa(
            169, 40.0, window, n_samples=50_000, rng=make_rng(24), n_confirm=None
        ).params
        family = ExponentialPhi(params.gamma, params.kappa)
        est = stein_mse(169, family, 40.0, window, 500_000, make_rng(25))
        assert est.value == pytest.approx(4.95, abs=0.40)


class TestGammaStar:
    def test_degenerate_value_formula(self):
        # with Y constant the closed form reduces to elementary algebra
        y = np.full(100, 0.3)
        kappa = 3.0
        a, b = quadratic_terms(y, kappa)
        expected_num = 0.3 * (1 - 0.3) ** 2 - 0.3**2 * 2 * (1 - 0.3)
        expected_den = 0.3**2 * (1 - 0.3) ** 4
        assert a == pytest.approx(expected_num, rel=1e-12)
        assert b == pytest.approx(expected_den, rel=1e-12)
        gstar = a / (2 * kappa * b)
        assert gstar == pytest.approx(expected_num / (6 * expected_den), rel=1e-12)

    def test_raises_on_degenerate_denominator(self):
        # k far above theta |W|: Y = 1 almost surely
        with pytest.raises(DegenerateDenominatorError):
            gamma_star(200, 2.0, 10.0, BallWindow(1), 5_000, make_rng(31))

    def test_returns_denominator(self):
        est = gamma_star(34, 2.5, 10.0, BallWindow(2), 20_000, make_rng(32))
        assert est.denominator > 0
        assert est.value == pytest.approx(est.numerator / est.denominator, rel=1e-14)


class TestOptimizedGain:
    def test_identity_with_expected_gain_at_gamma_star(self):
        window = BallWindow(2)
        for seed, k, kappa, theta in [(41, 34, 2.5, 10.0), (42, 20, 3.0, 7.0), (43, 11, 2.0, 5.0)]:
            opt = optimized_gain(k, kappa, theta, window, 20_000, make_rng(seed))
            family = ExponentialPhi(opt.gamma_star, kappa)
            direct = expected_gain(k, family, theta, window, 20_000, make_rng(seed))
            assert abs(opt.gain.value - direct.value) <= 1e-10

    def test_grid_optimality_on_common_draws(self):
        # quadratic in gamma: the closed form beats every grid point, same draws
        window, k, kappa, theta, n = BallWindow(2), 34, 2.5, 10.0, 20_000
        opt = optimized_gain(k, kappa, theta, window, n, make_rng(51))
        gstar = opt.gamma_star
        grid = np.linspace(2 * gstar - abs(gstar), 2 * gstar + abs(gstar), 41)
        for g in grid:
            est = expected_gain(k, ExponentialPhi(g, kappa), theta, window, n, make_rng(51))
            assert opt.gain.value >= est.value - 1e-12

    def test_degenerate_constant_y_quadratic(self):
        # closed-form maximum value A^2/(4B) for constant Y
        y = np.full(10, 0.4)
        kappa = 2.0
        a, b = quadratic_terms(y, kappa)
        gstar = a / (2 * kappa * b)
        value = kappa * gstar * a - kappa**2 * gstar**2 * b
        assert value == pytest.approx(a * a / (4 * b), rel=1e-12)
        assert value >= 0.0


class TestConfidenceInterval:
    def test_interval_arithmetic(self):
        lo, hi = confidence_interval(10.0, 1.0, BallWindow(1))
        root5 = math.sqrt(5.0)
        assert lo == pytest.approx(10.0 - root5, rel=1e-12)
        assert hi == pytest.approx(10.0 + root5, rel=1e-12)

    def test_floor_applied(self):
        lo, hi = confidence_interval(0.5, 2.0, BallWindow(1))
        assert lo == 1e-3
        assert hi == pytest.approx(0.5 + 2.0 * math.sqrt(0.25), rel=1e-12)

    def test_invalid_interval(self):
        with pytest.raises(InvalidIntervalError):
            confidence_interval(5e-4, 1.0, BallWindow(1))


class TestDatadrivenObjective:
    def test_rho_zero_equals_point_gain(self):
        window = BallWindow(2)
        family = ExponentialPhi(-10.0, 2.5)
        a = datadriven_objective(34, family, 10.0, 0.0, window, 20_000, make_rng(61))
        b = expected_gain(34, family, 10.0, window, 20_000, make_rng(61))
        assert a == b

    def test_two_point_stratified_oracle(self):
        # small interval: the objective matches a 2-point midpoint quadrature of
        # the per-theta point gains, up to MC error and O(width^2) bias.  The
        # integrand gain(u)/u * 16/(d^2 |W|) is exactly expected_gain at u, so
        # the integral over the interval is length * average of point gains.
        window = BallWindow(2)
        theta_hat, rho = 10.0, 0.3
        family = ExponentialPhi(-12.0, 2.5)
        k, n = 33, 400_000
        est = datadriven_objective(k, family, theta_hat, rho, window, n, make_rng(62))
        lo, hi = confidence_interval(theta_hat, rho, window)
        length = hi - lo
        strata = [lo + length / 4.0, lo + 3.0 * length / 4.0]
        points = [
            expected_gain(k, family, u, window, n, make_rng(63 + i))
            for i, u in enumerate(strata)
        ]
        oracle = 0.5 * length * sum(p.value for p in points)
        se_oracle = 0.5 * length * math.hypot(*(p.std_error for p in points))
        tol = 3.0 * (est.std_error + se_oracle) + 1e-3 * abs(oracle)
        assert est.value == pytest.approx(oracle, abs=tol)

    def test_invalid_interval_propagates(self, rng):
        with pytest.raises(InvalidIntervalError):
            datadriven_objective(
                3, ExponentialPhi(-1.0, 2.0), 5e-4, 1.0, BallWindow(1), 1000, rng
            )


class TestDatadrivenOptimized:
    def test_identity_with_objective_at_gamma_star(self):
        window = BallWindow(2)
        k, kappa, theta_hat, rho, n = 33, 2.5, 10.0, 1.0, 20_000
        opt = datadriven_optimized(k, kappa, theta_hat, rho, window, n, make_rng(71))
        family = ExponentialPhi(opt.gamma_star, kappa)
        direct = datadriven_objective(k, family, theta_hat, rho, window, n, make_rng(71))
        assert abs(opt.gain.value - direct.value) <= 1e-10

    def test_rho_zero_delegates(self):
        window = BallWindow(2)
        a = datadriven_optimized(33, 2.5, 10.0, 0.0, window, 20_000, make_rng(72))
        b = optimized_gain(33, 2.5, 10.0, window, 20_000, make_rng(72))
        assert a == b
