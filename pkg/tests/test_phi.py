"""Shaping functions: derivatives, admissibility, kernel identities."""

import math

import numpy as np
import pytest

from steinpp import (
    ExponentialPhi,
    MollifiedLinearPhi,
    find_sign_change,
    gain_kernel,
    phi_eval,
    validate_property_p,
)
from steinpp.selftest import fd_first, fd_second


def central_differences(family, t, h=1e-5):
    return fd_first(family, t, h), fd_second(family, t, h)


def assert_rel(a, b, tol):
    assert abs(a - b) <= tol * max(1.0, abs(b)), f"{a} vs {b}"


class TestExponentialPhi:
    @pytest.mark.parametrize("gamma,kappa", [(0.5, 2.0), (-3.0, 3.0), (-12.0, 2.5), (1.0, 6.0)])
    def test_boundary_values(self, gamma, kappa):
        phi, d1, _ = ExponentialPhi(gamma, kappa).eval(1.0)
        assert phi == 1.0
        assert d1 == 0.0

    def test_gamma_zero_is_constant(self):
        family = ExponentialPhi(0.0, 3.0)
        t = np.linspace(0, 1, 11)
        phi, d1, d2 = family.eval(t)
        assert np.all(phi == 1.0) and np.all(d1 == 0.0) and np.all(d2 == 0.0)

    def test_value_at_zero(self):
        phi, _, _ = ExponentialPhi(-3.0, 3.0).eval(0.0)
        assert phi == pytest.approx(math.exp(-3.0), rel=1e-12)

    def test_derivatives_match_finite_differences(self):
        family = ExponentialPhi(-3.0, 3.0)
        for t in np.linspace(0.02, 0.98, 25):
            fd1, fd2 = central_differences(family, t)
            _, d1, d2 = family.eval(t)
            assert_rel(fd1, d1, 1e-6)
            assert_rel(fd2, d2, 1e-6)

    def test_rejects_small_kappa(self):
        with pytest.raises(ValueError):
            ExponentialPhi(1.0, 1.0)

    def test_rejects_out_of_domain(self):
        with pytest.raises(ValueError):
            ExponentialPhi(1.0, 2.0).eval(1.5)


class TestMollifiedLinearPhi:
    def test_plateau_is_linear(self):
        family = MollifiedLinearPhi(0.5, 0.05)
        lo, hi = family.plateau
        for t in np.linspace(lo, hi, 9):
            phi, d1, d2 = family.eval(t)
            assert phi == pytest.approx(1.0 - t + 0.5, abs=1e-8)
            assert d1 == pytest.approx(-1.0, abs=1e-8)
            assert abs(d2) < 1e-6

    def test_flat_at_one(self):
        _, d1, _ = MollifiedLinearPhi(0.5, 0.05).eval(1.0)
        assert abs(d1) < 1e-10

    def test_positive_endpoint(self):
        phi, _, _ = MollifiedLinearPhi(0.5, 0.05).eval(1.0)
        assert phi == pytest.approx(0.5, abs=1e-10)

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            MollifiedLinearPhi(0.0, 0.05)
        with pytest.raises(ValueError):
            MollifiedLinearPhi(0.5, 0.6)


class TestFiniteDifferenceGrid:
    """Derivative consistency over a 1000-point grid, relative 1e-5."""

    def test_exponential_family(self):
        family = ExponentialPhi(-3.0, 3.0)
        grid = np.linspace(1e-3, 1.0 - 1e-3, 1000)
        for t in grid:
            fd1, fd2 = central_differences(family, t)
            _, d1, d2 = family.eval(t)
            assert_rel(fd1, d1, 1e-5)
            assert_rel(fd2, d2, 1e-5)

    def test_mollified_family(self):
        family = MollifiedLinearPhi(0.5, 0.05)
        grid = np.linspace(1e-3, 1.0 - 1e-3, 1000)
        for t in grid:
            fd1, fd2 = central_differences(family, t)
            _, d1, d2 = family.eval(t)
            assert_rel(fd1, d1, 1e-5)
            assert_rel(fd2, d2, 1e-5)


class TestGainKernel:
    @pytest.mark.parametrize(
        "family",
        [ExponentialPhi(-3.0, 3.0), ExponentialPhi(0.5, 2.0), MollifiedLinearPhi(0.5, 0.05)],
    )
    def test_zero_at_origin(self, family):
        assert gain_kernel(family, 0.0) == 0.0

    def test_kappa_two_closed_form(self):
        gamma = 0.5
        family = ExponentialPhi(gamma, 2.0)
        for t in np.linspace(0.0, 1.0, 21):
            expected = 2 * gamma * t * (1 - 2 * t - 2 * gamma * t * (1 - t) ** 2)
            assert gain_kernel(family, t) == pytest.approx(expected, abs=1e-12)
        # endpoint value forced algebraically
        assert gain_kernel(family, 1.0) == pytest.approx(-2 * gamma, abs=1e-12)

    def test_mollified_plateau_value(self):
        family = MollifiedLinearPhi(0.5, 0.05)
        assert gain_kernel(family, 0.5) == pytest.approx(0.5, abs=1e-9)

    @pytest.mark.parametrize("gamma,kappa", [(-3.0, 3.0), (0.5, 2.0), (-12.0, 2.5), (2.0, 7.5)])
    def test_closed_form_matches_generic(self, gamma, kappa):
        family = ExponentialPhi(gamma, kappa)
        t = np.linspace(0.0, 1.0 - 1e-12, 513)
        diff = np.abs(family.gain_kernel_closed(t) - gain_kernel(family, t))
        assert diff.max() <= 1e-12

    @pytest.mark.parametrize("gamma", [-8.0, -1.0, 0.3, 5.0])
    def test_kernel_takes_both_signs(self, gamma):
        # no admissible shaping function has a nonnegative kernel everywhere
        family = ExponentialPhi(gamma, 3.0)
        values = family.gain_kernel_closed(np.linspace(1e-4, 1.0 - 1e-9, 2001))
        assert values.min() < 0.0 < values.max()


class TestPropertyP:
    def test_exponential_passes(self):
        report = validate_property_p(ExponentialPhi(-3.0, 3.0))
        assert report.passed and report.positive and report.flat_at_one

    def test_mollified_passes(self):
        report = validate_property_p(MollifiedLinearPhi(0.5, 0.05))
        assert report.passed

    def test_kappa_one_fails(self):
        # exp(gamma (1-t)): derivative at 1 is -gamma != 0
        class KappaOne:
            gamma = 0.7

            def eval(self, t):
                t = np.asarray(t, dtype=float)
                phi = np.exp(self.gamma * (1.0 - t))
                return phi, -self.gamma * phi, self.gamma**2 * phi

        report = validate_property_p(KappaOne())
        assert not report.passed
        assert report.positive and not report.flat_at_one
        assert report.dphi_at_one == pytest.approx(-0.7)


class TestFindSignChange:
    def test_kappa_two_root_of_cubic(self):
        # root of 1 - 2t - t(1-t)^2 for gamma = 1/2
        family = ExponentialPhi(0.5, 2.0)
        t0 = find_sign_change(family)
        f = lambda t: 1 - 2 * t - t * (1 - t) ** 2
        lo, hi = 0.0, 1.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if f(mid) > 0:
                lo = mid
            else:
                hi = mid
        assert t0 == pytest.approx(0.5 * (lo + hi), abs=1e-9)

    def test_small_gamma_limit(self):
        t0 = find_sign_change(ExponentialPhi(1e-8, 2.0))
        assert t0 == pytest.approx(0.5, abs=1e-6)

    def test_sign_pattern(self):
        family = ExponentialPhi(-3.0, 3.0)
        t0 = find_sign_change(family)
        assert 0.0 < t0 < 1.0
        before = family.gain_kernel_closed(np.linspace(t0 / 10, t0 * 0.99, 50))
        after = family.gain_kernel_closed(np.linspace(t0 * 1.01, 1.0 - t0 / 100, 50))
        assert np.all(np.sign(before) == -1.0)  # sign(gamma) with gamma < 0
        assert np.all(np.sign(after[:-1]) == 1.0)

    def test_rejects_gamma_zero(self):
        with pytest.raises(ValueError):
            find_sign_change(ExponentialPhi(0.0, 2.0))


class TestPhiEval:
    def test_dispatches(self):
        family = ExponentialPhi(-1.0, 2.0)
        assert phi_eval(family, 0.5) == family.eval(0.5)
