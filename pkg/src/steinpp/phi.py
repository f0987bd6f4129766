"""Shaping functions for the shrinkage correction, and their gain kernel.

A shaping function ``phi`` is a positive, twice differentiable function on
[0, 1] with ``phi'(1) = 0`` (the admissibility property checked by
:func:`validate_property_p`).  Its gain kernel

    G(t) = -t * (phi'(t) + t * phi''(t)) / phi(t)

drives both the estimator's correction term and its mean squared error.  Two
families ship: an exponential one with closed-form derivatives, and a
mollified linear one built by convolving an indicator with a bump function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ExponentialPhi",
    "MollifiedLinearPhi",
    "PropertyPReport",
    "phi_eval",
    "gain_kernel",
    "validate_property_p",
    "find_sign_change",
]

_DPHI_AT_ONE_TOL = 1e-8


def _check_domain(t: np.ndarray):
    if np.any(t < 0.0) or np.any(t > 1.0):
        raise ValueError("t must lie in [0, 1]")


@dataclass(frozen=True)
class ExponentialPhi:
    """phi(t) = exp(gamma * (1 - t)^kappa), kappa >= 2.

    All derivatives are closed-form.  (1-t)^(kappa-2) at t = 1 follows the
    continuous extension: 1 when kappa == 2, 0 when kappa > 2.
    """

    gamma: float
    kappa: float

    def __post_init__(self):
        if not math.isfinite(self.gamma):
            raise ValueError(f"gamma must be finite, got {self.gamma!r}")
        if not (math.isfinite(self.kappa) and self.kappa >= 2.0):
            raise ValueError(f"kappa must be >= 2 for the exponential family, got {self.kappa!r}")

    def eval(self, t):
        """Return (phi, phi', phi'') at ``t`` (vectorised over [0, 1])."""
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        _check_domain(t)
        g, k = self.gamma, self.kappa
        om = 1.0 - t
        phi = np.exp(g * om**k)
        d1 = -g * k * om ** (k - 1.0) * phi
        d2 = (g * k * (k - 1.0) * om ** (k - 2.0) + g * g * k * k * om ** (2.0 * k - 2.0)) * phi
        if scalar:
            return float(phi[0]), float(d1[0]), float(d2[0])
        return phi, d1, d2

    def gain_kernel_closed(self, t):
        """Closed form of the gain kernel for this family."""
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        _check_domain(t)
        g, k = self.gamma, self.kappa
        om = 1.0 - t
        out = (
            g * k * t * om ** (k - 1.0)
            - g * g * k * k * t * t * om ** (2.0 * (k - 1.0))
            - t * t * g * k * (k - 1.0) * om ** (k - 2.0)
        )
        return float(out[0]) if scalar else out


def _bump(u):
    """exp(-1/(1-|u|)) on (-1, 1), zero outside; vanishes flatly at +-1."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - np.abs(u[inside])))
    return out


def _bump_derivative(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = (np.abs(u) < 1.0) & (u != 0.0)
    a = np.abs(u[inside])
    out[inside] = -np.sign(u[inside]) * np.exp(-1.0 / (1.0 - a)) / (1.0 - a) ** 2
    return out


def _adaptive_simpson(f, a, b, tol):
    """Recursive adaptive Simpson quadrature to absolute tolerance ``tol``."""

    def simpson(fa, fm, fb, a_, b_):
        return (b_ - a_) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a_, b_, fa, fm, fb, whole, tol_, depth):
        m = 0.5 * (a_ + b_)
        lm, rm = 0.5 * (a_ + m), 0.5 * (m + b_)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, a_, m)
        right = simpson(fm, frm, fb, m, b_)
        if depth <= 0 or abs(left + right - whole) <= 15.0 * tol_:
            return left + right + (left + right - whole) / 15.0
        return recurse(a_, m, fa, flm, fm, left, tol_ / 2.0, depth - 1) + recurse(
            m, b_, fm, frm, fb, right, tol_ / 2.0, depth - 1
        )

    if b <= a:
        return 0.0
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    return recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 48)


@dataclass(frozen=True)
class MollifiedLinearPhi:
    """phi(t) = (1 - t) * (indicator([0, 1-gamma]) * psi_gamma)(t) + kappa.

    ``psi_gamma(s) = bump(s/gamma) / (gamma * c)`` is a unit-mass mollifier
    supported on [-gamma, gamma]; ``c`` normalises the bump and is computed
    once by adaptive Simpson quadrature.  On the plateau [gamma, 1-2*gamma]
    the convolution equals 1, so phi(t) = 1 - t + kappa there and the gain
    kernel reduces to t / (1 - t + kappa).
    """

    kappa: float
    gamma: float
    quad_tol: float = 1e-10
    _bump_mass: float = field(init=False, repr=False, compare=False, default=0.0)

    def __post_init__(self):
        if not (math.isfinite(self.kappa) and self.kappa > 0.0):
            raise ValueError(f"kappa must be > 0, got {self.kappa!r}")
        if not (0.0 < self.gamma < 0.5):
            raise ValueError(f"gamma must lie in (0, 1/2), got {self.gamma!r}")
        if not (0.0 < self.quad_tol <= 1e-6):
            raise ValueError(f"quad_tol must be in (0, 1e-6], got {self.quad_tol!r}")
        # the bump has a kink at 0: integrate the halves separately
        half = _adaptive_simpson(lambda u: float(_bump(u)), 0.0, 1.0, self.quad_tol / 2.0)
        object.__setattr__(self, "_bump_mass", 2.0 * half)

    @property
    def support_halfwidth(self) -> float:
        return self.gamma

    @property
    def plateau(self) -> tuple[float, float]:
        """Interval on which phi(t) = 1 - t + kappa exactly."""
        return (self.gamma, 1.0 - 2.0 * self.gamma)

    def _mollifier(self, s):
        return _bump(np.asarray(s, dtype=float) / self.gamma) / (self.gamma * self._bump_mass)

    def _mollifier_derivative(self, s):
        return _bump_derivative(np.asarray(s, dtype=float) / self.gamma) / (
            self.gamma**2 * self._bump_mass
        )

    def _convolution(self, t: float) -> float:
        """(indicator([0, a]) * psi_gamma)(t) = integral of psi_gamma over [t-a, t]."""
        a = 1.0 - self.gamma
        g = self.gamma
        lo = max(t - a, -g)
        hi = min(t, g)
        if hi <= lo:
            return 0.0
        if lo <= -g and hi >= g:
            return 1.0
        f = lambda s: float(self._mollifier(s))
        # split at the kink of the bump at s = 0
        if lo < 0.0 < hi:
            return _adaptive_simpson(f, lo, 0.0, self.quad_tol / 2.0) + _adaptive_simpson(
                f, 0.0, hi, self.quad_tol / 2.0
            )
        return _adaptive_simpson(f, lo, hi, self.quad_tol)

    def eval(self, t):
        """Return (phi, phi', phi'') at ``t`` (vectorised over [0, 1])."""
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        _check_domain(t)
        a = 1.0 - self.gamma
        conv = np.array([self._convolution(float(x)) for x in t])
        c1 = self._mollifier(t) - self._mollifier(t - a)
        c2 = self._mollifier_derivative(t) - self._mollifier_derivative(t - a)
        om = 1.0 - t
        phi = om * conv + self.kappa
        d1 = -conv + om * c1
        d2 = -2.0 * c1 + om * c2
        if scalar:
            return float(phi[0]), float(d1[0]), float(d2[0])
        return phi, d1, d2


def phi_eval(family, t):
    """Value and first two derivatives of a shaping function at ``t``."""
    return family.eval(t)


def gain_kernel(family, t):
    """Gain kernel G(t) = -t * (phi' + t * phi'') / phi for any family."""
    t_arr = np.asarray(t, dtype=float)
    phi, d1, d2 = family.eval(t_arr)
    out = -t_arr * (d1 + t_arr * d2) / phi
    return float(out) if t_arr.ndim == 0 else out


@dataclass(frozen=True)
class PropertyPReport:
    """Outcome of the admissibility check, with witnesses on failure."""

    passed: bool
    min_phi: float
    argmin_t: float
    dphi_at_one: float

    @property
    def positive(self) -> bool:
        return self.min_phi > 0.0

    @property
    def flat_at_one(self) -> bool:
        return abs(self.dphi_at_one) <= _DPHI_AT_ONE_TOL


def validate_property_p(family, grid_size: int = 2001) -> PropertyPReport:
    """Check inf phi > 0 on a dense grid and |phi'(1)| <= 1e-8.

    Never raises; inspect the report for witnesses.
    """
    t = np.linspace(0.0, 1.0, grid_size)
    phi, _, _ = family.eval(t)
    i = int(np.argmin(phi))
    _, d1_at_one, _ = family.eval(1.0)
    report = PropertyPReport(
        passed=bool(phi[i] > 0.0 and abs(d1_at_one) <= _DPHI_AT_ONE_TOL),
        min_phi=float(phi[i]),
        argmin_t=float(t[i]),
        dphi_at_one=float(d1_at_one),
    )
    return report


def find_sign_change(family: ExponentialPhi, grid_size: int = 4097, tol: float = 1e-10) -> float:
    """Unique root t0 of the exponential-family gain kernel on (0, 1).

    The kernel has the sign of gamma on (0, t0) and of -gamma on (t0, 1).
    Raises if the grid scan sees no sign change or more than one, which would
    contradict that structure; this is surfaced, not masked.
    """
    if not isinstance(family, ExponentialPhi):
        raise TypeError("find_sign_change applies to the exponential family")
    if family.gamma == 0.0:
        raise ValueError("gamma must be nonzero")
    t = np.linspace(1e-9, 1.0 - 1e-12, grid_size)
    g = family.gain_kernel_closed(t)
    sign = np.sign(g)
    nonzero = sign != 0
    ts, ss = t[nonzero], sign[nonzero]
    flips = np.nonzero(ss[1:] != ss[:-1])[0]
    if flips.size != 1:
        raise ArithmeticError(
            f"expected exactly one sign change of the gain kernel on (0, 1), found {flips.size}"
        )
    lo, hi = float(ts[flips[0]]), float(ts[flips[0] + 1])
    f_lo = family.gain_kernel_closed(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = family.gain_kernel_closed(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo = mid
            f_lo = f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
