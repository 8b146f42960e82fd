"""Scaled special functions: erfcx(x) = exp(x^2) erfc(x), exp(x) E1(x) and K0(x).

The scaled forms stay finite where exp(x^2) or exp(x) alone would overflow.
All three accept scalars or arrays and return the same shape.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EULER_GAMMA = 0.57721566490153286061


@dataclass(frozen=True)
class Accuracy:
    """Relative error bound promised on [lo, hi]."""

    bound: float = 1e-10
    lo: float = 0.0
    hi: float = math.inf

    def __post_init__(self):
        if not self.bound > 0:
            raise ValueError("accuracy bound must be positive")
        if not self.lo < self.hi:
            raise ValueError("empty argument range")


ERFCX_ACCURACY = Accuracy(1e-10, 0.0, 30.0)
EXP_E1_ACCURACY = Accuracy(1e-10, 1e-8, 700.0)
BESSEL_K0_ACCURACY = Accuracy(1e-8, 1e-4, 50.0)

# below these the power series are used, above them the continued fractions
_ERFCX_SWITCH = 2.0
_E1_SWITCH = 1.0


def _as_array(x, name: str, allow_zero: bool):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: argument must be finite")
    bad = arr < 0 if allow_zero else arr <= 0
    if np.any(bad):
        raise ValueError(f"{name}: argument must be {'>= 0' if allow_zero else '> 0'}")
    return arr


def _finish(out: np.ndarray, x):
    return float(out) if np.ndim(x) == 0 else out


def _erfcx_series(x: np.ndarray) -> np.ndarray:
    # exp(x^2) erf(x) = 2/sqrt(pi) sum 2^n x^(2n+1) / (2n+1)!!, all terms positive
    term = x.copy()
    total = x.copy()
    x2 = 2.0 * x * x
    for n in range(1, 80):
        term = term * x2 / (2 * n + 1)
        total += term
    return np.exp(x * x) - 2.0 / math.sqrt(math.pi) * total


def _erfcx_fraction(x: np.ndarray) -> np.ndarray:
    # sqrt(pi) erfcx(x) = 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    tail = np.zeros_like(x)
    for k in range(120, 0, -1):
        tail = 0.5 * k / (x + tail)
    return 1.0 / (math.sqrt(math.pi) * (x + tail))


def erfcx(x):
    """Scaled complementary error function exp(x^2) erfc(x) for x >= 0."""
    arr = _as_array(x, "erfcx", allow_zero=True)
    flat = np.atleast_1d(arr)
    out = np.empty_like(flat)
    small = flat < _ERFCX_SWITCH
    out[small] = _erfcx_series(flat[small])
    out[~small] = _erfcx_fraction(flat[~small])
    return _finish(out.reshape(arr.shape), x)


def _e1_series(x: np.ndarray) -> np.ndarray:
    # E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
    term = np.ones_like(x)
    total = np.zeros_like(x)
    for k in range(1, 40):
        term = -term * x / k
        total += term / k
    return np.exp(x) * (-EULER_GAMMA - np.log(x) - total)


def _e1_fraction(x: np.ndarray) -> np.ndarray:
    # exp(x) E1(x) = 1/(x + 1 - 1/(x + 3 - 4/(x + 5 - 9/(x + 7 - ...))))
    tail = np.zeros_like(x)
    for k in range(200, 0, -1):
        tail = k * k / (x + 2 * k + 1 - tail)
    return 1.0 / (x + 1.0 - tail)


def exp_e1(x):
    """exp(x) E1(x) for x > 0, where E1(x) = -Ei(-x)."""
    arr = _as_array(x, "exp_e1", allow_zero=False)
    flat = np.atleast_1d(arr)
    out = np.empty_like(flat)
    small = flat < _E1_SWITCH
    out[small] = _e1_series(flat[small])
    out[~small] = _e1_fraction(flat[~small])
    return _finish(out.reshape(arr.shape), x)


_K0_STEP = 0.05


def bessel_k0(x):
    """Modified Bessel function K0(x) for x > 0.

    Trapezoid rule on K0(x) = int_0^inf exp(-x cosh t) dt.  The integrand is
    entire and decays doubly exponentially, so the equal-step sum converges
    geometrically in 1/step; it is cut where the integrand drops below 1e-18
    of its peak.
    """
    arr = _as_array(x, "bessel_k0", allow_zero=False)
    flat = np.atleast_1d(arr)
    out = np.empty_like(flat)
    for i, xi in enumerate(flat):
        t_max = math.acosh(1.0 + 42.0 / xi)
        t = np.arange(0.0, t_max + _K0_STEP, _K0_STEP)
        vals = np.exp(-xi * (np.cosh(t) - 1.0))
        out[i] = math.exp(-xi) * _K0_STEP * (vals.sum() - 0.5 * vals[0])
    return _finish(out.reshape(arr.shape), x)
