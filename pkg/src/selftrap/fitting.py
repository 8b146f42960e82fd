"""Width fits of an impurity profile to Gaussian and sech shapes.

Both trial families are unit-normalized with the grid's own quadrature, so
only the width is free and an exact member of either family fits with zero
residual.  The shape discriminator R_fit runs from -1 (Gaussian-like) to +1
(sech-like).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .core import SOLID_ANGLE, RadialGrid
from .variational import golden_section

NORM_RTOL = 1e-6
_SCAN_POINTS = 96


def gaussian_shape(r, width):
    return np.exp(-0.5 * (np.asarray(r) / width) ** 2)


def sech_shape(r, width):
    u = np.asarray(r) / width
    # sech(u) = 2 e^-u / (1 + e^-2u) never overflows
    e = np.exp(-u)
    return 2.0 * e / (1.0 + e * e)


def sech_normalization(lam: float, d: int) -> float:
    """Continuum N with N^2 int sech^2(r/lam) dV = 1."""
    if not lam > 0:
        raise ValueError("lam must be positive")
    if d == 1:
        return (2.0 * lam) ** -0.5
    moment, _ = integrate.quad(lambda u: u ** (d - 1) * sech_shape(u, 1.0) ** 2, 0.0, np.inf,
                               epsabs=0.0, epsrel=1e-13, limit=200)
    return (SOLID_ANGLE[d] * lam**d * moment) ** -0.5


def _check_normalized(grid: RadialGrid, chi) -> np.ndarray:
    chi = np.asarray(chi, dtype=float)
    if chi.shape != (grid.points,):
        raise ValueError("profile does not match the grid")
    norm = grid.integrate(chi * chi)
    if abs(norm - 1.0) > NORM_RTOL:
        raise ValueError(f"profile is not normalized (norm {norm!r})")
    return chi


def _fit_width(grid: RadialGrid, chi, shape) -> tuple[float, float]:
    chi = _check_normalized(grid, chi)
    w = grid.weights
    r = grid.r

    def residual(log_width):
        trial = shape(r, math.exp(log_width))
        trial = trial / math.sqrt(np.dot(w, trial * trial))
        diff = chi - trial
        return float(np.dot(w, diff * diff))

    lo, hi = math.log(grid.spacing), math.log(2.0 * grid.radius)
    logs = np.linspace(lo, hi, _SCAN_POINTS)
    vals = [residual(x) for x in logs]
    k = int(np.argmin(vals))
    best = golden_section(residual, logs[max(k - 1, 0)], logs[min(k + 1, logs.size - 1)])
    return math.exp(best), max(residual(best), 0.0)


def fit_gaussian(grid: RadialGrid, chi) -> tuple[float, float]:
    """Width sigma of the best Gaussian exp(-r^2 / 2 sigma^2) and its residual."""
    return _fit_width(grid, chi, gaussian_shape)


def fit_sech(grid: RadialGrid, chi) -> tuple[float, float]:
    """Width lam of the best sech(r / lam) and its residual."""
    return _fit_width(grid, chi, sech_shape)


@dataclass(frozen=True)
class FitResult:
    sigma: float
    lam: float
    s_sigma: float
    s_lambda: float
    r_fit: float
    ell_loc: float
    degenerate: bool = False


def discriminator(s_sigma: float, s_lambda: float) -> tuple[float, bool]:
    """(S_sigma - S_lambda) / (S_sigma + S_lambda), or (0, True) if both vanish."""
    if s_sigma < 0 or s_lambda < 0:
        raise ValueError("residuals must be nonnegative")
    total = s_sigma + s_lambda
    if total == 0.0:
        return 0.0, True
    return (s_sigma - s_lambda) / total, False


def r_fit(grid: RadialGrid, chi) -> FitResult:
    sigma, s_sigma = fit_gaussian(grid, chi)
    lam, s_lambda = fit_sech(grid, chi)
    value, degenerate = discriminator(s_sigma, s_lambda)
    return FitResult(sigma, lam, s_sigma, s_lambda, value,
                     ell_loc=sigma if value < 0 else lam, degenerate=degenerate)
