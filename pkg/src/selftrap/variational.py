"""Closed-form and variational analysis of impurity localization.

Covers the Thomas-Fermi sech state, the weak-coupling variational energy
f(sigma) of a Gaussian impurity, the Helmholtz Green's functions of the
linearized condensate response, and the power-counting collapse argument.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .core import SOLID_ANGLE, EnergyBreakdown, ModelParams
from .specfun import bessel_k0, erfcx, exp_e1

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(fn, lo: float, hi: float, tol: float = 1e-12, max_iter: int = 200) -> float:
    """Minimizer of a unimodal fn on [lo, hi]."""
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(max_iter):
        if abs(b - a) <= tol * (abs(a) + abs(b) + tol):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def _bisect_sign(fn, lo: float, hi: float, iters: int = 200) -> float:
    """Root of fn on [lo, hi] given a sign change."""
    f_lo = fn(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        f_mid = fn(mid)
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# Thomas-Fermi sech state ---------------------------------------------------


@dataclass(frozen=True)
class SechSolution:
    """Bright soliton of the self-focusing equation for the impurity (1d)."""

    zeta: float
    lam: float
    epsilon_prime: float
    coupling_density: float

    def profile(self, x):
        e = np.exp(-np.abs(np.asarray(x, dtype=float)) / self.lam)
        return (2.0 * self.lam) ** -0.5 * 2.0 * e / (1.0 + e * e)

    def condensate_density(self, chi):
        """Local density 1 - beta gamma^d chi^2 slaved to the impurity."""
        return 1.0 - self.coupling_density * np.asarray(chi) ** 2


def tf_sech(m: ModelParams) -> SechSolution:
    if m.beta == 0:
        raise ValueError("beta = 0 has no self-trapped sech state")
    z = m.zeta
    return SechSolution(zeta=z, lam=2.0 / z, epsilon_prime=-(z**2) / 8.0,
                        coupling_density=m.coupling_density)


# weak-coupling variational energy -------------------------------------------


def _check_sigma(sigma):
    s = np.asarray(sigma, dtype=float)
    if not np.all(s > 0):
        raise ValueError("sigma must be positive")
    return s


def _erfcx_prime(x):
    return 2.0 * x * erfcx(x) - 2.0 / math.sqrt(math.pi)


def h_function(sigma, d: int):
    """Deformation energy per beta^2 gamma^d of a Gaussian impurity of width sigma."""
    s = _check_sigma(sigma)
    if d == 1:
        out = 0.5 * erfcx(math.sqrt(2.0) * s)
    elif d == 2:
        out = exp_e1(2.0 * s * s) / (2.0 * math.pi)
    elif d == 3:
        out = (1.0 / (math.sqrt(2.0 * math.pi) * s) - erfcx(math.sqrt(2.0) * s)) / math.pi
    else:
        raise ValueError(f"dimension must be 1, 2 or 3, got {d!r}")
    return float(out) if np.ndim(sigma) == 0 else out


def h_derivative(sigma, d: int):
    s = _check_sigma(sigma)
    r2 = math.sqrt(2.0)
    if d == 1:
        out = 0.5 * r2 * _erfcx_prime(r2 * s)
    elif d == 2:
        x = 2.0 * s * s
        out = 4.0 * s * (exp_e1(x) - 1.0 / x) / (2.0 * math.pi)
    elif d == 3:
        out = (-1.0 / (math.sqrt(2.0 * math.pi) * s * s) - r2 * _erfcx_prime(r2 * s)) / math.pi
    else:
        raise ValueError(f"dimension must be 1, 2 or 3, got {d!r}")
    return float(out) if np.ndim(sigma) == 0 else out


def f_sigma(sigma, m: ModelParams):
    """Kinetic plus deformation energy of a Gaussian impurity of width sigma."""
    s = _check_sigma(sigma)
    return m.alpha * m.dimension / (4.0 * s * s) - m.beta**2 * m.gamma**m.dimension * h_function(sigma, m.dimension)


def f_sigma_derivative(sigma, m: ModelParams):
    s = _check_sigma(sigma)
    return -m.alpha * m.dimension / (2.0 * s**3) - m.beta**2 * m.gamma**m.dimension * h_derivative(sigma, m.dimension)


@dataclass(frozen=True)
class VariationalResult:
    zeta: float
    sigma_min: float | None
    f_value: float | None
    stable: bool = False

    @property
    def localized(self) -> bool:
        return self.sigma_min is not None


SCAN_DECADES = (-3.0, 3.0)
SCAN_PER_DECADE = 200


def stationary_points(m: ModelParams) -> list[tuple[float, bool]]:
    """Interior stationary points of f as (sigma, is_minimum), in increasing sigma.

    Sign changes of f' on the log-spaced scan are bracketed, a minimum is
    located by golden section on log sigma and polished by bisection on f'.
    """
    lo, hi = SCAN_DECADES
    s = np.logspace(lo, hi, int(round((hi - lo) * SCAN_PER_DECADE)) + 1)
    fp = f_sigma_derivative(s, m)
    out = []
    for i in np.nonzero(np.sign(fp[:-1]) != np.sign(fp[1:]))[0]:
        a, b = s[i], s[i + 1]
        is_min = fp[i] < 0 < fp[i + 1]
        if is_min:
            lo_g, hi_g = s[max(i - 1, 0)], s[min(i + 2, s.size - 1)]
            guess = math.exp(golden_section(lambda u: f_sigma(math.exp(u), m),
                                            math.log(lo_g), math.log(hi_g)))
            if f_sigma_derivative(guess, m) < 0:
                a = max(a, guess)
            else:
                b = min(b, guess)
        out.append((_bisect_sign(lambda x: f_sigma_derivative(x, m), a, b), is_min))
    return out


def find_selftrap(m: ModelParams) -> VariationalResult:
    """Most localized interior minimum of f(sigma), or absence."""
    for sigma, is_min in stationary_points(m):
        if is_min:
            return VariationalResult(m.zeta, sigma, float(f_sigma(sigma, m)), stable=True)
    return VariationalResult(m.zeta, None, None, stable=False)


def _zeta_model(zeta: float, d: int) -> ModelParams:
    return ModelParams(alpha=1.0, beta=math.sqrt(zeta), gamma=1.0, dimension=d)


def critical_zeta(d: int, rel_tol: float = 1e-3) -> float:
    """Smallest zeta with a self-trapped minimum of f."""
    if d == 1:
        return 0.0
    if d == 2:
        return 2.0 * math.pi
    if d != 3:
        raise ValueError(f"dimension must be 1, 2 or 3, got {d!r}")
    lo, hi = 20.0, 40.0
    while hi - lo > rel_tol * lo:
        mid = 0.5 * (lo + hi)
        if find_selftrap(_zeta_model(mid, 3)).localized:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# Green's functions -----------------------------------------------------------


def helmholtz_green(r, d: int):
    """Solution of (-lap/2 + 2) G = delta in d dimensions."""
    x = np.asarray(r, dtype=float)
    if not np.all(x > 0):
        raise ValueError("r must be positive")
    if d == 1:
        out = 0.5 * np.exp(-2.0 * x)
    elif d == 2:
        out = bessel_k0(2.0 * x) / math.pi
    elif d == 3:
        out = np.exp(-2.0 * x) / (2.0 * math.pi * x)
    else:
        raise ValueError(f"dimension must be 1, 2 or 3, got {d!r}")
    return float(out) if np.ndim(r) == 0 else out


# collapse scaling argument ----------------------------------------------------


@dataclass(frozen=True)
class ScalingProbe:
    """Gaussian impurity of width sigma with a condensate bump a sigma^(-delta/2) exp(-r^2/(b sigma^2))."""

    sigma: float
    delta: float
    dimension: int
    a: float = 0.5
    b: float = 2.0

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0 and self.sigma > 0):
            raise ValueError("a, b and sigma must be positive")
        if not 0 < self.delta <= self.dimension:
            raise ValueError("delta must lie in (0, d]")


def _radial_quad(fn, d: int) -> float:
    val, _ = integrate.quad(lambda u: SOLID_ANGLE[d] * u ** (d - 1) * fn(u), 0.0, np.inf,
                            epsabs=0.0, epsrel=1e-12, limit=200)
    return val


def scaling_energy(m: ModelParams, p: ScalingProbe) -> EnergyBreakdown:
    """Energies of the probe state by radial quadrature.

    The bump lowers E_int, so it is a dip for beta > 0 and a peak for beta < 0.
    E_bec is measured from the uniform condensate, which leaves the finite
    density 1/2 |grad psi|^2 + 1/2 (psi^2 - 1)^2.
    """
    d = p.dimension
    if d != m.dimension:
        raise ValueError("probe and model dimensions differ")
    s, b = p.sigma, p.b
    amp = -math.copysign(p.a, m.beta) * s ** (-p.delta / 2.0)
    # integrate in u = r / sigma
    jac = s**d

    def chi2(u):
        return (math.pi * s * s) ** (-d / 2.0) * math.exp(-u * u)

    def bump(u):
        return amp * math.exp(-u * u / b)

    def bec_density(u):
        dpsi = bump(u)
        grad = -2.0 * u / (b * s) * dpsi
        return 0.5 * grad * grad + 0.5 * ((1.0 + dpsi) ** 2 - 1.0) ** 2

    e_int = m.beta * jac * _radial_quad(lambda u: chi2(u) * (1.0 + bump(u)) ** 2, d)
    e_bec = jac * _radial_quad(bec_density, d) / m.gamma**d
    e_kin = m.alpha * d / (4.0 * s * s)
    epsilon = e_kin + e_int
    return EnergyBreakdown(e_bec, e_int, e_kin, epsilon)


class CollapseClass(str, enum.Enum):
    UNBOUNDED = "unbounded"
    MARGINAL = "marginal"
    BOUNDED = "bounded"


def collapse_exponents(d: int, delta: float) -> dict[str, list[float]]:
    """Leading sigma -> 0 power laws of each energy term."""
    return {
        "int": [-delta],
        "kin": [-2.0],
        "bec": [d - delta - 2.0] + [d - j * delta / 2.0 for j in range(1, 5)],
    }


def collapse_diagnosis(m: ModelParams, delta: float) -> CollapseClass:
    d = m.dimension
    if not 0 < delta <= d:
        raise ValueError("delta must lie in (0, d]")
    exps = collapse_exponents(d, delta)
    others = min(exps["kin"] + exps["bec"])
    if m.beta >= 0 or -delta > others:
        return CollapseClass.BOUNDED
    if -delta < others:
        return CollapseClass.UNBOUNDED
    return CollapseClass.MARGINAL
