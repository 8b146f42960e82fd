"""Domain types, radial grids and the energy functionals of the impurity/BEC model.

Lengths are measured in healing lengths and energies in units of g*n0.  All
fields are real and radially symmetric; a 1d "radial" field lives on the
half-line [0, R] and represents an even function on [-R, R].
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import constants

SOLID_ANGLE = {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}


def _check_dimension(d: int) -> int:
    if d not in SOLID_ANGLE:
        raise ValueError(f"dimension must be 1, 2 or 3, got {d!r}")
    return int(d)


def ball_volume(radius: float, d: int) -> float:
    """Volume of the d-ball (2R, pi R^2, 4/3 pi R^3)."""
    return SOLID_ANGLE[_check_dimension(d)] * radius**d / d


@dataclass(frozen=True)
class PhysicalParams:
    impurity_mass: float
    boson_mass: float
    impurity_coupling: float
    boson_coupling: float
    density: float
    dimension: int
    atom_number: float = 1.0
    hbar: float = constants.hbar

    def __post_init__(self):
        _check_dimension(self.dimension)
        if not self.boson_coupling > 0:
            raise ValueError("boson coupling g must be positive")
        if not (self.impurity_mass > 0 and self.boson_mass > 0):
            raise ValueError("masses must be positive")
        if not self.density > 0:
            raise ValueError("density must be positive")
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")

    @property
    def healing_length(self) -> float:
        return self.hbar / math.sqrt(self.boson_coupling * self.density * self.boson_mass)

    @property
    def mean_separation(self) -> float:
        return self.density ** (-1.0 / self.dimension)


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless parameters: mass ratio alpha, coupling beta, gamma = s/xi."""

    alpha: float
    beta: float
    gamma: float
    dimension: int

    def __post_init__(self):
        _check_dimension(self.dimension)
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not math.isfinite(self.beta):
            raise ValueError("beta must be finite")

    @property
    def zeta(self) -> float:
        """Self-trapping parameter beta^2 gamma^d / alpha."""
        return self.beta**2 * self.gamma**self.dimension / self.alpha

    @property
    def coupling_density(self) -> float:
        """beta * gamma^d, the impurity coupling seen by the condensate."""
        return self.beta * self.gamma**self.dimension


def to_dimensionless(p: PhysicalParams) -> ModelParams:
    return ModelParams(
        alpha=p.boson_mass / p.impurity_mass,
        beta=p.impurity_coupling / p.boson_coupling,
        gamma=p.mean_separation / p.healing_length,
        dimension=p.dimension,
    )


@dataclass(frozen=True)
class RadialGrid:
    """Uniform nodes r_i = i*h on [0, R] with cell-volume weights.

    Node i owns the shell between the midpoints r_{i-1/2} and r_{i+1/2}
    (clipped to [0, R]), so the weights sum to the ball volume exactly and
    the flux form of the Laplacian is symmetric in the weighted inner product.
    """

    dimension: int
    radius: float
    points: int

    def __post_init__(self):
        _check_dimension(self.dimension)
        if not self.radius > 0:
            raise ValueError("wall radius must be positive")
        if self.points < 16:
            raise ValueError("need at least 16 grid points")

    @property
    def spacing(self) -> float:
        return self.radius / (self.points - 1)

    @cached_property
    def r(self) -> np.ndarray:
        r = np.arange(self.points) * self.spacing
        r[-1] = self.radius
        r.setflags(write=False)
        return r

    @cached_property
    def midpoints(self) -> np.ndarray:
        """Cell faces r_{i+1/2} for i = 0..n-2."""
        return (np.arange(self.points - 1) + 0.5) * self.spacing

    @cached_property
    def weights(self) -> np.ndarray:
        d = self.dimension
        edges = np.concatenate(([0.0], self.midpoints, [self.radius]))
        w = SOLID_ANGLE[d] / d * np.diff(edges**d)
        w.setflags(write=False)
        return w

    @cached_property
    def face_areas(self) -> np.ndarray:
        """S_d r^{d-1} at the faces r_{i+1/2}."""
        a = SOLID_ANGLE[self.dimension] * self.midpoints ** (self.dimension - 1)
        a.setflags(write=False)
        return a

    @property
    def volume(self) -> float:
        return ball_volume(self.radius, self.dimension)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def gradient_energy(self, f) -> float:
        """Discrete integral of |df/dr|^2 with differences taken at the faces."""
        df = np.diff(f)
        return float(np.dot(self.face_areas, df * df)) / self.spacing

    def laplacian(self, f) -> np.ndarray:
        """Flux-form radial Laplacian f'' + (d-1)/r f'.

        No flux enters through r = 0 (symmetry) and none leaves through the
        last cell, so sum(w * g * lap f) = -sum(A (dg)(df))/h for any g, f.
        At r = 0 this reduces to d * f''(0).
        """
        flux = self.face_areas * np.diff(f) / self.spacing
        div = np.zeros_like(f, dtype=float)
        div[:-1] += flux
        div[1:] -= flux
        return div / self.weights

    def stiffness_bands(self, pinned: bool = True) -> tuple[np.ndarray, np.ndarray]:
        """Diagonal and off-diagonal of K, with f^T K f = sum(A (df)^2)/h.

        With ``pinned`` the wall node is held at zero (Dirichlet) and K acts on
        nodes 0..n-2; otherwise no flux leaves the last cell (Neumann) and K
        acts on all n nodes.
        """
        a = self.face_areas / self.spacing
        diag = np.zeros(self.points)
        diag[:-1] += a
        diag[1:] += a
        if pinned:
            return diag[:-1], -a[:-1]
        return diag, -a


def norm_target(grid: RadialGrid) -> float:
    """Condensate norm sum(w psi^2): unit mean density inside the wall."""
    return grid.volume


@dataclass(frozen=True)
class FieldPair:
    """Condensate psi and impurity chi sampled on the grid nodes."""

    psi: np.ndarray
    chi: np.ndarray

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=float)
        chi = np.asarray(self.chi, dtype=float)
        if psi.shape != chi.shape or psi.ndim != 1:
            raise ValueError("psi and chi must be 1d arrays of equal length")
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "chi", chi)

    @classmethod
    def normalized(
        cls, grid: RadialGrid, psi, chi, psi_norm: float | None = None, pin_psi: bool = False
    ) -> FieldPair:
        """Zero chi (and psi if ``pin_psi``) at the wall and project onto both norm constraints."""
        psi = np.array(psi, dtype=float)
        chi = np.array(chi, dtype=float)
        _check_size(grid, psi)
        _check_size(grid, chi)
        if pin_psi:
            psi[-1] = 0.0
        chi[-1] = 0.0
        target = norm_target(grid) if psi_norm is None else psi_norm
        psi *= math.sqrt(target / grid.integrate(psi * psi))
        chi /= math.sqrt(grid.integrate(chi * chi))
        return cls(psi, chi)

    def norms(self, grid: RadialGrid) -> tuple[float, float]:
        return grid.integrate(self.psi**2), grid.integrate(self.chi**2)

    def validate(
        self, grid: RadialGrid, psi_norm: float | None = None, rtol: float = 1e-10, pin_psi: bool = False
    ) -> None:
        _check_size(grid, self.psi)
        target = norm_target(grid) if psi_norm is None else psi_norm
        n_psi, n_chi = self.norms(grid)
        if abs(n_chi - 1.0) > rtol:
            raise ValueError(f"impurity norm {n_chi!r} differs from 1")
        if abs(n_psi / target - 1.0) > rtol:
            raise ValueError(f"condensate norm {n_psi!r} differs from target {target!r}")
        if self.chi[-1] != 0.0 or (pin_psi and self.psi[-1] != 0.0):
            raise ValueError("fields must vanish at the wall")


def _check_size(grid: RadialGrid, values: np.ndarray) -> None:
    if values.shape != (grid.points,):
        raise ValueError(f"field has shape {values.shape}, grid has {grid.points} points")


@dataclass(frozen=True)
class EnergyBreakdown:
    e_bec: float
    e_int: float
    e_kin: float
    epsilon: float

    @property
    def e_tot(self) -> float:
        return self.e_bec + self.e_int + self.e_kin


def energy_breakdown(m: ModelParams, grid: RadialGrid, f: FieldPair) -> EnergyBreakdown:
    _check_size(grid, f.psi)
    _check_size(grid, f.chi)
    if m.dimension != grid.dimension:
        raise ValueError("model and grid dimensions differ")
    psi2 = f.psi * f.psi
    chi2 = f.chi * f.chi
    bulk = grid.integrate(psi2 * (0.5 * psi2 - 1.0))
    e_bec = (0.5 * grid.gradient_energy(f.psi) + bulk) / m.gamma**m.dimension
    e_int = m.beta * grid.integrate(chi2 * psi2)
    e_kin = 0.5 * m.alpha * grid.gradient_energy(f.chi)
    h_chi = -0.5 * m.alpha * grid.laplacian(f.chi) + m.beta * psi2 * f.chi
    epsilon = grid.integrate(f.chi * h_chi) / grid.integrate(chi2)
    return EnergyBreakdown(e_bec, e_int, e_kin, epsilon)


def density_at_origin(f: FieldPair) -> float:
    """Condensate density n(x0) = psi(0)^2 at the impurity position."""
    return float(f.psi[0] ** 2)
