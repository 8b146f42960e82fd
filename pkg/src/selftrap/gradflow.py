"""Ground states of the coupled condensate/impurity equations by normalized gradient flow.

Each step is a backward-Euler step of the imaginary-time flow for one field
with the other field (and the field's own nonlinearity) frozen at the current
iterate, followed by projection back onto the norm constraint.  The diffusion
term is implicit, so the step size is not limited by the grid spacing.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal, solveh_banded

from .core import (
    EnergyBreakdown,
    FieldPair,
    ModelParams,
    RadialGrid,
    energy_breakdown,
    norm_target,
)


class Outcome(str, enum.Enum):
    CONVERGED = "Converged"
    COLLAPSE_DETECTED = "CollapseDetected"
    NO_GROUND_STATE = "NoGroundState"
    MAX_STEPS_EXCEEDED = "MaxStepsExceeded"


@dataclass(frozen=True)
class FlowConfig:
    time_step: float = 0.25
    impurity_time_step: float = 1e3
    energy_tol: float = 1e-10
    field_tol: float = 1e-8
    residual_tol: float = 1e-6
    max_steps: int = 2_000_000
    collapse_width_floor: float = 2.0
    density_cap: float = 1e4
    patience: int = 3
    condensate_wall: str = "neumann"

    def __post_init__(self):
        for name in ("time_step", "impurity_time_step", "energy_tol", "field_tol",
                     "residual_tol", "density_cap"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_steps < 1 or self.patience < 1:
            raise ValueError("max_steps and patience must be at least 1")
        if self.condensate_wall not in ("neumann", "dirichlet"):
            raise ValueError("condensate_wall must be 'neumann' or 'dirichlet'")
        if self.collapse_width_floor < 1:
            raise ValueError("collapse_width_floor must be >= 1")


@dataclass
class SolveReport:
    outcome: Outcome
    fields: FieldPair
    energy: EnergyBreakdown
    steps: int
    flow_time: float
    monotonicity_violations: int
    chemical_potential: float
    residual_psi: float
    residual_chi: float
    trace: list = field(default_factory=list, repr=False)

    @property
    def converged(self) -> bool:
        return self.outcome is Outcome.CONVERGED


def initialize(
    m: ModelParams, grid: RadialGrid, seed_width: float, condensate_wall: str = "neumann"
) -> FieldPair:
    """Gaussian impurity of the given width on a flat condensate.

    With a Dirichlet condensate wall the flat profile is brought to zero over
    one healing length, psi = tanh(R - r).
    """
    if not grid.spacing < seed_width < grid.radius / 2:
        raise ValueError(f"seed_width must lie in ({grid.spacing}, {grid.radius / 2})")
    r = grid.r
    chi = np.exp(-0.5 * (r / seed_width) ** 2)
    pin = condensate_wall == "dirichlet"
    psi = np.tanh(grid.radius - r) if pin else np.ones(grid.points)
    return FieldPair.normalized(grid, psi, chi, pin_psi=pin)


def box_mode(grid: RadialGrid) -> tuple[float, np.ndarray]:
    """Lowest eigenpair of -lap with the wall node held at zero.

    Returns (k2, mode) with mode normalized in the grid inner product; the
    free impurity energy in the box is alpha * k2 / 2.
    """
    diag, off = grid.stiffness_bands(pinned=True)
    w = grid.weights[: diag.size]
    sw = np.sqrt(w)
    vals, vecs = eigh_tridiagonal(diag / w, off / (sw[:-1] * sw[1:]),
                                  select="i", select_range=(0, 0))
    mode = np.zeros(grid.points)
    mode[: diag.size] = np.abs(vecs[:, 0]) / sw
    return float(vals[0]), mode / math.sqrt(grid.integrate(mode * mode))


def _implicit_step(
    grid: RadialGrid, values, kinetic: float, potential, tau: float, pinned: bool = True
) -> np.ndarray:
    """Solve (1 + tau (-kinetic lap + V - min V)) u = values.

    ``pinned`` holds u(R) = 0, otherwise the wall is reflecting.  Shifting V
    by its minimum keeps the operator positive definite; after projection the
    shift only rescales the effective step.
    """
    diag_k, off_k = grid.stiffness_bands(pinned)
    size = diag_k.size
    w = grid.weights[:size]
    v = potential[:size]
    v = v - min(float(v.min()), 0.0)
    ab = np.zeros((2, size))
    ab[0] = w + tau * (kinetic * diag_k + w * v)
    ab[1, :-1] = tau * kinetic * off_k
    out = np.zeros(grid.points)
    out[:size] = solveh_banded(ab, w * values[:size], lower=True, check_finite=False)
    return out


def _project(grid: RadialGrid, values, target: float) -> np.ndarray:
    return values * math.sqrt(target / grid.integrate(values * values))


def flow_step(m: ModelParams, grid: RadialGrid, f: FieldPair, c: FlowConfig) -> FieldPair:
    """One alternating step: condensate first, then the impurity against the new condensate."""
    g = m.coupling_density
    v_psi = f.psi**2 + g * f.chi**2
    pin = c.condensate_wall == "dirichlet"
    psi = _implicit_step(grid, f.psi, 0.5, v_psi, c.time_step, pinned=pin)
    psi = _project(grid, psi, norm_target(grid))
    v_chi = m.beta * psi**2
    chi = _implicit_step(grid, f.chi, 0.5 * m.alpha, v_chi, c.impurity_time_step)
    chi = _project(grid, chi, 1.0)
    return FieldPair(psi, chi)


def residuals(
    m: ModelParams, grid: RadialGrid, f: FieldPair, pin_psi: bool = False
) -> tuple[float, float, float, float]:
    """Max-norm residuals of both stationary equations with measured multipliers.

    Returns (residual_psi, residual_chi, mu, epsilon); mu and epsilon are the
    Rayleigh quotients of the two linearized Hamiltonians.
    """
    psi, chi = f.psi, f.chi
    h_psi = -0.5 * grid.laplacian(psi) + (psi**2 + m.coupling_density * chi**2) * psi
    h_chi = -0.5 * m.alpha * grid.laplacian(chi) + m.beta * psi**2 * chi
    mu = grid.integrate(psi * h_psi) / grid.integrate(psi * psi)
    eps = grid.integrate(chi * h_chi) / grid.integrate(chi * chi)
    r_psi = np.abs(h_psi - mu * psi)[: grid.points - pin_psi].max()
    r_chi = np.abs(h_chi - eps * chi)[:-1].max()
    return float(r_psi), float(r_chi), float(mu), float(eps)


def rms_width(grid: RadialGrid, chi) -> float:
    """Gaussian-equivalent width sqrt(2 <r^2> / d) of a normalized impurity."""
    second = grid.integrate(grid.r**2 * chi**2) / grid.integrate(chi**2)
    return math.sqrt(2.0 * second / grid.dimension)


def ground_state(
    m: ModelParams,
    grid: RadialGrid,
    c: FlowConfig | None = None,
    initial: FieldPair | None = None,
    seed_width: float = 1.0,
    trace_every: int = 0,
) -> SolveReport:
    c = c or FlowConfig()
    pin = c.condensate_wall == "dirichlet"
    f = initial if initial is not None else initialize(m, grid, seed_width, c.condensate_wall)
    f = FieldPair.normalized(grid, f.psi, f.chi, pin_psi=pin)
    e_prev = energy_breakdown(m, grid, f).e_tot
    violations = 0
    streak = 0
    trace = []
    floor = c.collapse_width_floor * grid.spacing
    outcome = Outcome.MAX_STEPS_EXCEEDED
    step = 0
    while step < c.max_steps:
        new = flow_step(m, grid, f, c)
        step += 1
        energy = energy_breakdown(m, grid, new)
        e = energy.e_tot
        descending = e < e_prev
        if e - e_prev > 1e-9 * abs(e_prev):
            violations += 1
        de = abs(e - e_prev) / max(abs(e_prev), 1e-300)
        dfield = max(np.abs(new.psi - f.psi).max(), np.abs(new.chi - f.chi).max())
        f, e_prev = new, e
        if trace_every and step % trace_every == 0:
            r_psi, r_chi, _, _ = residuals(m, grid, f, pin)
            trace.append((step, e, r_psi, r_chi))
        if descending and (f.psi[0] ** 2 > c.density_cap or rms_width(grid, f.chi) < floor):
            outcome = Outcome.COLLAPSE_DETECTED
            if m.dimension == 3 and m.beta < 0:
                outcome = Outcome.NO_GROUND_STATE
            break
        if de < c.energy_tol and dfield < c.field_tol:
            streak += 1
        else:
            streak = 0
        if streak >= c.patience:
            r_psi, r_chi, _, _ = residuals(m, grid, f, pin)
            if max(r_psi, r_chi) < c.residual_tol:
                outcome = Outcome.CONVERGED
                break
    r_psi, r_chi, mu, _ = residuals(m, grid, f, pin)
    return SolveReport(
        outcome=outcome,
        fields=f,
        energy=energy_breakdown(m, grid, f),
        steps=step,
        flow_time=step * c.time_step,
        monotonicity_violations=violations,
        chemical_potential=mu,
        residual_psi=r_psi,
        residual_chi=r_chi,
        trace=trace,
    )


def adapt_condensate(
    m: ModelParams,
    grid: RadialGrid,
    chi,
    c: FlowConfig | None = None,
    tol: float = 1e-10,
    max_steps: int = 20_000,
) -> FieldPair:
    """Relax the condensate alone in the potential of a frozen impurity."""
    c = c or FlowConfig()
    pin = c.condensate_wall == "dirichlet"
    f = FieldPair.normalized(grid, np.ones(grid.points), chi, pin_psi=pin)
    psi, chi = f.psi, f.chi
    g_chi2 = m.coupling_density * chi**2
    for _ in range(max_steps):
        new = _implicit_step(grid, psi, 0.5, psi**2 + g_chi2, 0.05, pinned=pin)
        new = _project(grid, new, norm_target(grid))
        done = np.abs(new - psi).max() < tol * max(1.0, np.abs(new).max())
        psi = new
        if done:
            break
    return FieldPair(psi, chi)


def collapse_probe(
    m: ModelParams, grid: RadialGrid, seed_width: float, c: FlowConfig | None = None
) -> SolveReport:
    """Flow from a narrow impurity dressed by its adapted condensate.

    A flat condensate cannot follow an impurity narrower than a healing
    length before the impurity disperses, so the plain seed only ever finds
    the delocalized branch.  Starting from the dressed state tests whether
    the energy keeps falling as the impurity shrinks.  ``c.time_step`` must
    resolve the seed, roughly tau < seed_width**2.
    """
    c = c or FlowConfig()
    seed = initialize(m, grid, seed_width, c.condensate_wall)
    return ground_state(m, grid, c, initial=adapt_condensate(m, grid, seed.chi, c))


def delocalized_start(m: ModelParams, grid: RadialGrid, condensate_wall: str = "neumann") -> FieldPair:
    """Impurity in the free box mode on the undisturbed condensate."""
    pin = condensate_wall == "dirichlet"
    psi = np.tanh(grid.radius - grid.r) if pin else np.ones(grid.points)
    return FieldPair.normalized(grid, psi, box_mode(grid)[1], pin_psi=pin)


def lowest_state(
    m: ModelParams,
    grid: RadialGrid,
    c: FlowConfig | None = None,
    seed_width: float = 1.0,
    compare_delocalized: bool | None = None,
) -> SolveReport:
    """Flow from the localized seed and, if asked, also from the box mode; keep the lower energy.

    In 3d the localized and delocalized branches coexist over a range of
    couplings, so a single flow lands on whichever basin holds the seed.
    Comparing both converged states picks the global minimum.  The default
    compares only in 3d.
    """
    c = c or FlowConfig()
    if compare_delocalized is None:
        compare_delocalized = m.dimension == 3
    local = ground_state(m, grid, c, seed_width=seed_width)
    if not (compare_delocalized and local.converged):
        return local
    spread = ground_state(m, grid, c, initial=delocalized_start(m, grid, c.condensate_wall))
    if spread.converged and spread.energy.e_tot < local.energy.e_tot:
        return spread
    return local
