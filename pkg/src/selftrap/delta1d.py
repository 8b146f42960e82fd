"""Exact condensate around a point-like impurity in 1d.

For |chi|^2 = delta(x) the condensate equation away from the origin is the
homogeneous one, solved by tanh (repulsive) or coth (attractive) kinks
healing to 1, glued at the origin by the derivative jump
psi'(0+) - psi'(0-) = 2 beta gamma psi(0).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def psi_at_impurity(beta: float, gamma: float) -> float:
    """Condensate amplitude at the impurity, the positive root of 1 - p^2 = beta gamma p."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    half = 0.5 * beta * gamma
    root = math.hypot(1.0, half)
    # written to avoid cancellation for large positive beta gamma
    return 1.0 / (half + root) if half > 0 else root - half


@dataclass(frozen=True)
class DeltaSolution:
    beta_gamma: float
    psi0: float
    c: float

    @property
    def attractive(self) -> bool:
        return self.beta_gamma < 0

    def jump_residual(self) -> float:
        return 1.0 - self.psi0**2 - self.beta_gamma * self.psi0

    def __call__(self, x):
        u = np.abs(np.asarray(x, dtype=float)) + self.c
        return 1.0 / np.tanh(u) if self.attractive else np.tanh(u)


def delta_solution(beta: float, gamma: float) -> DeltaSolution:
    if beta == 0:
        raise ValueError("beta = 0 leaves the condensate uniform; use psi = 1")
    p0 = psi_at_impurity(beta, gamma)
    # artanh(p) for p < 1, arcoth(p) = artanh(1/p) for p > 1
    c = math.atanh(p0) if beta > 0 else math.atanh(1.0 / p0)
    return DeltaSolution(beta * gamma, p0, c)


def delta_profile(beta: float, gamma: float, x):
    return delta_solution(beta, gamma)(x)


def deformation_energy(beta: float, gamma: float) -> float:
    """Condensate plus interaction energy of a point impurity, relative to the uniform state."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    k = 0.5 * beta * gamma
    s = math.hypot(1.0, k)
    # braces 1 - s^3 + k^3 with s = sqrt(1 + k^2), rearranged to avoid cancellation
    if k > 1:
        braces = 1.0 - (k * k + k * s + s * s) / (k + s)
    else:
        braces = -k * k * (1.0 + s + s * s) / (1.0 + s) + k**3
    return 4.0 / 3.0 / gamma * braces
