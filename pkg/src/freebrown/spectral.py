"""Discrete spectral law of h and the initial data of the characteristics.

Every quantity the Hamiltonian system needs from h is a trace of a function
of h, so a finite atomic measure sum_i w_i delta_{s_i} represents it exactly.
The projection P of rank alpha is the two-atom measure (1-alpha) delta_0 +
alpha delta_1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """An argument lies outside the domain where a formula is defined."""


@dataclass(frozen=True)
class SpectralMeasure:
    """Finitely many atoms ``(location, weight)`` with weights summing to one."""

    atoms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        atoms = tuple((float(s), float(w)) for s, w in self.atoms)
        if not atoms:
            raise DomainError("spectral measure needs at least one atom")
        locs = [s for s, _ in atoms]
        weights = [w for _, w in atoms]
        if any(s < 0 for s in locs):
            raise DomainError("atom locations must be non-negative")
        if any(w <= 0 for w in weights):
            raise DomainError("atom weights must be positive")
        if len(set(locs)) != len(locs):
            raise DomainError("atom locations must be distinct")
        if abs(sum(weights) - 1.0) > 1e-12:
            raise DomainError(f"weights sum to {sum(weights)!r}, not 1")
        object.__setattr__(self, "atoms", atoms)

    @property
    def locations(self) -> np.ndarray:
        return np.array([s for s, _ in self.atoms])

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms])

    def trace(self, fn) -> float:
        """tau(fn(h)) for a vectorised scalar function ``fn``."""
        return float(np.dot(self.weights, fn(self.locations)))


@dataclass(frozen=True)
class Params:
    t: float
    alpha: float

    def __post_init__(self):
        if not self.t > 0:
            raise DomainError("t must be positive")
        if not 0 < self.alpha <= 1:
            raise DomainError("alpha must lie in (0, 1]")


@dataclass(frozen=True)
class InitialData:
    """Start of a characteristic: lambda0 = a0 + i b0 and x0.

    ``x0`` may be slightly negative; whether that is admissible depends on
    the measure and is checked by :func:`trace_q0`.
    """

    lambda0: complex
    x0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "lambda0", complex(self.lambda0))
        object.__setattr__(self, "x0", float(self.x0))

    @property
    def a0(self) -> float:
        return self.lambda0.real

    @property
    def b0(self) -> float:
        return self.lambda0.imag

    def check(self, mu: SpectralMeasure) -> "InitialData":
        trace_q0(mu, self)
        return self


def projection_measure(alpha: float) -> SpectralMeasure:
    """Spectral measure of a projection with trace ``alpha``."""
    if not 0 < alpha < 1:
        raise DomainError("projection rank alpha must lie in (0, 1)")
    return SpectralMeasure(((0.0, 1.0 - alpha), (1.0, alpha)))


def _denominators(mu: SpectralMeasure, init: InitialData) -> np.ndarray:
    den = (mu.locations - init.a0) ** 2 + init.b0**2 + init.x0
    if np.any(den <= 0):
        raise DomainError(
            f"(h - a0)^2 + b0^2 + x0 is not positive at some atom for lambda0={init.lambda0}, x0={init.x0}"
        )
    return den


def trace_q0(mu: SpectralMeasure, init: InitialData) -> float:
    """tau(q0) with q0 = ((h - a0)^2 + b0^2 + x0)^{-1}."""
    return float(np.dot(mu.weights, 1.0 / _denominators(mu, init)))


def initial_momenta(mu: SpectralMeasure, init: InitialData) -> tuple[float, float, float]:
    """(p_a(0), p_b(0), p_x(0)) = (-2 tau(q0 (h - a0)), 2 b0 tau(q0), tau(q0))."""
    den = _denominators(mu, init)
    tq = float(np.dot(mu.weights, 1.0 / den))
    pa = -2.0 * float(np.dot(mu.weights, (mu.locations - init.a0) / den))
    return pa, 2.0 * init.b0 * tq, tq


def vdot0(mu: SpectralMeasure, init: InitialData) -> float:
    """Initial logarithmic radial speed (1 - a0 p_a(0) - b0 p_b(0)) / 2."""
    pa, pb, _ = initial_momenta(mu, init)
    return 0.5 * (1.0 - init.a0 * pa - init.b0 * pb)


def vdot0_projection(alpha: float, lambda0: complex) -> float:
    """Closed form of :func:`vdot0` for a projection at x0 = 0.

    Defined for every lambda0 != 1, including lambda0 = 0 where the trace
    formula itself is singular.
    """
    lam = complex(lambda0)
    d = abs(1 - lam) ** 2
    if d == 0:
        raise DomainError("lambda0 = 1 is a pole of the projection quotient")
    return 0.5 * (alpha * (1 - abs(lam) ** 2) - (1 - alpha) * d) / d
