"""Six-dimensional Hamiltonian system for the characteristics of S.

Coordinates are (a, b, x, p_a, p_b, p_x) with lambda = a + i b. The
Hamiltonian is

    H = -x (a^2 + b^2) p_x^2 + a p_a / 2 + b p_b / 2 - a b p_a p_b
        - (a^2 - b^2) (p_a^2 - p_b^2) / 4

and the momentum equations for p_a, p_b carry the constant x0 p_x(0)^2 as a
frozen ``source`` term. Along true solutions source == x p_x^2.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .defaults import EPS_BLOW, STEP
from .spectral import DomainError, InitialData, SpectralMeasure, initial_momenta


class IntegrationError(RuntimeError):
    """The integrator produced a non-finite state without a p_x blow-up."""


@dataclass(frozen=True)
class PhasePoint:
    a: float
    b: float
    x: float
    p_a: float
    p_b: float
    p_x: float

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.x, self.p_a, self.p_b, self.p_x])

    @classmethod
    def from_array(cls, y) -> "PhasePoint":
        return cls(*(float(v) for v in y))

    @property
    def lam(self) -> complex:
        return complex(self.a, self.b)


def initial_point(mu: SpectralMeasure, init: InitialData) -> PhasePoint:
    """Phase point at u = 0 with momenta from the trace formulas."""
    pa, pb, px = initial_momenta(mu, init)
    return PhasePoint(init.a0, init.b0, init.x0, pa, pb, px)


def source_term(p: PhasePoint) -> float:
    return p.x * p.p_x**2


def _cols(p):
    if isinstance(p, PhasePoint):
        return p.a, p.b, p.x, p.p_a, p.p_b, p.p_x
    y = np.asarray(p, dtype=float)
    return tuple(y[..., i] for i in range(6))


def hamiltonian_value(p):
    a, b, x, pa, pb, px = _cols(p)
    return (
        -x * (a * a + b * b) * px**2
        + 0.5 * a * pa
        + 0.5 * b * pb
        - a * b * pa * pb
        - 0.25 * (a * a - b * b) * (pa * pa - pb * pb)
    )


def vector_field(p, source: float) -> np.ndarray:
    """Right-hand sides (a', b', x', p_a', p_b', p_x')."""
    a, b, x, pa, pb, px = _cols(p)
    r2 = a * a + b * b
    d2 = a * a - b * b
    dp = pa * pa - pb * pb
    return np.stack(
        [
            -0.5 * d2 * pa - a * (b * pb - 0.5),
            0.5 * d2 * pb - b * (a * pa - 0.5),
            -2.0 * x * r2 * px,
            0.5 * a * dp + pa * (b * pb - 0.5) + 2.0 * a * source,
            -0.5 * b * dp + pb * (a * pa - 0.5) + 2.0 * b * source,
            r2 * px * px,
        ],
        axis=-1,
    )


def conserved_quantities(p):
    """(H, K1, K2, x p_x^2); K2 is the angular momentum a p_b - b p_a."""
    a, b, x, pa, pb, px = _cols(p)
    return (
        hamiltonian_value(p),
        x * px + 0.5 * (a * pa + b * pb),
        a * pb - b * pa,
        x * px * px,
    )


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution of the Hamiltonian system.

    ``status`` is ``"completed"`` or ``"blew_up"``; in the latter case
    ``u_blow`` is the last sampled time, where p_x first exceeded the cap
    (or the step collapsed under the p_x-driven refinement).
    """

    source: float
    u: np.ndarray
    y: np.ndarray
    status: str
    u_blow: float | None = None
    step: float = STEP
    backward: bool = False
    _drift: dict = field(default=None, repr=False, compare=False)

    def __len__(self):
        return self.u.size

    @property
    def lam(self) -> np.ndarray:
        return self.y[:, 0] + 1j * self.y[:, 1]

    @property
    def x(self) -> np.ndarray:
        return self.y[:, 2]

    @property
    def p_x(self) -> np.ndarray:
        return self.y[:, 5]

    def point(self, k: int) -> PhasePoint:
        return PhasePoint.from_array(self.y[k])

    @property
    def final(self) -> PhasePoint:
        return self.point(-1)

    def conserved(self) -> dict[str, np.ndarray]:
        H, K1, K2, X = conserved_quantities(self.y)
        return {"H": H, "K1": K1, "K2": K2, "xpx2": X}

    def drift(self) -> dict[str, float]:
        """Max deviation of each conserved quantity from its initial value.

        ``xpx2`` is measured against the frozen source term, as the
        right-hand sides for a and b assume they agree.
        """
        c = self.conserved()
        out = {k: float(np.max(np.abs(v - v[0]))) for k, v in c.items()}
        out["xpx2"] = float(np.max(np.abs(c["xpx2"] - self.source)))
        return out

    def uniform_prefix(self) -> int:
        """Number of leading samples that sit on the fixed grid u = k*step."""
        du = np.diff(self.u)
        off = np.nonzero(np.abs(du - self.step) > 1e-9 * self.step)[0]
        return self.u.size if off.size == 0 else int(off[0]) + 1


def integrate(
    init: PhasePoint,
    source: float,
    u_max: float,
    step: float = STEP,
    eps_blow: float = EPS_BLOW,
    backward: bool = False,
) -> Trajectory:
    """Integrate the system with RK4 from ``init`` over [0, u_max].

    Steps are halved while |p_x'| * h > 0.1 |p_x|, so the pole of p_x is
    approached geometrically; crossing p_x > 1/eps_blow ends the run with
    status ``"blew_up"``. ``backward=True`` integrates the reversed field.
    """
    if not u_max > 0:
        raise DomainError("u_max must be positive")
    y0 = init.as_array() if isinstance(init, PhasePoint) else np.asarray(init, dtype=float)
    u, y, status = _kernels.rk4_trajectory(y0, source, step, u_max, eps_blow, -1.0 if backward else 1.0)
    if status == 2:
        raise IntegrationError(
            f"non-finite state at u={u[-1]:.6g} without a p_x blow-up (last p_x={y[-1, 5]:.3g})"
        )
    if status == 1:
        return Trajectory(source, u, y, "blew_up", float(u[-1]), step, backward)
    return Trajectory(source, u, y, "completed", None, step, backward)


def characteristic(mu: SpectralMeasure, init: InitialData, u_max: float, **kw) -> Trajectory:
    """Trajectory started from the trace initial conditions of ``init``."""
    if init.lambda0 == 0:
        raise DomainError("lambda0 = 0 is a fixed point; characteristics need lambda0 != 0")
    p0 = initial_point(mu, init)
    return integrate(p0, source_term(p0), u_max, **kw)


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("BROWN_THREADS", "1")))
    except ValueError:
        return 1


def integrate_many(inits, sources, u_max, **kw) -> list[Trajectory]:
    """Integrate several initial points; results keep the input order."""
    jobs = list(zip(inits, sources))
    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        return list(pool.map(lambda job: integrate(job[0], job[1], u_max, **kw), jobs))


def lambda_ode_residual(traj: Trajectory, source: float | None = None) -> float:
    """Max |source |lambda|^2 + (lambda'' lambda - lambda'^2) / lambda^2|.

    Derivatives are centred differences on the uniform-step prefix of the
    trajectory.
    """
    source = traj.source if source is None else source
    n = traj.uniform_prefix()
    if n < 3:
        raise DomainError("need at least three uniformly spaced samples")
    lam = traj.lam[:n]
    if np.min(np.abs(lam)) < 1e-12:
        raise DomainError("lambda vanishes along the trajectory")
    h = traj.step
    d1 = (lam[2:] - lam[:-2]) / (2 * h)
    d2 = (lam[2:] - 2 * lam[1:-1] + lam[:-2]) / h**2
    mid = lam[1:-1]
    res = source * np.abs(mid) ** 2 + (d2 * mid - d1 * d1) / mid**2
    return float(np.max(np.abs(res)))
