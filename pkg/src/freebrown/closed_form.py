"""Closed-form characteristics: radius, argument, x(u), blow-up time and S.

With v = log|lambda| the radial equation is v'' + c e^{2v} = 0 where
c = x0 p_x(0)^2. Writing C1 = v'(0)^2 + c |lambda0|^2, C2 = c / C1,
s = sqrt(1 - C2 |lambda0|^2), A = 1 + s, k = sqrt(C1) and sigma = sgn v'(0)
(with sgn 0 = -1), the radius is

    |lambda(u)| = 2 |lambda0| A e^{-ku} / (C2 |lambda0|^2 + A^2 e^{-2ku})   sigma = +1
    |lambda(u)| = 2 |lambda0| A e^{-ku} / (C2 |lambda0|^2 e^{-2ku} + A^2)   sigma = -1

both written with e^{-ku} <= 1 so nothing overflows. For c = 0 the radius
is the exponential |lambda0| e^{v'(0) u}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import hamiltonian as ham
from .spectral import (
    DomainError,
    InitialData,
    SpectralMeasure,
    initial_momenta,
    trace_q0,
)


class UnsupportedRegimeError(DomainError):
    """The blow-up formula is asked for outside the regime t1 >= t*."""


def sgn(v: float) -> int:
    """Left-continuous sign: +1 for v > 0, -1 for v <= 0."""
    return 1 if v > 0 else -1


@dataclass(frozen=True)
class CurveConstants:
    C1: float
    C2: float | None
    C3: float
    vdot0: float
    u1: float
    r0: float
    theta0: float
    px0: float
    source: float
    K2: float
    H0: float

    @property
    def degenerate(self) -> bool:
        """True when x0 p_x(0)^2 = 0 and the radius is a pure exponential."""
        return self.C2 is None

    @property
    def sigma(self) -> int:
        return sgn(self.vdot0)

    @property
    def s(self) -> float:
        return math.sqrt(1.0 - self.C2 * self.r0**2)

    @property
    def r_max(self) -> float:
        """sqrt(|lambda0|^2 + v'(0)^2 / (x0 p_x(0)^2)), the radial ceiling."""
        if self.degenerate or self.source <= 0:
            return math.inf
        return 1.0 / math.sqrt(self.C2)


def curve_constants(mu: SpectralMeasure, init: InitialData) -> CurveConstants:
    if init.lambda0 == 0:
        raise DomainError("lambda0 = 0 has no radial solution")
    p0 = ham.initial_point(mu, init)
    px0 = p0.p_x
    src = init.x0 * px0**2
    v = 0.5 * (1.0 - p0.a * p0.p_a - p0.b * p0.p_b)
    r0 = abs(init.lambda0)
    theta0 = math.atan2(init.b0, init.a0)
    K2 = p0.a * p0.p_b - p0.b * p0.p_a
    H0 = float(ham.hamiltonian_value(p0))
    if src == 0:
        return CurveConstants(v * v, None, v * v, v, math.inf, r0, theta0, px0, 0.0, K2, H0)
    C1 = v * v + src * r0**2
    if not C1 > 0:
        raise DomainError(f"C1 = {C1!r} is not positive; no real closed form for this x0 < 0")
    C2 = src / C1
    if src < 0 or v < 0:
        u1 = math.inf
    else:
        s = math.sqrt(max(0.0, 1.0 - C2 * r0**2))
        u1 = math.atanh(s) / math.sqrt(C1) if s < 1 else math.inf
    return CurveConstants(C1, C2, C1, v, u1, r0, theta0, px0, src, K2, H0)


def radial_solution(cc: CurveConstants, u):
    """|lambda(u)|; past u1 the sech branch with C3 is used."""
    u = np.asarray(u, dtype=float)
    if cc.degenerate:
        return cc.r0 * np.exp(cc.vdot0 * u)
    s = cc.s
    A = 1.0 + s
    c = cc.C2 * cc.r0**2
    k = math.sqrt(cc.C1)
    e = np.exp(-k * u)
    if cc.sigma < 0:
        return 2 * cc.r0 * A * e / (c * e * e + A * A)
    with np.errstate(divide="ignore", invalid="ignore"):
        before = 2 * cc.r0 * A * e / (c + A * A * e * e)
        if math.isinf(cc.u1):
            return np.where(c + A * A * e * e > 0, before, np.inf)
        k3 = math.sqrt(cc.C3)
        tau = np.maximum(u - cc.u1, 0.0)
        g = np.exp(-k3 * tau)
        after = cc.r_max * 2 * g / (1 + g * g)
    return np.where(u < cc.u1, before, after)


def angular_solution(K2: float, theta0: float, u):
    return theta0 + 0.5 * K2 * np.asarray(u, dtype=float)


def lambda_curve(cc: CurveConstants, u):
    """Complex lambda(u) from the radial and angular closed forms."""
    return radial_solution(cc, u) * np.exp(1j * angular_solution(cc.K2, cc.theta0, u))


def integral_lambda_sq(cc: CurveConstants, u):
    """int_0^u |lambda(s)|^2 ds in closed form."""
    u = np.asarray(u, dtype=float)
    r2 = cc.r0**2
    if cc.degenerate:
        v = cc.vdot0
        if v == 0:
            return r2 * u
        return r2 * np.expm1(2 * v * u) / (2 * v)
    s = cc.s
    A = 1.0 + s
    c = cc.C2 * r2
    k = math.sqrt(cc.C1)
    g = np.exp(-2 * k * u)
    num = 2 * r2 * A * A * (-np.expm1(-2 * k * u))
    if cc.sigma < 0:
        den = k * (c * g + A * A) * (c + A * A)
    else:
        den = k * (c + A * A * g) * (c + A * A)
    with np.errstate(divide="ignore"):
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), np.inf)


def _integral_at_infinity(cc: CurveConstants) -> float:
    r2 = cc.r0**2
    if cc.degenerate:
        return r2 / (2 * -cc.vdot0) if cc.vdot0 < 0 else math.inf
    A = 1.0 + cc.s
    c = cc.C2 * r2
    k = math.sqrt(cc.C1)
    if cc.sigma < 0:
        return 2 * r2 / (k * (c + A * A))
    if c <= 0:
        return math.inf
    return 2 * r2 * A * A / (k * c * (c + A * A))


def x_curve(mu: SpectralMeasure, init: InitialData, u):
    """x(u) = x0 (1 - p_x(0) int_0^u |lambda|^2)^2."""
    cc = curve_constants(mu, init)
    return init.x0 * (1.0 - cc.px0 * integral_lambda_sq(cc, u)) ** 2


def blowup_time_limit(mu: SpectralMeasure, lambda0: complex) -> float:
    """t* in the limit x0 p_x(0)^2 -> 0+ (the exponential radius)."""
    lam = complex(lambda0)
    if np.any(mu.locations == lam):
        return 0.0
    init = InitialData(lam, 0.0)
    tq = trace_q0(mu, init)
    pa, pb, _ = initial_momenta(mu, init)
    v = 0.5 * (1.0 - lam.real * pa - lam.imag * pb)
    q = abs(lam) ** 2 * tq
    if v == 0:
        return 1.0 / q
    arg = 2 * v / q
    if arg <= -1:
        return math.inf
    return math.log1p(arg) / (2 * v)


def regime_holds(cc: CurveConstants) -> bool:
    """Whether t1 >= t*, i.e. p_x blows up before the radius turns."""
    if cc.sigma < 0 or math.isinf(cc.u1):
        return True
    return cc.px0 * float(integral_lambda_sq(cc, cc.u1)) >= 1.0


def blowup_time(mu: SpectralMeasure, init: InitialData, fallback: bool = True) -> float:
    """First u with p_x(0) int_0^u |lambda|^2 = 1, or ``inf`` if none.

    Outside the regime t1 >= t* the closed form is not used: with
    ``fallback`` the time comes from integrating the ODEs until p_x blows up,
    otherwise :class:`UnsupportedRegimeError` is raised.
    """
    cc = curve_constants(mu, init)
    if not regime_holds(cc):
        if not fallback:
            raise UnsupportedRegimeError(
                f"t1 = {cc.u1:.6g} precedes the blow-up; the closed form assumes t1 >= t*"
            )
        return ode_blowup_time(mu, init)
    if cc.px0 * _integral_at_infinity(cc) <= 1.0:
        return math.inf

    def F(u):
        val = cc.px0 * float(integral_lambda_sq(cc, u)) - 1.0
        return val if math.isfinite(val) else 1.0

    hi = 1.0
    while F(hi) < 0:
        hi *= 2.0
        if hi > 1e12:
            return math.inf
    return brentq(F, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def ode_blowup_time(mu: SpectralMeasure, init: InitialData, u_max: float = 1e3, **kw) -> float:
    """Blow-up time detected by integrating the Hamiltonian system."""
    traj = ham.characteristic(mu, init, u_max, **kw)
    return traj.u_blow if traj.status == "blew_up" else math.inf


@dataclass(frozen=True)
class HJInputs:
    mu: SpectralMeasure
    lambda0: complex
    x0: float
    u: float


def hj_value(inp: HJInputs, t_star: float | None = None) -> float:
    """S(u, lambda(u), x(u)) transported along the characteristic.

    S = tau(log(|h - lambda0|^2 + x0)) + (H0 - 1/2) u + log|lambda(u)| - log|lambda0|.
    """
    init = InitialData(inp.lambda0, inp.x0)
    cc = curve_constants(inp.mu, init)
    if t_star is None:
        t_star = blowup_time(inp.mu, init)
    if inp.u >= t_star:
        raise DomainError(f"u = {inp.u} is not below the blow-up time {t_star:.6g}")
    s0 = S0(inp.mu, inp.lambda0, inp.x0)
    r = float(radial_solution(cc, inp.u))
    return s0 + (cc.H0 - 0.5) * inp.u + math.log(r) - math.log(cc.r0)


def S0(mu: SpectralMeasure, lam: complex, x: float) -> float:
    """tau(log(|h - lambda|^2 + x))."""
    lam = complex(lam)
    arg = (mu.locations - lam.real) ** 2 + lam.imag**2 + x
    if np.any(arg <= 0):
        raise DomainError("log argument is not positive at some atom")
    return float(np.dot(mu.weights, np.log(arg)))
