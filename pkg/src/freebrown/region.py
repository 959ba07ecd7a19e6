"""Geometry of Sigma_{t,alpha}, Omega_{t,alpha} and Gamma_{t,alpha}.

The map is f_{t,alpha}(z) = z exp(t (2 alpha - 1 + z) / (2 (1 - z))). Through the
Moebius chart w = (2 alpha - 1 + z) / (1 - z) it reads f = z e^{t w / 2}, and the
boundary of Sigma is the w-plane curve

    y^2 = phi(x) / (e^{tx} - 1),   phi(x) = (x + 1)^2 - (x^2 + 2x(1 - 2 alpha) + 1) e^{tx}

for w = x + i y. Everything here is evaluated in the shifted abscissa
delta = x + 1 so that large t, where the curve collapses onto w = -1 and z
becomes huge, keeps full relative precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from . import _kernels
from .defaults import DEFAULTS, SAMPLES, T_SMALL
from .spectral import DomainError


class BracketError(RuntimeError):
    """A sign-change bracket for a root of phi could not be found."""


class InverseError(RuntimeError):
    """Newton continuation for f^{-1} did not converge."""


def _check_alpha(alpha, allow_one=False):
    hi_ok = alpha <= 1 if allow_one else alpha < 1
    if not (0 < alpha and hi_ok):
        raise DomainError(f"alpha = {alpha!r} outside {'(0, 1]' if allow_one else '(0, 1)'}")


def _check_t(t):
    if not t > 0:
        raise DomainError(f"t = {t!r} must be positive")


# -- maps --------------------------------------------------------------------

def f_map(t, alpha, z):
    """f_{t,alpha}(z); alpha = 1 is accepted."""
    _check_alpha(alpha, allow_one=True)
    z = np.asarray(z, dtype=complex)
    if np.any(z == 1):
        raise DomainError("f_{t,alpha} has an essential singularity at z = 1")
    out = z * np.exp(t * (2 * alpha - 1 + z) / (2 * (1 - z)))
    return out[()] if out.ndim == 0 else out


def f_log_derivative(t, alpha, z):
    """f'/f = 1/z + t alpha / (1 - z)^2."""
    z = np.asarray(z, dtype=complex)
    return 1 / z + t * alpha / (1 - z) ** 2


def mobius(alpha, z):
    z = np.asarray(z, dtype=complex)
    if np.any(z == 1):
        raise DomainError("z = 1 is the pole of the Moebius chart")
    out = (2 * alpha - 1 + z) / (1 - z)
    return out[()] if out.ndim == 0 else out


def mobius_inv(alpha, w):
    w = np.asarray(w, dtype=complex)
    if np.any(w == -1):
        raise DomainError("w = -1 is the pole of the inverse chart")
    out = (w + 1 - 2 * alpha) / (1 + w)
    return out[()] if out.ndim == 0 else out


def _log1p_ratio(q):
    """log(1 + q) / q with the removable singularity filled in."""
    q = np.asarray(q, dtype=float)
    small = np.abs(q) < 1e-5
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log1p(q) / q
    series = 1 - q / 2 + q * q / 3 - q**3 / 4
    return np.where(small, series, out)


def T_alpha(alpha, lambda0):
    """Blow-up time of the x0 -> 0+ characteristic started at ``lambda0``.

    With D = |1 - lambda0|^2, M = alpha |lambda0|^2 + (1 - alpha) D and
    N = alpha - M,

        T = (D / N) log(alpha / M),

    which is |1 - lambda0|^2 / alpha on the circle |1 - alpha - lambda0| = alpha
    (N = 0) and 0 at lambda0 = 1.
    """
    _check_alpha(alpha, allow_one=True)
    lam = np.asarray(lambda0, dtype=complex)
    D = np.abs(1 - lam) ** 2
    M = alpha * np.abs(lam) ** 2 + (1 - alpha) * D
    N = alpha * (1 - np.abs(lam) ** 2) - (1 - alpha) * D
    with np.errstate(divide="ignore", invalid="ignore"):
        q = N / M
        near = np.abs(q) < 0.5
        far = D / N * np.log(alpha / M)
        out = np.where(near, D / M * _log1p_ratio(np.where(near, q, 0.0)), far)
    out = np.where(D == 0, 0.0, out)
    out = np.where(M == 0, np.inf, out)
    return out[()] if out.ndim == 0 else out


# -- phi and its roots ---------------------------------------------------------

def phi(t, alpha, x):
    x = np.asarray(x, dtype=float)
    return (x + 1) ** 2 - (x * x + 2 * x * (1 - 2 * alpha) + 1) * np.exp(t * x)


def _phi_delta(t, alpha, d):
    """phi at x = d - 1, written without cancellation near x = -1."""
    return d * d - (d * d - 4 * alpha * d + 4 * alpha) * np.exp(t * (d - 1))


def _expm1_ratio(y):
    """(e^y - 1) / y, equal to 1 at y = 0."""
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(y == 0, 1.0, np.expm1(y) / np.where(y == 0, 1.0, y))


def phi_tilde(t, alpha, x):
    """phi(x) / x, continuous at 0 with value 4 alpha - t."""
    x = np.asarray(x, dtype=float)
    Q = x * x + 2 * x * (1 - 2 * alpha) + 1
    return 4 * alpha - Q * t * _expm1_ratio(t * x)


def _phi_tilde_delta(t, alpha, d):
    d = np.asarray(d, dtype=float)
    x = d - 1
    with np.errstate(divide="ignore", invalid="ignore"):
        far = _phi_delta(t, alpha, d) / x
    return np.where(np.abs(x) < 0.5, phi_tilde(t, alpha, x), far)


def _y2_delta(t, alpha, d):
    """y^2 on the boundary of Sigma as a function of delta = x + 1."""
    d = np.asarray(d, dtype=float)
    x = d - 1
    with np.errstate(divide="ignore", invalid="ignore"):
        near = phi_tilde(t, alpha, x) / (t * _expm1_ratio(t * x))
        far = _phi_delta(t, alpha, d) / np.expm1(t * x)
    return np.where(np.abs(x) < 0.5, near, far)


@dataclass(frozen=True)
class PhiRoots:
    x_minus: float
    x_tilde_minus: float | None
    x_plus: float | None
    case: str
    # the same roots as delta = x + 1, which keeps relative precision near x = -1
    d_minus: float = field(default=math.nan, repr=False)
    d_tilde_minus: float | None = field(default=None, repr=False)


def _case(t, alpha, tol=1e-12):
    g = 4 * alpha - t
    if abs(g) <= tol * max(1.0, t):
        return "t_eq_4a"
    return "t_lt_4a" if g > 0 else "t_gt_4a"


def _root(fn, lo, hi):
    return brentq(fn, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=1000)


@lru_cache(maxsize=256)
def phi_roots(t, alpha) -> PhiRoots:
    """Roots x^- < -1, x~^- in (-1, 0) (t > 4 alpha) and x^+ > 0 (t < 4 alpha)."""
    _check_t(t)
    _check_alpha(alpha)
    case = _case(t, alpha)

    def g(d):
        return float(_phi_tilde_delta(t, alpha, d))

    B = 1.0
    while g(-B) >= 0:
        B *= 2.0
        if B > 1e8:
            raise BracketError(f"no sign change of phi below -1 for t={t}, alpha={alpha}")
    d_minus = _root(g, -B, 0.0)

    d_tilde = None
    x_plus = None
    if case == "t_gt_4a":
        d_tilde = _root(g, 0.0, 1.0)
    elif case == "t_lt_4a":
        U = 1.0
        while g(1.0 + U) >= 0:
            U *= 2.0
            if U > 1e8:
                raise BracketError(f"no sign change of phi above 0 for t={t}, alpha={alpha}")
        x_plus = _root(lambda x: float(phi_tilde(t, alpha, x)), 0.0, U)
    return PhiRoots(
        d_minus - 1.0,
        None if d_tilde is None else d_tilde - 1.0,
        x_plus,
        case,
        d_minus,
        d_tilde,
    )


# -- boundary curves -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BoundaryCurve:
    """Closed sampled curve; ``w`` keeps the Moebius-plane parametrization."""

    plane: str
    points: np.ndarray
    closed: bool
    x_range: tuple[float, float]
    t: float
    alpha: float
    w: np.ndarray | None = None
    exceptional: np.ndarray | None = None

    def __len__(self):
        return self.points.size

    @property
    def spacing(self) -> np.ndarray:
        """Lengths of the polyline segments, including the closing one."""
        p = self.points
        return np.abs(np.roll(p, -1) - p) if self.closed else np.abs(np.diff(p))

    def self_intersections(self) -> int:
        return _kernels.count_self_intersections(self.points)

    def conjugate_gap(self) -> float:
        """Distance between the curve and its mirror image (as point sets)."""
        d = _kernels.min_distances(self.points, np.conj(self.points))
        return float(np.max(d))


def _cosine_nodes(lo, hi, m):
    k = np.arange(m)
    return lo + (hi - lo) * 0.5 * (1 - np.cos(np.pi * k / (m - 1)))


def _sigma_delta_range(roots: PhiRoots):
    if roots.case == "t_lt_4a":
        return roots.d_minus, roots.x_plus + 1.0
    if roots.case == "t_eq_4a":
        return roots.d_minus, 1.0
    return roots.d_minus, roots.d_tilde_minus


def _sigma_w_samples(t, alpha, n):
    """Upper branch left to right, then lower branch back; returns (1 + w, exceptional mask)."""
    roots = phi_roots(t, alpha)
    lo, hi = _sigma_delta_range(roots)
    m = n // 2 + 1
    d = _cosine_nodes(lo, hi, m)
    y = np.sqrt(np.maximum(_y2_delta(t, alpha, d), 0.0))
    y[0] = 0.0
    y[-1] = 0.0
    one_w = np.concatenate([d + 1j * y, (d - 1j * y)[-2:0:-1]])
    x = one_w.real - 1.0
    exc = np.zeros(one_w.size, dtype=bool)
    if roots.case == "t_lt_4a":
        # the two points with x = 0 lie on the circle |1 - alpha - z| = alpha
        exc = x == 0
    return one_w, exc, roots


def _z_from_one_w(alpha, one_w):
    return (one_w - 2 * alpha) / one_w


def boundary_w(t, alpha, n_samples=SAMPLES) -> BoundaryCurve:
    """F_{t,alpha} in the Moebius plane."""
    one_w, exc, roots = _sigma_w_samples(t, alpha, _check_samples(n_samples))
    lo, hi = _sigma_delta_range(roots)
    return BoundaryCurve("w", one_w - 1.0, True, (lo - 1.0, hi - 1.0), t, alpha, one_w - 1.0, exc)


def _check_samples(n):
    n = int(n)
    if n < 16:
        raise DomainError("need at least 16 samples per curve")
    return n


def boundary_sigma(t, alpha, n_samples=SAMPLES) -> BoundaryCurve:
    """Boundary of Sigma_{t,alpha} = {T_alpha < t} in the z-plane."""
    one_w, exc, roots = _sigma_w_samples(t, alpha, _check_samples(n_samples))
    lo, hi = _sigma_delta_range(roots)
    z = _z_from_one_w(alpha, one_w)
    return BoundaryCurve("z", z, True, (lo - 1.0, hi - 1.0), t, alpha, one_w - 1.0, exc)


def boundary_omega(t, alpha, n_samples=SAMPLES) -> BoundaryCurve:
    """f_{t,alpha}(boundary of Sigma), the Jordan curve enclosing Omega."""
    one_w, exc, roots = _sigma_w_samples(t, alpha, _check_samples(n_samples))
    lo, hi = _sigma_delta_range(roots)
    z = _z_from_one_w(alpha, one_w)
    img = z * np.exp(0.5 * t * (one_w - 1.0))
    return BoundaryCurve("image", img, True, (lo - 1.0, hi - 1.0), t, alpha, one_w - 1.0, exc)


def modulus_residual(t, alpha, z):
    """|f(z)|^2 - alpha |z|^2 / (alpha |z|^2 + (1 - alpha) |1 - z|^2) on given points."""
    z = np.asarray(z, dtype=complex)
    az2 = alpha * np.abs(z) ** 2
    rhs = az2 / (az2 + (1 - alpha) * np.abs(1 - z) ** 2)
    return np.abs(f_map(t, alpha, z)) ** 2 - rhs


def circle_points(alpha, n=SAMPLES):
    """The circle |1 - alpha - z| = alpha, zero set of the initial radial speed."""
    th = np.linspace(0, 2 * np.pi, n, endpoint=False)
    return 1 - alpha + alpha * np.exp(1j * th)


# -- Gamma ------------------------------------------------------------------------

def _gamma_y2(t, alpha, u):
    """y^2 of {|f_{alpha t,1}| = 1} in the w-plane at x = u + alpha - 1."""
    u = np.asarray(u, dtype=float)
    return 4 * alpha / (t * _expm1_ratio(t * u)) - (u - alpha) ** 2


def gamma_contains(t, alpha, z):
    _check_alpha(alpha, allow_one=True)
    z = np.asarray(z, dtype=complex)
    inside = np.abs(z) < 1
    zz = np.where(inside, z, 0.0)
    out = inside & (np.abs(f_map(alpha * t, 1.0, zz)) < 1)
    return bool(out) if out.ndim == 0 else out


def boundary_gamma(t, alpha, n_samples=SAMPLES) -> BoundaryCurve:
    """Boundary of Gamma_{t,alpha}; for alpha t < 4 it closes along a unit-circle arc."""
    _check_t(t)
    _check_alpha(alpha)
    n = _check_samples(n_samples)

    def h(u):
        return float(_gamma_y2(t, alpha, u))

    hi_u = alpha + 2 * math.sqrt(alpha / t) + 1.0
    grid = np.linspace(0.0, hi_u, 4001)
    vals = _gamma_y2(t, alpha, grid)
    pos = np.nonzero(vals > 0)[0]
    if pos.size == 0:
        raise BracketError("Gamma boundary not found")
    i0, i1 = pos[0], pos[-1]
    u_hi = _root(h, grid[i1], grid[i1 + 1])
    m = n // 2 + 1
    if i0 == 0:
        # curve meets the unit circle at u = 0
        u = _cosine_nodes(0.0, u_hi, m)
        y = np.sqrt(np.maximum(_gamma_y2(t, alpha, u), 0.0))
        y[-1] = 0.0
        y0 = y[0]
        arc = 1j * np.linspace(-y0, y0, max(8, n // 8))[1:-1]
        one_w = np.concatenate([(u + alpha) + 1j * y, ((u + alpha) - 1j * y)[::-1], alpha + arc])
    else:
        u_lo = _root(h, grid[i0 - 1], grid[i0])
        u = _cosine_nodes(u_lo, u_hi, m)
        y = np.sqrt(np.maximum(_gamma_y2(t, alpha, u), 0.0))
        y[0] = y[-1] = 0.0
        one_w = np.concatenate([(u + alpha) + 1j * y, ((u + alpha) - 1j * y)[-2:0:-1]])
    z = _z_from_one_w(alpha, one_w)
    return BoundaryCurve("z", z, True, (float(u[0] + alpha - 1), float(u_hi + alpha - 1)), t, alpha, one_w - 1)


# -- membership -------------------------------------------------------------------

@dataclass(frozen=True)
class RegionQuery:
    """``status`` is ``"inside"``, ``"outside"`` or ``"boundary"``.

    ``value`` is t - T_alpha for Sigma and the signed distance to the sampled
    boundary (negative inside) for Omega; ``band`` is the half-width used.
    """

    status: str
    value: float
    band: float

    @property
    def inside(self) -> bool:
        return self.status == "inside"

    @property
    def outside(self) -> bool:
        return self.status == "outside"


def in_sigma(t, alpha, lambda0, tol=1e-9) -> RegionQuery:
    _check_t(t)
    _check_alpha(alpha)
    T = float(T_alpha(alpha, lambda0))
    gap = t - T
    if abs(gap) <= tol:
        return RegionQuery("boundary", gap, tol)
    return RegionQuery("inside" if gap > 0 else "outside", gap, tol)


class OmegaRegion:
    """Sampled Jordan curve of Omega with batch classification.

    classify returns 1 inside, 0 within ``band`` of the curve, -1 outside.
    ``margin`` dilates the region before classification.
    """

    def __init__(self, t, alpha, n_samples):
        self.t = t
        self.alpha = alpha
        self.curve = boundary_omega(t, alpha, n_samples)
        self.points = self.curve.points
        self.radius = float(np.max(np.abs(self.points)))
        seg = self.curve.spacing
        self.max_spacing = float(np.max(seg))
        self._seg = seg

    def local_spacing(self, q):
        q = np.atleast_1d(np.asarray(q, dtype=complex))
        idx = np.argmin(np.abs(self.points[None, :] - q[:, None]), axis=1)
        return np.maximum(self._seg[idx], np.roll(self._seg, 1)[idx])

    def signed_distance(self, q):
        q = np.atleast_1d(np.asarray(q, dtype=complex))
        wn = _kernels.winding_numbers(self.points, q)
        d = _kernels.min_distances(self.points, q)
        return np.where(wn != 0, -d, d)

    def classify(self, q, margin=0.0, band=0.0):
        sd = self.signed_distance(q) - margin
        out = np.where(sd < 0, 1, -1)
        return np.where(np.abs(sd) <= band, 0, out)


@lru_cache(maxsize=32)
def omega_region(t, alpha, n_samples=4 * SAMPLES) -> OmegaRegion:
    return OmegaRegion(t, alpha, n_samples)


def in_omega(t, alpha, lam, band=None, n_samples=4 * SAMPLES, max_samples=1 << 17) -> RegionQuery:
    """Winding-number membership with refinement near the curve.

    The default band is half the local sample spacing at the final resolution.
    """
    _check_t(t)
    _check_alpha(alpha)
    lam = complex(lam)
    n = n_samples
    while True:
        reg = omega_region(t, alpha, n)
        sd = float(reg.signed_distance(lam)[0])
        h = float(reg.local_spacing(lam)[0])
        if abs(sd) > 4 * h or 2 * n > max_samples:
            break
        n *= 2
    b = 0.5 * h if band is None else band
    if abs(sd) <= b:
        return RegionQuery("boundary", sd, b)
    return RegionQuery("inside" if sd < 0 else "outside", sd, b)


# -- inverse map ------------------------------------------------------------------

def _newton_log(z, s, target, tol, maxiter):
    """Solve f_{s,1}(z) = target by Newton on log(f / target)."""
    for k in range(maxiter):
        F = np.log(z * np.exp(s * (1 + z) / (2 * (1 - z))) / target)
        dz = -F / (1 / z + s / (1 - z) ** 2)
        z = z + dz
        if abs(dz) <= tol * abs(z):
            return z, k + 1, True
    return z, maxiter, False


def _preimage_disk(s, mu, s0, tol, maxiter):
    """Preimage of |mu| < 1 in Gamma_s, continued from s0 where f_{s0,1} ~ identity."""
    s0 = min(s0, s)
    z = mu * np.exp(-s0 * (1 + mu) / (2 * (1 - mu)))
    z, _, ok = _newton_log(z, s0, mu, tol, maxiter)
    if not ok:
        raise InverseError(f"Newton failed at the continuation start s={s0}")
    cur, ds = s0, s0
    while cur < s:
        ds = min(ds, s - cur)
        dz = -((1 + z) / (2 * (1 - z))) / (1 / z + cur / (1 - z) ** 2)
        zp = z + ds * dz
        zn, its, ok = _newton_log(zp, cur + ds, mu, tol, maxiter)
        local = min(abs(z), abs(1 - z))
        if ok and its <= 12 and abs(zn - z) < 0.25 * local and abs(zn) < 1:
            z, cur = zn, cur + ds
            ds *= 2.0
        else:
            ds *= 0.5
            if ds < 1e-13 * max(1.0, s):
                raise InverseError(f"continuation stalled at s={cur:.6g}")
    return z


def _polish(t, alpha, z, lam, maxiter=8):
    for _ in range(maxiter):
        F = np.log(f_map(t, alpha, z) / lam)
        dz = -F / f_log_derivative(t, alpha, z)
        z = z + dz
        if abs(dz) <= 1e-16 * abs(z):
            break
    return complex(z)


def f_inverse(t, alpha, lam, s_start=T_SMALL, check_outside=True):
    """Preimages of ``lam`` in Gamma or 1/Gamma outside the closure of Sigma.

    Returns one preimage, or two when |lam| = e^{(alpha - 1) t / 2}. With
    ``check_outside`` a preimage landing in the closure of Sigma raises
    :class:`DomainError`, which is how points of Omega are rejected.
    """
    _check_t(t)
    _check_alpha(alpha)
    lam = complex(lam)
    if lam == 0:
        raise DomainError("lambda = 0 is excluded")
    tol = DEFAULTS["newton_tol"]
    maxiter = DEFAULTS["newton_maxiter"]
    s = alpha * t
    mu = lam * math.exp((1 - alpha) * t / 2)
    r = abs(mu)
    if abs(r - 1) <= 1e-14:
        inner = _preimage_disk(s, mu * (1 - 1e-9), s_start, tol, maxiter)
        z1 = _polish(t, alpha, inner, lam)
        z2 = _polish(t, alpha, 1 / np.conj(z1), lam)
        cands = [z1] if abs(z1 - z2) <= 1e-12 * abs(z1) else [z1, z2]
    elif r < 1:
        cands = [_polish(t, alpha, _preimage_disk(s, mu, s_start, tol, maxiter), lam)]
    else:
        inner = _preimage_disk(s, 1 / np.conj(mu), s_start, tol, maxiter)
        cands = [_polish(t, alpha, 1 / np.conj(inner), lam)]
    if check_outside:
        for z in cands:
            if not T_alpha(alpha, z) > t:
                raise DomainError(f"lambda = {lam} lies in the closure of Omega_{{{t},{alpha}}}")
    return cands


def _preimage_disk_many(s, mu, s0, n_newton=6):
    """Vectorised continuation on a fixed schedule; returns (z, converged mask).

    A root of f_{s,1}(z) = mu with |z| < 1 is the unique preimage in Gamma_s,
    so convergence plus |z| < 1 certifies the result.
    """
    s0 = min(s0, s)
    sched = np.unique(np.concatenate([
        np.geomspace(s0, max(s, s0), 48),
        np.linspace(s0, s, int(40 * math.ceil(s)) + 2),
    ]))
    z = mu * np.exp(-s0 * (1 + mu) / (2 * (1 - mu)))
    prev = sched[0]
    with np.errstate(all="ignore"):
        for _ in range(n_newton):
            z = z - np.log(z * np.exp(prev * (1 + z) / (2 * (1 - z))) / mu) / (1 / z + prev / (1 - z) ** 2)
        for cur in sched[1:]:
            dz = -((1 + z) / (2 * (1 - z))) / (1 / z + prev / (1 - z) ** 2)
            z = z + (cur - prev) * dz
            for _ in range(n_newton):
                z = z - np.log(z * np.exp(cur * (1 + z) / (2 * (1 - z))) / mu) / (1 / z + cur / (1 - z) ** 2)
            prev = cur
        res = np.abs(z * np.exp(s * (1 + z) / (2 * (1 - z))) - mu)
    ok = np.isfinite(z) & (np.abs(z) < 1) & (res <= 1e-13 * np.maximum(np.abs(mu), 1e-300) + 1e-300)
    return z, ok


def f_inverse_many(t, alpha, lam, s_start=T_SMALL):
    """Preimage branch in Gamma or 1/Gamma for an array of lambda (no Sigma check).

    On the circle |lambda| = e^{(alpha - 1) t / 2} the preimage in the closed
    unit disk is returned. Points where the vectorised path fails are redone
    with the adaptive scalar continuation.
    """
    _check_t(t)
    _check_alpha(alpha)
    lam = np.asarray(lam, dtype=complex)
    flat = lam.ravel()
    if np.any(flat == 0):
        raise DomainError("lambda = 0 is excluded")
    s = alpha * t
    mu = flat * math.exp((1 - alpha) * t / 2)
    outer = np.abs(mu) > 1
    target = np.where(outer, 1 / np.conj(mu), mu)
    target = np.where(np.abs(target) >= 1, target * (1 - 1e-9), target)
    z, ok = _preimage_disk_many(s, target, s_start)
    tol, maxiter = DEFAULTS["newton_tol"], DEFAULTS["newton_maxiter"]
    for i in np.nonzero(~ok)[0]:
        z[i] = _preimage_disk(s, complex(target[i]), s_start, tol, maxiter)
    z = np.where(outer, 1 / np.conj(z), z)
    with np.errstate(all="ignore"):
        for _ in range(3):
            z = z - np.log(f_map(t, alpha, z) / flat) / f_log_derivative(t, alpha, z)
    return z.reshape(lam.shape)


# -- auxiliary positivity functions -------------------------------------------------

def g_func(t, alpha):
    alpha = np.asarray(alpha, dtype=float)
    return 2 * np.exp(t) - (1 + (1 - alpha) * t) * np.exp(alpha * t)


def psi_func(t, alpha, x):
    x = np.asarray(x, dtype=float)
    return (
        x
        - (x + 1 - alpha) * np.exp(2 * t * (1 - alpha))
        + (1 - alpha) * np.exp(t * (x + 2 * (1 - alpha)))
    )


def y2_sigma(t, alpha, x):
    """y^2 of the boundary of Sigma at w-plane abscissa x (negative off the curve)."""
    return _y2_delta(t, alpha, np.asarray(x, dtype=float) + 1.0)


def y2_inv_gamma_stated(t, alpha, x):
    """w-plane curve with exponent t (x + 2(1 - alpha)), used in the separation margin."""
    x = np.asarray(x, dtype=float)
    xi = x + 2 * (1 - alpha)
    with np.errstate(divide="ignore", invalid="ignore"):
        return 4 * alpha * (xi + alpha - 1) / np.expm1(t * xi) - (xi - 1) ** 2


def y2_inv_gamma(t, alpha, x):
    """w-plane y^2 of {|f_{alpha t,1}| = 1}, whose part with x < alpha - 1 is 1/dGamma."""
    return _gamma_y2(t, alpha, np.asarray(x, dtype=float) + 1 - alpha)


@dataclass(frozen=True)
class SeparationReport:
    t: float
    alpha: float
    stated_margin: float
    psi_min: float
    geometric_margin: float
    geometric_sign_changes: int
    n: int

    @property
    def passed(self) -> bool:
        return self.stated_margin > 0 and self.psi_min > 0 and self.geometric_sign_changes == 0


def separation_check(t, alpha, n=2000) -> SeparationReport:
    """Compare y^2 of dSigma against the 1/dGamma curve on x in (2(alpha-1), alpha-1].

    ``stated_margin`` is min(y2_sigma - y2_inv_gamma_stated) on that interval.
    ``geometric_margin`` is min |y2_sigma - y2_inv_gamma| over abscissas where
    both curves exist; the curves are disjoint iff that difference keeps one
    sign, counted in ``geometric_sign_changes``.
    """
    _check_t(t)
    _check_alpha(alpha)
    lo, hi = 2 * (alpha - 1), alpha - 1
    x = lo + (hi - lo) * (np.arange(1, n + 1) / n)
    stated = y2_sigma(t, alpha, x) - y2_inv_gamma_stated(t, alpha, x)
    psi = psi_func(t, alpha, x)

    roots = phi_roots(t, alpha)
    xl = roots.x_minus
    xg = np.linspace(xl, hi, 4 * n + 1)[1:-1]
    ys = y2_sigma(t, alpha, xg)
    yg = y2_inv_gamma(t, alpha, xg)
    both = (ys >= 0) & (yg >= 0)
    d = (ys - yg)[both]
    if d.size:
        signs = np.sign(d)
        changes = int(np.count_nonzero(signs[1:] != signs[:-1]))
        gm = float(np.min(np.abs(d)))
    else:
        changes, gm = 0, math.inf
    return SeparationReport(t, alpha, float(np.min(stated)), float(np.min(psi)), gm, changes, n)


# -- regularity ------------------------------------------------------------------------

def characteristic_map(t, alpha, lambda0, x0):
    """V(lambda0, x0) = (lambda(t), x(t)) from the closed forms, projection measure."""
    from . import closed_form as cf
    from .spectral import InitialData, projection_measure

    mu = projection_measure(alpha)
    init = InitialData(lambda0, x0)
    cc = cf.curve_constants(mu, init)
    lam_t = complex(cf.lambda_curve(cc, t))
    x_t = float(init.x0 * (1 - cc.px0 * cf.integral_lambda_sq(cc, t)) ** 2)
    return lam_t, x_t


def jacobian_probe(t, alpha, lambda0, h=1e-6):
    """Finite-difference Jacobian of V at (lambda0, 0) in real coordinates (a0, b0, x0).

    Returns ``(J, dxdx0)`` where ``dxdx0`` is the closed-form
    (1 - p_x(0) int_0^t |lambda|^2)^2.
    """
    from . import closed_form as cf
    from .spectral import InitialData, projection_measure

    lambda0 = complex(lambda0)
    J = np.empty((3, 3))
    dirs = [(h, 0.0), (1j * h, 0.0), (0.0, h)]
    for j, (dl, dx) in enumerate(dirs):
        lp, xp = characteristic_map(t, alpha, lambda0 + dl, dx)
        lm, xm = characteristic_map(t, alpha, lambda0 - dl, -dx)
        J[:, j] = [(lp.real - lm.real) / (2 * h), (lp.imag - lm.imag) / (2 * h), (xp - xm) / (2 * h)]
    mu = projection_measure(alpha)
    cc = cf.curve_constants(mu, InitialData(lambda0, 0.0))
    dxdx0 = float((1 - cc.px0 * cf.integral_lambda_sq(cc, t)) ** 2)
    return J, dxdx0
