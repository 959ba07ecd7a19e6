"""The log-potential s_t of the Brown measure of Y_t P outside Omega.

For lambda outside the closure of Omega_{t,alpha}, with lambda0 = f^{-1}(lambda),

    s_t(lambda) = alpha log|1 - lambda0|^2 + (1 - alpha) log|lambda0|^2
                  + (Re(2 alpha / (1 - lambda0)) - Re(2 alpha^2 / (1 - lambda0)^2) - 1) t / 2
                  + log|lambda / lambda0|.

The Fuglede-Kadison log-determinant of Y_t P - lambda is s_t / 2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import closed_form as cf
from . import region
from .defaults import DEFAULTS, FD_STEP
from .spectral import DomainError, InitialData, projection_measure


def _s_from_preimage(t, alpha, lam, z):
    lam = np.asarray(lam, dtype=complex)
    z = np.asarray(z, dtype=complex)
    a = alpha / (1 - z)
    return (
        alpha * np.log(np.abs(1 - z) ** 2)
        + (1 - alpha) * np.log(np.abs(z) ** 2)
        + 0.5 * (2 * a.real - 2 * (a * a).real - 1) * t
        + np.log(np.abs(lam)) - np.log(np.abs(z))
    )


def holomorphic_part(t, alpha, z):
    """G with Re G = s_t - (1 - alpha) log|lambda0|^2 - alpha log|1 - lambda0|^2."""
    z = np.asarray(z, dtype=complex)
    a = alpha / (1 - z)
    return t * (a - a * a - 0.5 + (2 * alpha - 1 + z) / (2 * (1 - z)))


def s_t_pair(t, alpha, lam):
    """s_t from every preimage f^{-1}(lambda); two values on the exceptional circle."""
    zs = region.f_inverse(t, alpha, lam)
    return [float(_s_from_preimage(t, alpha, lam, z)) for z in zs]


def s_t(t, alpha, lam):
    """s_t(lambda) for lambda outside the closure of Omega, lambda != 0.

    On the circle |lambda| = e^{(alpha - 1) t / 2} the values from both
    preimages are averaged.
    """
    vals = s_t_pair(t, alpha, lam)
    return float(np.mean(vals))


def fk_log_det(t, alpha, lam):
    """log Delta(Y_t P - lambda) = s_t(lambda) / 2."""
    return 0.5 * s_t(t, alpha, lam)


def s_t_many(t, alpha, lam):
    """Vectorised s_t; no check that the points lie outside Omega."""
    lam = np.asarray(lam, dtype=complex)
    z = region.f_inverse_many(t, alpha, lam)
    return _s_from_preimage(t, alpha, lam, z), z


def S0(mu, lam, x):
    """tau(log(|h - lambda|^2 + x))."""
    return cf.S0(mu, lam, x)


def S0_gradient(mu, lam, x):
    """(dS0/da, dS0/db, dS0/dx), equal to the initial momenta (p_a, p_b, p_x)."""
    lam = complex(lam)
    den = (mu.locations - lam.real) ** 2 + lam.imag**2 + x
    if np.any(den <= 0):
        raise DomainError("log argument is not positive at some atom")
    w = mu.weights
    return (
        float(np.dot(w, -2 * (mu.locations - lam.real) / den)),
        float(np.dot(w, 2 * lam.imag / den)),
        float(np.dot(w, 1 / den)),
    )


# -- fields --------------------------------------------------------------------

MASK_CODES = {"outside": 0, "inside": 1, "boundary": 2, "singular": 3}


@dataclass(frozen=True, eq=False)
class Grid:
    re: np.ndarray
    im: np.ndarray

    @classmethod
    def parse(cls, spec: str) -> "Grid":
        """``re_lo:re_hi:n,im_lo:im_hi:n``."""
        try:
            rpart, ipart = spec.split(",")
            rl, rh, rn = rpart.split(":")
            il, ih, inn = ipart.split(":")
            g = cls.uniform(float(rl), float(rh), int(rn), float(il), float(ih), int(inn))
        except ValueError as exc:
            raise DomainError(f"bad grid spec {spec!r}: {exc}") from None
        return g

    @classmethod
    def uniform(cls, re_lo, re_hi, n_re, im_lo, im_hi, n_im) -> "Grid":
        if n_re < 3 or n_im < 3 or not re_hi > re_lo or not im_hi > im_lo:
            raise DomainError("grid needs at least 3 nodes per axis and increasing bounds")
        return cls(np.linspace(re_lo, re_hi, n_re), np.linspace(im_lo, im_hi, n_im))

    @property
    def shape(self):
        return self.im.size, self.re.size

    @property
    def nodes(self) -> np.ndarray:
        """Complex nodes, rows indexed by the imaginary part."""
        return self.re[None, :] + 1j * self.im[:, None]

    @property
    def h(self) -> float:
        hx = (self.re[-1] - self.re[0]) / (self.re.size - 1)
        hy = (self.im[-1] - self.im[0]) / (self.im.size - 1)
        if not math.isclose(hx, hy, rel_tol=1e-9):
            raise DomainError("the 5-point stencil needs equal spacing on both axes")
        return hx


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid
    values: np.ndarray
    laplacian: np.ndarray
    mask: np.ndarray  # codes from MASK_CODES
    t: float
    alpha: float

    @property
    def outside(self) -> np.ndarray:
        return self.mask == MASK_CODES["outside"]

    def max_abs_laplacian(self) -> float:
        lap = self.laplacian[self.outside]
        return float(np.max(np.abs(lap))) if lap.size else math.nan


def classify_nodes(t, alpha, nodes, band=None, singular_radius=None, n_samples=8192):
    """Mask codes for the nodes; stencil arms are not considered here."""
    band = DEFAULTS["boundary_band"] if band is None else band
    rad = DEFAULTS["singular_radius"] if singular_radius is None else singular_radius
    reg = region.omega_region(t, alpha, n_samples)
    cls = reg.classify(nodes.ravel(), margin=0.0, band=band).reshape(nodes.shape)
    mask = np.full(nodes.shape, MASK_CODES["outside"], dtype=np.int8)
    mask[cls == 1] = MASK_CODES["inside"]
    mask[cls == 0] = MASK_CODES["boundary"]
    mask[np.abs(nodes) < rad] = MASK_CODES["singular"]
    return mask


def laplacian_field(t, alpha, grid: Grid, band=None, singular_radius=None) -> ScalarField:
    """s_t and its 5-point Laplacian on the grid.

    Nodes inside Omega, within ``band`` of its boundary or within
    ``singular_radius`` of 0 are masked, as are nodes whose stencil arms reach
    a masked node or leave the grid.
    """
    nodes = grid.nodes
    h = grid.h
    mask = classify_nodes(t, alpha, nodes, band, singular_radius)
    vals = np.full(nodes.shape, np.nan)
    # s_t is evaluated wherever the node is off the closure of Omega and nonzero
    reg = region.omega_region(t, alpha, 8192)
    sd = reg.signed_distance(nodes.ravel()).reshape(nodes.shape)
    ev = (sd > 0) & (nodes != 0)
    if np.any(ev):
        v, _ = s_t_many(t, alpha, nodes[ev])
        vals[ev] = v
    lap = np.full(nodes.shape, np.nan)
    lap[1:-1, 1:-1] = (
        vals[1:-1, 2:] + vals[1:-1, :-2] + vals[2:, 1:-1] + vals[:-2, 1:-1] - 4 * vals[1:-1, 1:-1]
    ) / (h * h)
    good = mask == MASK_CODES["outside"]
    arms = np.zeros_like(good)
    arms[1:-1, 1:-1] = (
        good[1:-1, 2:] & good[1:-1, :-2] & good[2:, 1:-1] & good[:-2, 1:-1] & good[1:-1, 1:-1]
    )
    mask = np.where(good & ~arms, MASK_CODES["boundary"], mask).astype(np.int8)
    lap = np.where(mask == MASK_CODES["outside"], lap, np.nan)
    return ScalarField(grid, vals, lap, mask, t, alpha)


def harmonicity_study(t, alpha, box=3.0, n=101, band=None, singular_radius=None):
    """Max |Laplacian| on the coarse grid and on the halved mesh, over common outside nodes.

    Returns ``(h, max_coarse, max_fine, ratio)``.
    """
    coarse = laplacian_field(t, alpha, Grid.uniform(-box, box, n, -box, box, n), band, singular_radius)
    fine = laplacian_field(t, alpha, Grid.uniform(-box, box, 2 * n - 1, -box, box, 2 * n - 1), band, singular_radius)
    sub = fine.laplacian[::2, ::2]
    common = coarse.outside & (fine.mask[::2, ::2] == MASK_CODES["outside"])
    mc = float(np.max(np.abs(coarse.laplacian[common])))
    mf = float(np.max(np.abs(sub[common])))
    return coarse.grid.h, mc, mf, mc / mf


def cauchy_riemann_residual(t, alpha, lam, h=FD_STEP):
    """Check that s_t minus the log terms is Re G with G holomorphic.

    Returns ``(decomposition_error, cr_residual)`` where the first compares
    the real part of the closed-form G with s_t minus the log terms, and the
    second is the max centred-difference Cauchy-Riemann defect of G as a
    function of lambda.
    """
    lam = np.asarray(lam, dtype=complex).ravel()
    s, z = s_t_many(t, alpha, lam)
    G = holomorphic_part(t, alpha, z)
    dec = s - (1 - alpha) * np.log(np.abs(z) ** 2) - alpha * np.log(np.abs(1 - z) ** 2) - G.real
    Gx = (holomorphic_part(t, alpha, region.f_inverse_many(t, alpha, lam + h))
          - holomorphic_part(t, alpha, region.f_inverse_many(t, alpha, lam - h))) / (2 * h)
    Gy = (holomorphic_part(t, alpha, region.f_inverse_many(t, alpha, lam + 1j * h))
          - holomorphic_part(t, alpha, region.f_inverse_many(t, alpha, lam - 1j * h))) / (2 * h)
    cr = np.maximum(np.abs(Gx.real - Gy.imag), np.abs(Gx.imag + Gy.real))
    return float(np.max(np.abs(dec))), float(np.max(cr))


# -- PDE residual -----------------------------------------------------------------

def pde_rhs(lam, x, grad):
    """x |lambda|^2 S_x^2 - a S_a / 2 - b S_b / 2 + a b S_a S_b + (a^2 - b^2)(S_a^2 - S_b^2) / 4."""
    lam = complex(lam)
    a, b = lam.real, lam.imag
    Sa, Sb, Sx = grad
    return (
        x * abs(lam) ** 2 * Sx**2
        - 0.5 * a * Sa
        - 0.5 * b * Sb
        + a * b * Sa * Sb
        + 0.25 * (a * a - b * b) * (Sa * Sa - Sb * Sb)
    )


def spatial_gradient(evaluator, t, lam, x, h=FD_STEP):
    lam = complex(lam)
    Sa = (evaluator(t, lam + h, x) - evaluator(t, lam - h, x)) / (2 * h)
    Sb = (evaluator(t, lam + 1j * h, x) - evaluator(t, lam - 1j * h, x)) / (2 * h)
    Sx = (evaluator(t, lam, x + h) - evaluator(t, lam, x - h)) / (2 * h)
    return Sa, Sb, Sx


def pde_residual(t, alpha, lam, x, evaluator, steps=None, h=FD_STEP, grad=None, dSdt=None):
    """|dS/dt - RHS| at (t, lambda, x) with centred differences.

    ``evaluator(t, lam, x)`` returns S. ``grad`` may supply exact spatial
    partials and ``dSdt`` an externally computed time derivative; ``steps``
    sets the time step to h / steps when given. The time difference is
    one-sided at t = 0.
    """
    if not x > 0:
        raise DomainError("the PDE holds for x > 0")
    if grad is None:
        grad = spatial_gradient(evaluator, t, lam, x, h)
    if dSdt is None:
        ht = h if steps is None else h / steps
        if t - ht < 0:
            dSdt = (evaluator(t + ht, lam, x) - evaluator(t, lam, x)) / ht
        else:
            dSdt = (evaluator(t + ht, lam, x) - evaluator(t - ht, lam, x)) / (2 * ht)
    return abs(dSdt - pde_rhs(lam, x, grad))


class HJEvaluator:
    """S(t, lambda, x) for the projection measure through the characteristics.

    The starting point (lambda0, x0) with V_t(lambda0, x0) = (lambda, x) is
    found by Newton iteration on the closed forms, seeded by
    lambda0 = f^{-1}(lambda) and x0 = x / (1 - p_x(0) int_0^t |lambda|^2)^2.
    """

    def __init__(self, alpha, tol=1e-13, maxiter=40):
        self.alpha = alpha
        self.mu = projection_measure(alpha)
        self.tol = tol
        self.maxiter = maxiter

    def _V(self, t, v):
        init = InitialData(complex(v[0], v[1]), v[2])
        cc = cf.curve_constants(self.mu, init)
        lam = complex(cf.lambda_curve(cc, t))
        x = float(init.x0 * (1 - cc.px0 * cf.integral_lambda_sq(cc, t)) ** 2)
        return np.array([lam.real, lam.imag, x])

    def solve(self, t, lam, x):
        lam = complex(lam)
        z0 = region.f_inverse(t, self.alpha, lam, check_outside=False)[0]
        cc = cf.curve_constants(self.mu, InitialData(z0, 0.0))
        g = float((1 - cc.px0 * cf.integral_lambda_sq(cc, t)) ** 2)
        v = np.array([z0.real, z0.imag, x / g])
        target = np.array([lam.real, lam.imag, x])
        for _ in range(self.maxiter):
            F = self._V(t, v) - target
            if np.max(np.abs(F)) <= self.tol * max(1.0, abs(lam)):
                return v
            J = np.empty((3, 3))
            e = 1e-7
            for j in range(3):
                dv = np.zeros(3)
                dv[j] = e * max(1.0, abs(v[j]))
                J[:, j] = (self._V(t, v + dv) - self._V(t, v - dv)) / (2 * dv[j])
            v = v - np.linalg.solve(J, F)
        raise DomainError(f"no characteristic reaches (lambda={lam}, x={x}) at t={t}")

    def __call__(self, t, lam, x):
        if t == 0:
            return S0(self.mu, lam, x)
        v = self.solve(t, lam, x)
        return cf.hj_value(cf.HJInputs(self.mu, complex(v[0], v[1]), v[2], t))
