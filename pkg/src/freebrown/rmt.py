"""Random-matrix model of Y_t P.

Y_t is simulated as a product of Cayley factors

    C = (I - i dX / 2)^{-1} (I + i dX / 2),

the unitary retraction of the Euler increment I + i dX - dt/2 I, where dX is
a Hermitian Gaussian matrix with E|dX_jk|^2 = dt / n. The factor agrees
with exp(i dX) through second order, so the drift -Y dt / 2 is reproduced.
Each replicate draws from its own stream seeded by (seed, replicate), which
makes results independent of scheduling.
"""
from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy import linalg
from threadpoolctl import threadpool_limits

from . import region
from .defaults import MARGIN
from .spectral import DomainError


class RetractionError(RuntimeError):
    """The unitary retraction did not reach the requested tolerance."""


@dataclass(frozen=True)
class SimConfig:
    n: int
    t: float
    steps: int
    seed: int = 0
    reps: int = 1

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("matrix size n must be at least 2")
        if not self.t >= 0:
            raise DomainError("t must be non-negative")
        if self.steps < 1 or self.reps < 1:
            raise DomainError("steps and reps must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")

    @property
    def dt(self) -> float:
        return self.t / self.steps

    def drift_estimate(self) -> float:
        """Typical max-entry defect of M*M - I for the raw Euler increment M."""
        return 0.25 * self.dt**2 + 5.0 * self.dt / math.sqrt(self.n)


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("BROWN_THREADS", "1")))
    except ValueError:
        return 1


def _rng(cfg: SimConfig, rep: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([cfg.seed, rep]))


def hermitian_increment(rng: np.random.Generator, n: int, dt: float) -> np.ndarray:
    """Hermitian dX with E|dX_jk|^2 = dt/n and real diagonal of variance dt/n.

    Exactly n^2 standard normals are drawn: n for the diagonal, then the real
    and imaginary parts of the strict upper triangle.
    """
    iu = _triu(n)
    m = iu[0].size
    g = rng.standard_normal(n * n)
    X = np.zeros((n, n), dtype=complex)
    X[iu] = math.sqrt(dt / (2 * n)) * (g[n:n + m] + 1j * g[n + m:])
    X = X + X.conj().T
    X[np.diag_indices(n)] = math.sqrt(dt / n) * g[:n]
    return X


_TRIU = {}


def _triu(n):
    if n not in _TRIU:
        _TRIU[n] = np.triu_indices(n, 1)
    return _TRIU[n]


def cayley(X: np.ndarray) -> np.ndarray:
    n = X.shape[0]
    I = np.eye(n)
    return linalg.solve(I - 0.5j * X, I + 0.5j * X, check_finite=False)


def cayley_update(Y: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Y C with C the Cayley factor, as 2 Y (I - iX/2)^{-1} - Y."""
    n = X.shape[0]
    Z = linalg.solve(np.eye(n) - 0.5j * X.T, Y.T, check_finite=False).T
    return 2 * Z - Y


def unitarity_defect(U: np.ndarray) -> float:
    return float(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))))


def polar_retract(U: np.ndarray, tol: float = 1e-13, maxiter: int = 50) -> np.ndarray:
    """Unitary polar factor by Newton-Schulz iteration U <- U (3I - U*U) / 2."""
    I = np.eye(U.shape[0])
    for _ in range(maxiter):
        G = U.conj().T @ U
        err = float(np.max(np.abs(G - I)))
        if err <= tol:
            return U
        if err > 0.5:
            raise RetractionError(f"defect {err:.3g} is outside the Newton-Schulz basin")
        U = U @ (1.5 * I - 0.5 * G)
    raise RetractionError("Newton-Schulz retraction did not converge")


def ubm_path(cfg: SimConfig, rep: int):
    """Yield (k, t_k, Y_{t_k}) for k = 0..steps along one replicate.

    The yielded array is updated in place on the next step; copy it if kept.
    """
    rng = _rng(cfg, rep)
    n, dt = cfg.n, cfg.dt
    Y = np.eye(n, dtype=complex)
    yield 0, 0.0, Y
    for k in range(1, cfg.steps + 1):
        Y = cayley_update(Y, hermitian_increment(rng, n, dt))
        yield k, k * dt, Y


def _simulate_one(cfg: SimConfig, rep: int) -> np.ndarray:
    Y = None
    for _, _, Y in ubm_path(cfg, rep):
        pass
    return polar_retract(Y)


def _map_reps(fn, cfg: SimConfig):
    workers = _workers()
    if workers == 1:
        return [fn(cfg, r) for r in range(cfg.reps)]
    with threadpool_limits(limits=1), ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda r: fn(cfg, r), range(cfg.reps)))


def simulate_ubm(cfg: SimConfig) -> np.ndarray:
    """Samples of Y_t, shape (reps, n, n), each unitary to 1e-10 or better."""
    if cfg.t == 0:
        return np.broadcast_to(np.eye(cfg.n, dtype=complex), (cfg.reps, cfg.n, cfg.n)).copy()
    out = np.stack(_map_reps(_simulate_one, cfg))
    worst = max(unitarity_defect(U) for U in out)
    if worst > 1e-10:
        raise RetractionError(f"unitarity defect {worst:.3g} after retraction")
    return out


def euler_step_defect(cfg: SimConfig, rep: int = 0) -> float:
    """Measured max-entry |M*M - I| of one raw Euler increment M = I + i dX - dt/2."""
    X = hermitian_increment(_rng(cfg, rep), cfg.n, cfg.dt)
    M = np.eye(cfg.n) + 1j * X - 0.5 * cfg.dt * np.eye(cfg.n)
    return unitarity_defect(M)


def projection_rank(n: int, alpha: float) -> int:
    return int(math.floor(alpha * n))


def times_projection(Y: np.ndarray, rank: int) -> np.ndarray:
    """Y diag(1^rank, 0^(n-rank))."""
    YP = np.zeros_like(Y)
    YP[..., :, :rank] = Y[..., :, :rank]
    return YP


@dataclass(frozen=True, eq=False)
class EigenCloud:
    eigenvalues: np.ndarray  # complex, length n * reps, replicate-major
    replicate: np.ndarray
    config: SimConfig
    alpha: float
    alpha_rank: int
    zero_counts: np.ndarray
    failed: tuple = ()

    def nonzero(self, tol=1e-8) -> np.ndarray:
        return self.eigenvalues[np.abs(self.eigenvalues) > tol]

    def inside_fraction(self, margin=MARGIN, n_samples=8192) -> float:
        """Fraction of nonzero eigenvalues inside Omega dilated by ``margin``."""
        lam = self.nonzero()
        if lam.size == 0:
            return math.nan
        reg = region.omega_region(self.config.t, self.alpha, n_samples)
        return float(np.mean(reg.classify(lam, margin=margin) == 1))


def eigencloud(cfg: SimConfig, alpha: float, samples: np.ndarray | None = None) -> EigenCloud:
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")
    Ys = simulate_ubm(cfg) if samples is None else samples
    rank = projection_rank(cfg.n, alpha)
    vals, reps, zeros, failed = [], [], [], []
    for r, Y in enumerate(Ys):
        try:
            ev = linalg.eigvals(times_projection(Y, rank), check_finite=False)
        except linalg.LinAlgError:
            failed.append(r)
            continue
        ev = ev[np.lexsort((ev.imag, ev.real))]
        vals.append(ev)
        reps.append(np.full(ev.size, r))
        zeros.append(int(np.count_nonzero(np.abs(ev) <= 1e-8)))
    return EigenCloud(
        np.concatenate(vals) if vals else np.empty(0, complex),
        np.concatenate(reps) if reps else np.empty(0, int),
        cfg,
        alpha,
        rank,
        np.array(zeros),
        tuple(failed),
    )


def empirical_S(cfg: SimConfig, alpha: float, lam: complex, x: float, samples: np.ndarray | None = None):
    """tau(log(|Y P - lambda|^2 + x)) averaged over replicates.

    Uses squared singular values of Y P - lambda. Returns ``(mean, stderr)``;
    the standard error is zero for a single replicate.
    """
    if x < 0:
        raise DomainError("x must be non-negative")
    Ys = simulate_ubm(cfg) if samples is None else samples
    rank = projection_rank(cfg.n, alpha)
    lam = complex(lam)
    per = []
    for Y in Ys:
        A = times_projection(Y, rank) - lam * np.eye(cfg.n)
        sv = linalg.svdvals(A, check_finite=False)
        arg = sv * sv + x
        if np.any(arg <= 0):
            raise DomainError(f"lambda = {lam} collides with the spectrum at x = 0")
        per.append(float(np.mean(np.log(arg))))
    per = np.array(per)
    se = float(per.std(ddof=1) / math.sqrt(per.size)) if per.size > 1 else 0.0
    return float(per.mean()), se


# -- moment flow -------------------------------------------------------------------

def _moments(Y, rank, lam):
    """Empirical traces needed for the n = 1, 2 moment identities."""
    n = Y.shape[0]
    lam = complex(lam)
    YP = times_projection(Y, rank)
    A = YP - lam * np.eye(n)
    a = A.conj().T @ A
    tr_at = np.trace(YP) / n
    tr_a = np.trace(a).real / n
    tr_a2 = float(np.sum(np.abs(a) ** 2)) / n  # a is Hermitian
    tr_a_at = np.sum(a.T * YP) / n
    tr_h2 = rank / n
    rhs1 = (np.conj(lam) * tr_at).real
    rhs2 = (
        2 * (np.conj(lam) * tr_a_at).real
        + 2 * abs(lam) ** 2 * tr_h2
        - 2 * (np.conj(lam) ** 2 * tr_at**2).real
    )
    return np.array([tr_a, tr_a2]), np.array([rhs1, rhs2])


@dataclass(frozen=True)
class MomentFlowResult:
    lam: complex
    n_moment: int
    t: float
    delta: float
    residual: float
    stderr: float
    derivative: float

    @property
    def z_score(self) -> float:
        return abs(self.residual) / self.stderr if self.stderr > 0 else math.inf


def _log_det(Y, rank, lam, x):
    A = times_projection(Y, rank) - lam * np.eye(Y.shape[0])
    sv = linalg.svdvals(A, check_finite=False)
    return float(np.mean(np.log(sv * sv + x)))


def moment_flow_path(cfg: SimConfig, alpha: float, lams, t_center: float, delta: float, s_points=None):
    """Per-replicate moment-flow residuals on one shared path.

    For each replicate, the centred difference of tau(a^n) over
    [t_center - delta, t_center + delta] is compared with the left Riemann
    sum of the right-hand side along the same path, divided by 2 delta.
    Returns arrays ``res[rep, lam, n-1]`` and ``deriv[rep, lam, n-1]``.
    With ``s_points``, a list of (lambda, x), the empirical S at the start,
    middle and end of the window is returned as a third array
    ``S[rep, point, 3]``.
    """
    dt = cfg.dt
    k0 = int(round((t_center - delta) / dt))
    k1 = int(round((t_center + delta) / dt))
    if k0 < 0 or k1 > cfg.steps or k1 <= k0:
        raise DomainError("the difference window must lie inside the simulated path")
    rank = projection_rank(cfg.n, alpha)
    lams = [complex(l) for l in lams]
    pts = [(complex(l), float(x)) for l, x in (s_points or ())]
    k_mid = (k0 + k1) // 2
    if pts and 2 * k_mid != k0 + k1:
        raise DomainError("the window must span an even number of steps to record S")

    def one(cfg_, rep):
        integ = np.zeros((len(lams), 2))
        m0 = m1 = None
        S = np.zeros((len(pts), 3))
        for k, _, Y in ubm_path(cfg_, rep):
            if pts and k in (k0, k_mid, k1):
                S[:, (k0, k_mid, k1).index(k)] = [_log_det(Y, rank, l, x) for l, x in pts]
            if k < k0:
                continue
            ms, rs = zip(*(_moments(Y, rank, l) for l in lams))
            ms, rs = np.array(ms), np.array(rs)
            if k == k0:
                m0 = ms
            if k == k1:
                m1 = ms
                break
            integ += rs * dt
        span = (k1 - k0) * dt
        return (m1 - m0 - integ) / span, (m1 - m0) / span, S

    out = _map_reps(one, SimConfig(cfg.n, k1 * dt, k1, cfg.seed, cfg.reps))
    res = np.stack([o[0] for o in out])
    der = np.stack([o[1] for o in out])
    if s_points is None:
        return res, der
    return res, der, np.stack([o[2] for o in out])


def moment_flow_check(cfg: SimConfig, alpha: float, lam, n_moment: int, t_center=None, delta=None) -> MomentFlowResult:
    """Residual of the n-th moment identity with its Monte Carlo standard error."""
    if n_moment not in (1, 2):
        raise DomainError("n_moment must be 1 or 2")
    t_center = cfg.t / 2 if t_center is None else t_center
    delta = cfg.t / 4 if delta is None else delta
    res, der = moment_flow_path(cfg, alpha, [lam], t_center, delta)
    r = res[:, 0, n_moment - 1]
    se = float(r.std(ddof=1) / math.sqrt(r.size)) if r.size > 1 else math.inf
    return MomentFlowResult(complex(lam), n_moment, t_center, delta, float(r.mean()), se, float(der[:, 0, n_moment - 1].mean()))


def S_along_path(cfg: SimConfig, alpha: float, lam: complex, x: float, times):
    """Empirical S at several times of the same paths; returns (mean[times], per_rep[rep, times])."""
    rank = projection_rank(cfg.n, alpha)
    ks = [int(round(t / cfg.dt)) for t in times]
    lam = complex(lam)

    def one(cfg_, rep):
        vals = []
        for k, _, Y in ubm_path(cfg_, rep):
            if k in ks:
                vals.append(_log_det(Y, rank, lam, x))
            if k >= max(ks):
                break
        return vals

    per = np.array(_map_reps(one, SimConfig(cfg.n, max(ks) * cfg.dt, max(ks), cfg.seed, cfg.reps)))
    return per.mean(axis=0), per


# -- output ----------------------------------------------------------------------

def write_eigencloud_csv(path, cloud: EigenCloud):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["re", "im", "replicate"])
        for z, r in zip(cloud.eigenvalues, cloud.replicate):
            w.writerow(["%.17g" % z.real, "%.17g" % z.imag, int(r)])


def cloud_stats(cloud: EigenCloud, margin=MARGIN) -> dict:
    cfg = cloud.config
    return {
        "n": cfg.n,
        "alpha": cloud.alpha,
        "t": cfg.t,
        "inside_fraction": cloud.inside_fraction(margin),
        "margin": margin,
        "seed": cfg.seed,
        "reps": cfg.reps,
        "steps": cfg.steps,
        "rank": cloud.alpha_rank,
        "min_zero_count": int(cloud.zero_counts.min()) if cloud.zero_counts.size else 0,
        "failed_replicates": list(cloud.failed),
    }


def write_stats_json(path, stats: dict):
    with open(path, "w") as fh:
        json.dump(stats, fh, indent=2, sort_keys=True)
        fh.write("\n")


def config_dict(cfg: SimConfig) -> dict:
    return asdict(cfg)
