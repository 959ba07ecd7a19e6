"""Invariant suites run by ``freebrown check``.

Every suite takes a ``numpy.random.Generator`` and returns a
:class:`SuiteResult`; the ``fast`` level skips the random-matrix suites.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import brown_eval as be
from . import closed_form as cf
from . import hamiltonian as ham
from . import region
from . import rmt
from .defaults import TOL_CONS
from .spectral import InitialData, projection_measure

REGION_PARAMS = [(1.0, 0.8), (2.0, 0.3), (3.0, 0.7), (3.2, 0.8), (4.0, 0.8)]


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def as_dict(self):
        return {"name": self.name, "passed": bool(self.passed), "seconds": round(self.seconds, 3), "detail": self.detail}


def random_initial_conditions(rng, count, alphas=(0.3, 0.5, 0.8), r_range=(0.1, 3.0), x_range=(0.0, 1.0)):
    """(alpha, InitialData) pairs with |lambda0| and x0 drawn uniformly."""
    out = []
    for i in range(count):
        alpha = alphas[i % len(alphas)]
        r = rng.uniform(*r_range)
        th = rng.uniform(0, 2 * np.pi)
        x0 = rng.uniform(*x_range)
        out.append((alpha, InitialData(r * np.exp(1j * th), x0)))
    return out


def characteristic_comparison(alpha, init, step=1e-3):
    """Drift of the conserved quantities and closed-form deviation on [0, min(5, 0.9 t*)]."""
    mu = projection_measure(alpha)
    ts = cf.blowup_time(mu, init)
    u_max = min(5.0, 0.9 * ts)
    traj = ham.characteristic(mu, init, u_max, step=step)
    cc = cf.curve_constants(mu, init)
    theta = np.unwrap(np.angle(traj.lam))
    dev = max(
        float(np.max(np.abs(cf.radial_solution(cc, traj.u) - np.abs(traj.lam)))),
        float(np.max(np.abs(cf.angular_solution(cc.K2, cc.theta0, traj.u) - theta))),
        float(np.max(np.abs(cf.x_curve(mu, init, traj.u) - traj.x))),
    )
    return max(traj.drift().values()), dev, traj


def suite_characteristics(rng, count=50):
    worst_drift = worst_dev = 0.0
    for alpha, init in random_initial_conditions(rng, count):
        d, dev, _ = characteristic_comparison(alpha, init)
        worst_drift = max(worst_drift, d)
        worst_dev = max(worst_dev, dev)
    return SuiteResult(
        "characteristics",
        worst_drift < TOL_CONS and worst_dev <= 1e-6,
        {"max_drift": worst_drift, "max_closed_form_deviation": worst_dev, "cases": count},
    )


def blowup_cases(rng, count):
    """Initial data in the regime t1 >= t* with a finite blow-up time."""
    cases = []
    while len(cases) < count:
        alpha, init = random_initial_conditions(rng, 1, x_range=(0.001, 1.0))[0]
        mu = projection_measure(alpha)
        cc = cf.curve_constants(mu, init)
        if not cf.regime_holds(cc):
            continue
        ts = cf.blowup_time(mu, init, fallback=False)
        if math.isfinite(ts) and ts < 20:
            cases.append((alpha, init, ts))
    return cases


def suite_blowup(rng, count=20):
    worst = 0.0
    worst_x = 0.0
    for alpha, init, ts in blowup_cases(rng, count):
        mu = projection_measure(alpha)
        worst = max(worst, abs(cf.ode_blowup_time(mu, init, u_max=ts + 1.0) - ts))
        worst_x = max(worst_x, float(cf.x_curve(mu, init, ts)))
    lim = 0.0
    for alpha, init in random_initial_conditions(rng, 20):
        mu = projection_measure(alpha)
        T = float(region.T_alpha(alpha, init.lambda0))
        if not math.isfinite(T) or T > 50:
            continue
        t_small = cf.blowup_time(mu, InitialData(init.lambda0, 1e-8))
        lim = max(lim, abs(t_small - T))
    return SuiteResult(
        "blowup",
        worst <= 1e-4 and lim <= 1e-6 and worst_x <= 1e-9,
        {"max_closed_vs_ode": worst, "max_limit_vs_T_alpha": lim, "max_x_at_tstar": worst_x},
    )


def suite_transport(rng, count=5):
    """dS/du along integrated trajectories equals P.dJ/du - H0."""
    worst = 0.0
    for alpha, init in random_initial_conditions(rng, count, x_range=(0.05, 1.0)):
        mu = projection_measure(alpha)
        ts = cf.blowup_time(mu, init)
        traj = ham.characteristic(mu, init, min(2.0, 0.5 * ts))
        n = traj.uniform_prefix()
        cc = cf.curve_constants(mu, init)
        h = traj.step
        ks = np.linspace(1, n - 2, 7).astype(int)
        for k in ks:
            sp = cf.hj_value(cf.HJInputs(mu, init.lambda0, init.x0, traj.u[k + 1]), t_star=ts)
            sm = cf.hj_value(cf.HJInputs(mu, init.lambda0, init.x0, traj.u[k - 1]), t_star=ts)
            p = traj.point(k)
            pdj = 2 * cc.H0 - 0.5 * (p.a * p.p_a + p.b * p.p_b)
            worst = max(worst, abs((sp - sm) / (2 * h) - (pdj - cc.H0)))
    return SuiteResult("transport", worst <= 1e-6, {"max_residual": worst})


def suite_region(rng, samples=2048):
    detail = {}
    ok = True
    for t, alpha in REGION_PARAMS:
        sig = region.boundary_sigma(t, alpha, samples)
        om = region.boundary_omega(t, alpha, samples)
        res = float(np.max(np.abs(region.modulus_residual(t, alpha, sig.points))))
        keep = ~sig.exceptional
        terr = float(np.max(np.abs(region.T_alpha(alpha, sig.points[keep]) - t)))
        si = sig.self_intersections() + om.self_intersections()
        detail[f"{t},{alpha}"] = {"modulus": res, "T_alpha": terr, "self_intersections": si}
        ok &= res <= 1e-9 and terr <= 1e-8 and si == 0
    circ = region.circle_points(0.5, 100)
    circ = circ[(np.abs(circ - 1) > 1e-9) & (np.abs(circ) > 1e-9)]
    circle_res = max(float(np.max(np.abs(region.modulus_residual(t, 0.5, circ)))) for t in (0.5, 1.0, 3.0))
    detail["circle_identity"] = circle_res
    ok &= circle_res <= 1e-9
    pts = rng.uniform(-3, 3, 400) + 1j * rng.uniform(-3, 3, 400)
    ins = [np.asarray(region.T_alpha(0.5, pts)) < t for t in (0.5, 1.0, 2.0, 4.0)]
    nested = all(bool(np.all(~a | b)) for a, b in zip(ins, ins[1:]))
    detail["nesting"] = nested
    return SuiteResult("region", ok and nested, detail)


def suite_positivity(rng, count=100, points=1000):
    g_min = psi_min = sep_min = math.inf
    a_grid = np.linspace(0, 1, points)
    for _ in range(count):
        t = rng.uniform(1e-3, 10)
        alpha = rng.uniform(0.01, 0.99)
        g_min = min(g_min, float(np.min(region.g_func(t, a_grid))))
        x = np.linspace(2 * (alpha - 1), alpha - 1, points)
        psi_min = min(psi_min, float(np.min(region.psi_func(t, alpha, x))))
        rep = region.separation_check(t, alpha, 400)
        sep_min = min(sep_min, rep.stated_margin)
        if rep.geometric_sign_changes:
            sep_min = -math.inf
    return SuiteResult(
        "positivity",
        g_min > 0 and psi_min > 0 and sep_min > 0,
        {"g_min": g_min, "psi_min": psi_min, "separation_min": sep_min},
    )


def outside_points(rng, t, alpha, count, box=3.0, band=0.02):
    reg = region.omega_region(t, alpha)
    out = []
    while len(out) < count:
        lam = rng.uniform(-box, box, 4 * count) + 1j * rng.uniform(-box, box, 4 * count)
        keep = lam[(reg.classify(lam, band=band) == -1) & (lam != 0)]
        out.extend(keep.tolist())
    return np.array(out[:count])


def suite_inverse(rng, count=200):
    worst = 0.0
    inside_sigma = 0
    for alpha in (0.3, 0.8):
        for lam in outside_points(rng, 1.0, alpha, count):
            for z in region.f_inverse(1.0, alpha, lam, check_outside=False):
                worst = max(worst, abs(region.f_map(1.0, alpha, z) - lam))
                inside_sigma += int(not region.T_alpha(alpha, z) > 1.0)
    return SuiteResult("inverse", worst <= 1e-12 and inside_sigma == 0, {"max_residual": worst, "in_sigma": inside_sigma})


def suite_regularity(rng, count=10):
    worst_det = math.inf
    worst_dx = 0.0
    for alpha in (0.3, 0.7):
        for lam in outside_points(rng, 1.0, alpha, count):
            z = region.f_inverse(1.0, alpha, lam)[0]
            J, dxdx0 = region.jacobian_probe(1.0, alpha, z)
            worst_det = min(worst_det, abs(float(np.linalg.det(J))))
            worst_dx = max(worst_dx, abs(J[2, 2] - dxdx0) / dxdx0)
    return SuiteResult("regularity", worst_det > 0 and worst_dx < 1e-5, {"min_abs_det": worst_det, "dx_rel_err": worst_dx})


def suite_harmonicity(rng, full=True):
    if full:
        h, mc, mf, ratio = be.harmonicity_study(1.0, 0.5)
        ok = mc <= 10 * h * h and mf <= 1e-2 and ratio >= 3.0
        detail = {"h": h, "max_coarse": mc, "max_fine": mf, "ratio": ratio}
    else:
        f = be.laplacian_field(1.0, 0.5, be.Grid.uniform(-3, 3, 101, -3, 3, 101))
        mc = f.max_abs_laplacian()
        ok = mc <= 10 * 0.06**2
        detail = {"h": 0.06, "max_coarse": mc}
    lam = outside_points(rng, 1.0, 0.5, 40)
    lam = lam[np.abs(lam) > 0.7]
    dec, cr = be.cauchy_riemann_residual(1.0, 0.5, lam)
    detail.update({"decomposition": dec, "cauchy_riemann": cr})
    return SuiteResult("harmonicity", ok and dec <= 1e-10 and cr <= 1e-5, detail)


def suite_sqrt_alpha(rng):
    om = region.boundary_omega(50.0, 0.25, 4096)
    dev = float(np.max(np.abs(np.abs(om.points) - 0.5)))
    return SuiteResult("sqrt_alpha_limit", dev <= 0.05, {"max_deviation": dev})


def suite_pde_hj(rng):
    ev = be.HJEvaluator(0.5)
    worst = 0.0
    for lam, x in [(2.0, 0.01), (1 + 2j, 0.05), (-2.0, 0.001)]:
        worst = max(worst, be.pde_residual(1.0, 0.5, lam, x, ev))
    return SuiteResult("pde_hj", worst < 1e-4, {"max_residual": worst})


def suite_rmt_containment(rng, seed=0, n=256, reps=8, steps=400):
    cfg = rmt.SimConfig(n, 1.0, steps, seed, reps)
    Ys = rmt.simulate_ubm(cfg)
    cloud = rmt.eigencloud(cfg, 0.5, samples=Ys)
    frac = cloud.inside_fraction(0.05)
    S, se = rmt.empirical_S(cfg, 0.5, 3.0, 0.0, samples=Ys)
    st = be.s_t(1.0, 0.5, 3.0)
    zeros_ok = bool(np.all(cloud.zero_counts >= n - cloud.alpha_rank))
    return SuiteResult(
        "rmt_containment",
        frac >= 0.99 and abs(S - st) <= 0.05 and zeros_ok,
        {"inside_fraction": frac, "empirical_S": S, "stderr": se, "s_t": st, "kernel_ok": zeros_ok},
    )


MOMENT_LAMBDAS = (0.5, 1 + 1j)


def moment_flow_study(seed=0, n=256, reps=64, window=0.04, steps=40, x=0.25):
    """Moment-flow z-scores and the t = 0 PDE residual from one set of paths.

    The paths run over [0, window]; the moment identities are tested on the
    whole window and dS/dt at t = 0 uses S at 0, window/2 and window.
    """
    cfg = rmt.SimConfig(n, window, steps, seed, reps)
    pts = [(lam, x) for lam in MOMENT_LAMBDAS]
    res, der, S = rmt.moment_flow_path(cfg, 0.5, MOMENT_LAMBDAS, window / 2, window / 2, s_points=pts)
    mean = res.mean(axis=0)
    se = res.std(axis=0, ddof=1) / math.sqrt(reps)
    mu = projection_measure(rmt.projection_rank(n, 0.5) / n)
    Sm = S.mean(axis=0)
    d = window / 2
    pde = {}
    for i, lam in enumerate(MOMENT_LAMBDAS):
        dSdt = (-3 * Sm[i, 0] + 4 * Sm[i, 1] - Sm[i, 2]) / (2 * d)
        grad = be.S0_gradient(mu, lam, x)
        pde[str(lam)] = be.pde_residual(0.0, 0.5, lam, x, None, grad=grad, dSdt=dSdt)
    return {"residual": mean, "stderr": se, "derivative": der.mean(axis=0), "pde": pde}


def suite_moment_flow(rng, seed=0):
    st = moment_flow_study(seed)
    z = np.abs(st["residual"]) / st["stderr"]
    pde_worst = max(st["pde"].values())
    return SuiteResult(
        "moment_flow",
        bool(np.all(z <= 3)) and pde_worst <= 0.05,
        {"z_scores": z.tolist(), "pde_residual": st["pde"]},
    )


FAST = [
    suite_characteristics,
    suite_blowup,
    suite_transport,
    suite_region,
    suite_positivity,
    suite_inverse,
    suite_regularity,
    suite_sqrt_alpha,
    suite_pde_hj,
]


def run(level="fast", seed=0):
    """Run the suites for ``level``; returns a list of :class:`SuiteResult`."""
    if level not in ("fast", "full"):
        raise ValueError("level must be 'fast' or 'full'")
    suites = list(FAST)
    suites.append(lambda rng: suite_harmonicity(rng, full=level == "full"))
    if level == "full":
        suites.append(lambda rng: suite_rmt_containment(rng, seed))
        suites.append(lambda rng: suite_moment_flow(rng, seed))
    out = []
    for i, suite in enumerate(suites):
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        t0 = time.perf_counter()
        try:
            res = suite(rng)
        except Exception as exc:  # a crashing suite is a failed suite
            res = SuiteResult(getattr(suite, "__name__", "suite"), False, {"error": repr(exc)})
        res.seconds = time.perf_counter() - t0
        out.append(res)
    return out
