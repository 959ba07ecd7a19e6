import math

import numpy as np
import pytest
from scipy.integrate import quad

from freebrown import checks
from freebrown import closed_form as cf
from freebrown import hamiltonian as ham
from freebrown import region
from freebrown.spectral import InitialData, SpectralMeasure, projection_measure, trace_q0, vdot0


def test_sgn_left_continuous():
    assert cf.sgn(0.0) == -1 and cf.sgn(-2.0) == -1 and cf.sgn(1e-300) == 1


def test_constants_x0_zero():
    mu = projection_measure(0.5)
    init = InitialData(2.0 + 0.3j)
    cc = cf.curve_constants(mu, init)
    assert cc.degenerate and math.isinf(cc.u1)
    assert cc.C1 == pytest.approx(vdot0(mu, init) ** 2)


def test_constants_turning_point_at_start():
    from scipy.optimize import brentq

    mu = projection_measure(0.5)
    ray = np.exp(0.7j)
    r = brentq(lambda r: vdot0(mu, InitialData(r * ray, 0.3)), 0.05, 5.0, xtol=1e-15)
    init = InitialData(r * ray, 0.3)
    cc = cf.curve_constants(mu, init)
    assert abs(cc.vdot0) < 1e-12
    assert cc.C2 * cc.r0**2 == pytest.approx(1.0, abs=1e-12)
    assert cc.u1 <= 1e-5


TURNING = (0.65, InitialData(0.9 + 1.13j, 1.95))


def test_turning_time_matches_ode():
    alpha, init = TURNING
    mu = projection_measure(alpha)
    cc = cf.curve_constants(mu, init)
    assert cc.vdot0 > 0 and math.isfinite(cc.u1)
    traj = ham.characteristic(mu, init, 0.9 * cf.blowup_time(mu, init))
    k = int(np.argmax(np.abs(traj.lam)))
    assert 0 < k < len(traj) - 1
    assert traj.u[k] == pytest.approx(cc.u1, abs=2e-3)
    assert np.abs(traj.lam[k]) == pytest.approx(cc.r_max, rel=1e-6)
    r = cf.radial_solution(cc, traj.u)
    assert np.max(np.abs(r - np.abs(traj.lam))) < 1e-6


def test_radial_at_zero_and_limits():
    mu = projection_measure(0.5)
    for lam in (2.0, 0.4 + 0.9j, -1 - 1j):
        cc = cf.curve_constants(mu, InitialData(lam, 0.2))
        assert float(cf.radial_solution(cc, 0.0)) == pytest.approx(abs(lam), rel=1e-15)
    lam = 0.4 + 1.3j
    u = np.linspace(0, 2, 50)
    exp_form = abs(lam) * np.exp(vdot0(mu, InitialData(lam)) * u)
    small = cf.radial_solution(cf.curve_constants(mu, InitialData(lam, 1e-12)), u)
    assert np.max(np.abs(small - exp_form)) < 1e-9


def test_radial_continuous_at_turning_point():
    alpha, init = TURNING
    cc = cf.curve_constants(projection_measure(alpha), init)
    e = 1e-9
    a, b = cf.radial_solution(cc, [cc.u1 - e, cc.u1 + e])
    assert abs(a - b) < 1e-7
    assert a == pytest.approx(cc.r_max, rel=1e-8)


def test_radial_continuous_in_x0():
    mu = projection_measure(0.6)
    u = np.linspace(0, 1.5, 40)
    lam = 1.4 - 0.6j
    prev = None
    for x0 in (1e-4, 1e-6, 1e-8, 0.0):
        r = cf.radial_solution(cf.curve_constants(mu, InitialData(lam, x0)), u)
        if prev is not None:
            assert np.max(np.abs(r - prev)) < 1e-2 * max(x0 * 1e4, 1e-6) + 1e-9
        prev = r


def test_angular_solution():
    assert float(cf.angular_solution(0.0, 0.3, 5.0)) == 0.3
    assert float(cf.angular_solution(1.7, 0.3, 0.0)) == 0.3
    cc = cf.curve_constants(projection_measure(0.5), InitialData(2.5, 0.4))
    assert cc.K2 == 0.0


def test_x_curve_basic():
    mu = projection_measure(0.5)
    assert np.all(cf.x_curve(mu, InitialData(1 + 1j, 0.0), np.linspace(0, 3, 10)) == 0)
    assert float(cf.x_curve(mu, InitialData(1 + 1j, 0.37), 0.0)) == 0.37
    init = InitialData(2.0, 0.01)
    assert float(cf.x_curve(mu, init, cf.blowup_time(mu, init))) <= 1e-9


def test_integral_against_quadrature(rng):
    for alpha, init in checks.random_initial_conditions(rng, 15, x_range=(0.0, 1.0)):
        mu = projection_measure(alpha)
        cc = cf.curve_constants(mu, init)
        u = 0.8 * min(3.0, cf.blowup_time(mu, init))
        exact, _ = quad(lambda s: float(cf.radial_solution(cc, s)) ** 2, 0, u, epsabs=1e-13, epsrel=1e-12, limit=200)
        assert float(cf.integral_lambda_sq(cc, u)) == pytest.approx(exact, rel=1e-9, abs=1e-12)


def test_integral_degenerate_forms():
    mu = projection_measure(0.5)
    lam = 0.3 + 1.1j
    cc = cf.curve_constants(mu, InitialData(lam))
    v = cc.vdot0
    u = 0.7
    assert float(cf.integral_lambda_sq(cc, u)) == pytest.approx(abs(lam) ** 2 * math.expm1(2 * v * u) / (2 * v), rel=1e-14)
    assert float(cf.integral_lambda_sq(cc, 0.0)) == 0.0
    lam0 = 1 - 0.5 + 0.5 * np.exp(1.1j)
    cc0 = cf.curve_constants(mu, InitialData(lam0))
    cc0 = cf.CurveConstants(**{**cc0.__dict__, "vdot0": 0.0})
    assert float(cf.integral_lambda_sq(cc0, u)) == pytest.approx(abs(lam0) ** 2 * u, rel=1e-14)


def test_blowup_small_source_limit(rng):
    for alpha, init in checks.random_initial_conditions(rng, 20):
        mu = projection_measure(alpha)
        lam = init.lambda0
        T = float(region.T_alpha(alpha, lam))
        lim = cf.blowup_time_limit(mu, lam)
        if math.isfinite(T):
            assert lim == pytest.approx(T, rel=1e-12, abs=1e-14)
            # the exponential integral at T equals exactly 1 / tau(q0)
            cc = cf.curve_constants(mu, InitialData(lam))
            assert float(cf.integral_lambda_sq(cc, T)) * trace_q0(mu, InitialData(lam)) == pytest.approx(1.0, rel=1e-10)
        else:
            assert math.isinf(lim)


def test_blowup_against_ode():
    mu = projection_measure(0.5)
    init = InitialData(2.0, 0.01)
    ts = cf.blowup_time(mu, init, fallback=False)
    assert cf.ode_blowup_time(mu, init) == pytest.approx(ts, abs=1e-4)


def test_blowup_equation_and_rewritten_form(rng):
    seen = set()
    for alpha, init, ts in checks.blowup_cases(rng, 30):
        mu = projection_measure(alpha)
        cc = cf.curve_constants(mu, init)
        r0, c, A, k, sg = cc.r0, cc.C2 * cc.r0**2, 1 + cc.s, math.sqrt(cc.C1), cc.sigma
        tq = trace_q0(mu, init)
        lhs = 2 * r0**2 / (c + math.exp(-2 * sg * k * ts) * A * A)
        rhs = 2 * r0**2 / (c + A * A) + k / tq * sg
        assert lhs == pytest.approx(rhs, rel=1e-10)
        r = float(cf.radial_solution(cc, ts))
        assert r * math.exp(sg * k * ts) == pytest.approx(r0 + k * A / (tq * r0) * sg, rel=1e-10)
        seen.add(sg)
    assert -1 in seen


def test_regime_fallback():
    # a large source turns the radius before p_x blows up
    alpha, init = TURNING
    mu = projection_measure(alpha)
    assert not cf.regime_holds(cf.curve_constants(mu, init))
    with pytest.raises(cf.UnsupportedRegimeError):
        cf.blowup_time(mu, init, fallback=False)
    assert cf.blowup_time(mu, init) == cf.ode_blowup_time(mu, init)


def test_hj_value_examples():
    mu = projection_measure(0.5)
    assert cf.hj_value(cf.HJInputs(mu, 2.0, 0.0, 0.0)) == pytest.approx(math.log(2), abs=1e-15)
    lam = 0.8 + 1.2j
    init = InitialData(lam)
    cc = cf.curve_constants(mu, init)
    u = 0.6
    expect = cf.S0(mu, lam, 0.0) + (cc.H0 - 0.5) * u + cc.vdot0 * u
    assert cf.hj_value(cf.HJInputs(mu, lam, 0.0, u)) == pytest.approx(expect, rel=1e-13)


def test_hj_value_rejects_past_blowup():
    mu = projection_measure(0.5)
    init = InitialData(2.0, 0.01)
    ts = cf.blowup_time(mu, init)
    with pytest.raises(cf.DomainError):
        cf.hj_value(cf.HJInputs(mu, 2.0, 0.01, ts + 0.1))


def test_oracle_equivalence_suite(rng):
    res = checks.suite_characteristics(rng, 50)
    assert res.detail["max_closed_form_deviation"] <= 1e-6


def test_transport_identity(rng):
    res = checks.suite_transport(rng, 5)
    assert res.detail["max_residual"] <= 1e-6
