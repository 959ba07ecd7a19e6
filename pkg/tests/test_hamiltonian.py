import math

import numpy as np
import pytest

from freebrown import hamiltonian as ham
from freebrown import closed_form as cf
from freebrown import region
from freebrown.spectral import DomainError, InitialData, projection_measure, vdot0


def test_hamiltonian_values():
    assert ham.hamiltonian_value(ham.PhasePoint(1.3, -0.4, 0.7, 0, 0, 0)) == 0.0
    assert ham.hamiltonian_value(ham.PhasePoint(1, 0, 0, 1, 0, 0)) == pytest.approx(0.25, abs=1e-16)


def test_initial_energy_reduces_at_x0_zero(rng):
    for _ in range(20):
        alpha = rng.uniform(0.1, 0.9)
        lam = complex(*rng.uniform(-2, 2, 2))
        p = ham.initial_point(projection_measure(alpha), InitialData(lam))
        H, K1, K2, _ = ham.conserved_quantities(p)
        assert H == pytest.approx(K1 * (1 - K1) + K2**2 / 4, abs=1e-12)


def test_vector_field_special_points():
    d = ham.vector_field(ham.PhasePoint(0, 0, 0, 0.3, -0.2, 0.5), 0.0)
    assert d[0] == d[1] == d[2] == d[5] == 0.0
    d = ham.vector_field(ham.PhasePoint(0.6, -0.8, 0.0, 0, 0, 0), 0.0)
    assert d[0] == pytest.approx(0.3) and d[1] == pytest.approx(-0.4)
    p = ham.PhasePoint(0.7, 0.4, 0.3, 0.1, -0.2, 0.9)
    d = ham.vector_field(p, p.x * p.p_x**2)
    r2 = p.a**2 + p.b**2
    assert d[2] / p.x == pytest.approx(-2 * r2 * p.p_x)
    assert d[5] == pytest.approx(r2 * p.p_x**2)


def test_vector_field_is_hamiltonian_gradient(rng):
    h = 1e-6
    for _ in range(100):
        y = rng.uniform(-1.5, 1.5, 6)
        y[2] = abs(y[2])
        p = ham.PhasePoint.from_array(y)
        d = ham.vector_field(p, p.x * p.p_x**2)
        grad = np.zeros(6)
        for i in range(6):
            e = np.zeros(6)
            e[i] = h
            grad[i] = (
                ham.hamiltonian_value(ham.PhasePoint.from_array(y + e))
                - ham.hamiltonian_value(ham.PhasePoint.from_array(y - e))
            ) / (2 * h)
        # dq/du = dH/dp, dp/du = -dH/dq
        expect = np.concatenate([grad[3:], -grad[:3]])
        assert np.max(np.abs(d - expect)) < 1e-6


def test_conserved_quantities_special_cases():
    H, K1, K2, X = ham.conserved_quantities(ham.PhasePoint(1.2, 0.0, 0.5, 0.4, 0.0, 0.3))
    assert K2 == 0.0
    H, K1, K2, X = ham.conserved_quantities(ham.PhasePoint(1.2, 0.7, 0.0, 0.4, 0.1, 0.3))
    assert X == 0.0
    assert K1 == pytest.approx(0.5 * (1.2 * 0.4 + 0.7 * 0.1))


def test_conservation_generic():
    mu = projection_measure(0.5)
    init = InitialData(2.0, 1.0)
    traj = ham.characteristic(mu, init, min(5.0, 0.9 * cf.blowup_time(mu, init)))
    assert traj.status == "completed"
    assert max(traj.drift().values()) < 1e-8


def test_x0_zero_exponential_radius():
    mu = projection_measure(0.3)
    init = InitialData(1.5 + 0.8j)
    traj = ham.characteristic(mu, init, 3.0)
    assert np.all(traj.x == 0)
    v = vdot0(mu, init)
    assert np.max(np.abs(np.abs(traj.lam) - abs(init.lambda0) * np.exp(v * traj.u))) < 1e-8


def test_blowup_near_T_alpha():
    mu = projection_measure(0.5)
    lam = 0.6 + 0.9j
    T = float(region.T_alpha(0.5, lam))
    traj = ham.characteristic(mu, InitialData(lam, 1e-8), 2 * T)
    assert traj.status == "blew_up"
    assert traj.u_blow == pytest.approx(cf.blowup_time(mu, InitialData(lam, 1e-8)), abs=1e-4)
    assert traj.u_blow == pytest.approx(T, abs=1e-4)


def test_time_reversal(rng):
    for _ in range(5):
        alpha = rng.uniform(0.2, 0.8)
        init = InitialData(complex(*rng.uniform(0.5, 2, 2)), rng.uniform(0, 0.5))
        mu = projection_measure(alpha)
        fwd = ham.characteristic(mu, init, 0.5)
        assert fwd.status == "completed"
        back = ham.integrate(fwd.final, fwd.source, 0.5, backward=True)
        assert np.max(np.abs(back.y[-1] - fwd.y[0])) < 1e-7


def test_argument_is_affine(rng):
    for _ in range(10):
        alpha = rng.uniform(0.2, 0.8)
        init = InitialData(complex(*rng.uniform(-2, 2, 2)), rng.uniform(0, 1))
        mu = projection_measure(alpha)
        ts = cf.blowup_time(mu, init)
        traj = ham.characteristic(mu, init, min(3.0, 0.9 * ts))
        K2 = traj.conserved()["K2"][0]
        th = np.unwrap(np.angle(traj.lam))
        assert np.max(np.abs(th - th[0] - 0.5 * K2 * traj.u)) < 1e-8


def test_lambda_ode_residual():
    mu = projection_measure(0.5)
    traj = ham.characteristic(mu, InitialData(1 + 1j, 0.0), 2.0)
    assert ham.lambda_ode_residual(traj) < 1e-5
    traj = ham.characteristic(mu, InitialData(2.0, 0.5), 1.0)
    assert ham.lambda_ode_residual(traj) < 1e-4
    # halving the step shrinks the stencil residual about four times
    fine = ham.characteristic(mu, InitialData(2.0, 0.5), 1.0, step=5e-4)
    assert ham.lambda_ode_residual(fine) < 0.5 * ham.lambda_ode_residual(traj)


def test_start_at_origin_rejected():
    with pytest.raises(DomainError):
        ham.characteristic(projection_measure(0.5), InitialData(0.0, 0.5), 1.0)


def test_integrate_many_matches_serial(monkeypatch):
    mu = projection_measure(0.4)
    inits = [InitialData(l, x) for l, x in [(1 + 1j, 0.1), (2.0, 0.0), (-0.5 + 0.7j, 0.4)]]
    points = [ham.initial_point(mu, i) for i in inits]
    sources = [ham.source_term(p) for p in points]
    monkeypatch.setenv("BROWN_THREADS", "3")
    many = ham.integrate_many(points, sources, 1.0)
    for p, s, tr in zip(points, sources, many):
        one = ham.integrate(p, s, 1.0)
        assert np.array_equal(one.y, tr.y)


def test_rejects_nonpositive_horizon():
    p = ham.initial_point(projection_measure(0.5), InitialData(1 + 1j))
    with pytest.raises(DomainError):
        ham.integrate(p, 0.0, 0.0)
