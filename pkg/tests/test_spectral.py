import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freebrown.spectral import (
    DomainError,
    InitialData,
    SpectralMeasure,
    initial_momenta,
    projection_measure,
    trace_q0,
    vdot0,
    vdot0_projection,
)


def diagonal_oracle(mu, init):
    """Traces from the explicit diagonal model matrix with equal-weight atoms."""
    # repeat atoms in proportion to weights (weights here are multiples of 0.1)
    reps = np.round(mu.weights * 10).astype(int)
    h = np.diag(np.repeat(mu.locations, reps)).astype(complex)
    n = h.shape[0]
    lam = init.lambda0
    q0 = np.linalg.inv((h - lam.real * np.eye(n)) @ (h - lam.real * np.eye(n)) + (lam.imag**2 + init.x0) * np.eye(n))
    tau = lambda m: np.trace(m).real / n
    return tau(q0), -2 * tau(q0 @ (h - lam.real * np.eye(n))), 2 * lam.imag * tau(q0)


def test_projection_measure_atoms():
    assert projection_measure(0.5).atoms == ((0.0, 0.5), (1.0, 0.5))
    mu = projection_measure(0.8)
    assert mu.atoms[0] == (0.0, pytest.approx(0.2))
    assert mu.atoms[1] == (1.0, 0.8)
    with pytest.raises(DomainError):
        projection_measure(1.0)


def test_measure_validation():
    with pytest.raises(DomainError):
        SpectralMeasure(((0.0, 0.5), (1.0, 0.4)))
    with pytest.raises(DomainError):
        SpectralMeasure(((-1.0, 1.0),))
    with pytest.raises(DomainError):
        SpectralMeasure(())


def test_trace_q0_values():
    mu = projection_measure(0.5)
    assert trace_q0(mu, InitialData(0.5, 1.0)) == pytest.approx(0.8, abs=1e-15)
    with pytest.raises(DomainError):
        trace_q0(mu, InitialData(0.0, 0.0))
    assert trace_q0(SpectralMeasure(((1.0, 1.0),)), InitialData(2.0, 0.0)) == 1.0


def test_initial_momenta_values():
    mu = projection_measure(0.5)
    pa, pb, px = initial_momenta(mu, InitialData(0.5, 1.0))
    assert pa == pytest.approx(0.0, abs=1e-15)
    assert pb == 0.0
    assert px == pytest.approx(0.8, abs=1e-15)
    assert initial_momenta(mu, InitialData(1j, 0.0))[2] == pytest.approx(0.75, abs=1e-15)
    assert initial_momenta(mu, InitialData(2.7, 0.3))[1] == 0.0


def test_vdot0_values():
    assert vdot0(projection_measure(0.8), InitialData(1 + 1j)) == pytest.approx(-0.5, abs=1e-14)
    assert vdot0_projection(0.5, 0.0) == 0.0
    th = np.linspace(0.1, 6.2, 20)
    for alpha in (0.3, 0.7):
        circ = 1 - alpha + alpha * np.exp(1j * th)
        for lam in circ:
            assert abs(vdot0(projection_measure(alpha), InitialData(lam))) < 1e-12


@pytest.mark.parametrize(
    "atoms,lam,x0",
    [
        (((0.0, 0.5), (1.0, 0.5)), 0.5 + 0.2j, 0.3),
        (((0.0, 0.2), (1.0, 0.8)), 2.0 - 1.0j, 0.0),
        (((0.0, 0.3), (0.5, 0.3), (2.0, 0.4)), -1 + 0.5j, 1.0),
    ],
)
def test_against_diagonal_matrix(atoms, lam, x0):
    mu = SpectralMeasure(atoms)
    init = InitialData(lam, x0)
    tq, pa, pb = diagonal_oracle(mu, init)
    pa2, pb2, px2 = initial_momenta(mu, init)
    assert px2 == pytest.approx(tq, rel=1e-13)
    assert pa2 == pytest.approx(pa, abs=1e-13)
    assert pb2 == pytest.approx(pb, abs=1e-13)


@settings(max_examples=200, deadline=None)
@given(
    alpha=st.floats(0.01, 0.99),
    r=st.floats(0.05, 4.0),
    th=st.floats(0, 2 * np.pi),
)
def test_vdot0_two_paths_agree(alpha, r, th):
    lam = r * np.exp(1j * th)
    if abs(1 - lam) < 1e-3:
        return
    a = vdot0(projection_measure(alpha), InitialData(lam))
    b = vdot0_projection(alpha, lam)
    assert abs(a - b) <= 1e-12 * max(1.0, abs(a))


@settings(max_examples=100, deadline=None)
@given(
    alpha=st.floats(0.01, 0.99),
    lam_re=st.floats(-3, 3),
    lam_im=st.floats(0.01, 3),
    x0=st.floats(0, 2),
    dx=st.floats(0.01, 1),
)
def test_trace_q0_decreasing_and_px_positive(alpha, lam_re, lam_im, x0, dx):
    mu = projection_measure(alpha)
    lam = complex(lam_re, lam_im)
    a = trace_q0(mu, InitialData(lam, x0))
    b = trace_q0(mu, InitialData(lam, x0 + dx))
    assert b < a
    assert initial_momenta(mu, InitialData(lam, x0))[2] > 0


def test_negative_x0_admissibility():
    mu = projection_measure(0.5)
    assert trace_q0(mu, InitialData(0.5 + 1j, -0.5)) > 0
    with pytest.raises(DomainError):
        trace_q0(mu, InitialData(0.5 + 0.1j, -0.5))
