import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from katolab import adiabatic as ad
from katolab.errors import KatolabError, SpectralError


def test_two_level_generator_norm():
    p = ad.two_level_rotation()
    A = ad.kato_generator(p, 0.3)
    assert np.linalg.norm(A, 2) == pytest.approx(np.pi / 2, rel=1e-6)
    P = p.P(0.3)
    assert np.allclose(P @ A @ P, 0, atol=1e-8)


def test_kato_transport_intertwines():
    r = ad.kato_transport(ad.two_level_rotation(), 2000)
    assert r.defect <= 1e-8
    assert r.unitarity <= 1e-10


def test_constant_path_gives_identity_and_exact_evolution():
    H0 = np.diag([0.0, 1.0, 3.0])
    path = ad.constant_path(H0)
    assert np.allclose(ad.kato_transport(path, 50).W[-1], np.eye(3), atol=1e-12)
    U = ad.schrodinger_evolve(path, 2.5, 40).W[-1]
    assert np.allclose(U, expm(-2.5j * H0), atol=1e-12)
    assert np.allclose(ad.schrodinger_evolve(path, 0.0, 10).W[-1], np.eye(3))


def test_adiabatic_defect_is_first_order():
    p = ad.two_level_rotation()
    Ts = [25.0, 50.0, 100.0, 200.0]
    d = [ad.adiabatic_defect(p, T, 2000) for T in Ts]
    slope = np.polyfit(np.log(Ts), np.log(d), 1)[0]
    assert abs(slope + 1) <= 0.15


def test_shifted_and_unshifted_transport_deviation_agree():
    p = ad.two_level_rotation()
    a = ad.transport_deviation(p, 50.0, 1000, shift=True)
    b = ad.transport_deviation(p, 50.0, 1000, shift=False)
    assert a == pytest.approx(b, rel=1e-6)


@pytest.mark.parametrize("theta", [np.pi / 6, np.pi / 3, np.pi / 2])
def test_berry_phase_solid_angle(theta):
    g = ad.berry_phase(ad.bloch_loop(theta), 2000)
    expected = -np.pi * (1 - np.cos(theta))
    assert np.angle(np.exp(1j * (g - expected))) == pytest.approx(0, abs=1e-8)
    assert g == pytest.approx(ad.berry_phase(ad.bloch_loop(theta), 4000), abs=1e-6)


def test_retraced_loop_has_trivial_holonomy():
    assert abs(ad.berry_phase(ad.retraced(ad.bloch_loop(1.0)), 2000)) <= 1e-8


def test_berry_phase_is_reparametrization_invariant():
    p = ad.bloch_loop(0.7)
    q = ad.reparametrized(p, lambda s: s + 0.1 * np.sin(2 * np.pi * s) / (2 * np.pi))
    assert ad.berry_phase(q, 2000) == pytest.approx(ad.berry_phase(p, 2000), abs=1e-7)


def test_three_level_band_transport():
    r = ad.kato_transport(ad.three_level(1.0), 1000)
    assert r.defect <= 1e-8


def test_errors():
    with pytest.raises(KatolabError, match="path not closed"):
        ad.berry_phase(ad.two_level_rotation(), 100)
    with pytest.raises(KatolabError):
        ad.kato_transport(ad.two_level_rotation(), 5)
    crossing = ad.OperatorPath(lambda s: np.diag([s - 0.5, 0.5 - s]), band=0)
    with pytest.raises(SpectralError, match="band collision"):
        ad.kato_transport(crossing, 100)


@given(st.floats(0.2, 2.8), st.integers(0, 2**32 - 1))
def test_transport_stays_unitary_on_random_loops(theta, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    V = np.linalg.qr(X)[0]
    base = ad.bloch_loop(theta)
    path = ad.OperatorPath(lambda s: V @ base.H(s) @ V.conj().T, band=0)
    r = ad.kato_transport(path, 400)
    W = r.W[-1]
    assert np.allclose(W @ W.conj().T, np.eye(2), atol=1e-10)
    # unitary conjugation leaves the holonomy unchanged
    assert ad.berry_phase(path, 400) == pytest.approx(ad.berry_phase(base, 400), abs=1e-8)
