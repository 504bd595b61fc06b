import numpy as np
import pytest
from hypothesis import given, strategies as st

from katolab.errors import HypothesisError, KatolabError
from katolab.operators import eig, random_hermitian
from katolab.temple import (
    containment_trials,
    eigenvector_gap_bound,
    enclosure,
    rayleigh,
    rayleigh_remainder_slope,
    residual,
    spectrum_hit,
)

H2 = np.diag([0.0, 1.0])
PHI = np.array([np.sqrt(0.9), np.sqrt(0.1)])


def test_two_level_quantities():
    assert rayleigh(H2, PHI) == pytest.approx(0.1)
    assert residual(H2, PHI) ** 2 == pytest.approx(0.09)


def test_two_level_enclosure():
    rep = enclosure(H2, PHI, -0.5, 0.5)
    assert rep.gamma0 == pytest.approx(-0.125)
    assert rep.kappa0 == pytest.approx(0.25)
    assert rep.gamma0 <= 0.0 <= rep.kappa0
    assert rep.verified


def test_temple_lower_bound_is_exact_for_two_levels():
    rep = enclosure(H2, PHI, -1e12, 1.0)
    assert rep.gamma0 == pytest.approx(0.0, abs=1e-12)


def test_eigenvector_trial_collapses():
    rep = enclosure(H2, np.array([1.0, 0.0]), -0.5, 0.5)
    assert rep.gamma0 == rep.kappa0 == rep.eta == 0.0


def test_hypothesis_errors():
    with pytest.raises(HypothesisError, match="window excludes Rayleigh quotient"):
        enclosure(H2, PHI, 0.2, 0.5)
    with pytest.raises(HypothesisError, match="Temple–Kato hypothesis fails"):
        enclosure(H2, PHI, 0.0, 0.2)
    with pytest.raises(KatolabError, match="trial vector not normalized"):
        enclosure(H2, np.array([1.0, 1.0]), -0.5, 0.5)


def test_spectrum_hit():
    assert spectrum_hit(H2, PHI, -0.5, 0.5)
    assert not spectrum_hit(H2, PHI, 0.2, 0.8)


def test_eigenvector_gap_bound():
    assert eigenvector_gap_bound(0.1, 0.0, 0.4)[0] == 0.0
    b, maj = eigenvector_gap_bound(0.1, 0.3, 0.4)
    assert b == pytest.approx(0.8229, abs=1e-3)
    assert b <= maj
    # the actual phase-aligned distance to e1
    assert np.linalg.norm(PHI - [1.0, 0.0]) == pytest.approx(0.320, abs=1e-3)
    assert eigenvector_gap_bound(0.0, 1 - 1e-14, 1.0)[0] == pytest.approx(np.sqrt(2), abs=1e-6)
    with pytest.raises(HypothesisError, match="need eps < delta"):
        eigenvector_gap_bound(0.0, 0.5, 0.4)


def test_containment_and_slope(rng):
    s = containment_trials(50, 8, rng)
    assert s.failures == 0
    slope, _ = rayleigh_remainder_slope(random_hermitian(8, rng), random_hermitian(8, rng), np.logspace(-4, -2, 9))
    assert abs(slope - 2.0) <= 0.1


@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 0.2))
def test_enclosure_contains_the_isolated_eigenvalue(seed, noise):
    rng = np.random.default_rng(seed)
    H = random_hermitian(5, rng)
    dec = eig(H)
    lam = dec.eigenvalues
    k = int(rng.integers(5))
    alpha = 0.5 * (lam[k - 1] + lam[k]) if k else lam[0] - 1
    zeta = 0.5 * (lam[k] + lam[k + 1]) if k < 4 else lam[4] + 1
    z = rng.standard_normal(5)
    phi = dec.vectors[:, k] + noise * z / np.linalg.norm(z)
    phi /= np.linalg.norm(phi)
    try:
        rep = enclosure(H, phi, alpha, zeta)
    except HypothesisError:
        return
    assert rep.gamma0 - 1e-12 <= lam[k] <= rep.kappa0 + 1e-12
    assert rep.gamma0 <= rep.eta <= rep.kappa0
