import numpy as np
import pytest
from hypothesis import given, strategies as st

from katolab import projections as pj
from katolab.errors import KatolabError, SpectralError

P2 = np.diag([1.0, 0.0])
Q2 = 0.5 * np.ones((2, 2))


def test_equal_projections():
    P = pj.random_projection(5, 2, np.random.default_rng(0))
    p = pj.pair(P, P)
    assert np.allclose(p.A, 0)
    assert np.allclose(p.B @ p.B, np.eye(5))
    assert np.allclose(pj.kato_unitary(p), np.eye(5), atol=1e-12)
    assert np.allclose(pj.sgn_unitary(p), np.eye(5) - 2 * P, atol=1e-12)
    assert pj.trace_index(p) == 0
    # ran P ∩ ran Q = ran P and ker P ∩ ker Q = ker P
    assert pj.corner_subspaces(P, P) == (0, 0, 2, 3)
    assert pj.halmos(P, P).generic_dim == 0


def test_two_by_two_pair():
    p = pj.pair(P2, Q2)
    assert p.normPQ == pytest.approx(1 / np.sqrt(2))
    U = pj.kato_unitary(p)
    c = s = 1 / np.sqrt(2)
    assert np.allclose(U, [[c, -s], [s, c]], atol=1e-12)
    S = pj.sgn_unitary(p)
    assert np.allclose(S @ S, np.eye(2))
    assert np.allclose(S @ P2 @ S, Q2)
    sym = pj.spectral_symmetry(p)
    # one entry per pair ±lambda
    assert len(sym) == 1
    lam, a, b = sym[0]
    assert lam == pytest.approx(c)
    assert a == b == 1


def test_line_pair_halmos_angles():
    theta = 0.4
    h = pj.halmos(*pj.line_pair(theta))
    assert h.C[0, 0] == pytest.approx(np.cos(theta))
    assert h.S[0, 0] == pytest.approx(np.sin(theta))


def test_trace_index_rank_difference():
    rng = np.random.default_rng(3)
    P, Q = pj.random_pair(6, 3, 1, rng)
    assert pj.trace_index(pj.pair(P, Q)) == 2


def test_corners_and_conjugator():
    P, Q = np.diag([1.0, 0, 0]), np.diag([0.0, 1, 0])
    assert pj.corner_subspaces(P, Q) == (1, 1, 0, 1)
    U = pj.symmetry_conjugator(np.diag([1.0, 0]), np.diag([0.0, 1]))
    assert np.allclose(U, [[0, 1], [1, 0]])
    with pytest.raises(SpectralError, match="no symmetry"):
        pj.symmetry_conjugator(np.diag([1.0, 1, 0]), np.diag([0.0, 1, 0]))


def test_errors():
    with pytest.raises(KatolabError, match="not a projection pair"):
        pj.pair(np.diag([1.0, 0.5]), P2)
    with pytest.raises(SpectralError, match="not norm-close"):
        pj.kato_unitary(pj.pair(np.diag([1.0, 0]), np.diag([0.0, 1])))
    with pytest.raises(KatolabError, match="trivial projection excluded"):
        pj.oblique_norms(np.eye(3))
    with pytest.raises(KatolabError, match="not idempotent"):
        pj.oblique_norms(np.array([[1.0, 0], [0, 0.5]]))


def test_oblique_two_by_two():
    Pi = np.array([[1.0, 1.0], [0.0, 0.0]])
    on = pj.oblique_norms(Pi)
    assert on.norm == pytest.approx(np.sqrt(2))
    assert on.complement_norm == pytest.approx(np.sqrt(2))
    assert on.ljance == pytest.approx(np.sqrt(2))


def test_audit_100_pairs():
    a = pj.audit_pairs(100, 8, np.random.default_rng(2024))
    assert a.identities <= 1e-10
    assert max(a.kato_conjugation, a.sgn_conjugation) <= 1e-9
    assert a.trace_integrality <= 1e-8
    assert a.halmos_reconstruction <= 1e-8
    assert a.oblique_equality <= 1e-9
    assert a.ljance_agreement <= 1e-8
    assert a.near_pairs >= 50


pair_inputs = st.tuples(st.integers(2, 7), st.data(), st.integers(0, 2**32 - 1))


@given(pair_inputs)
def test_pair_identities_property(args):
    n, data, seed = args
    k = data.draw(st.integers(0, n))
    l = data.draw(st.integers(0, n))
    P, Q = pj.random_pair(n, k, l, np.random.default_rng(seed))
    r = pj.identity_residuals(P, Q)
    assert max(r.values()) <= 1e-10
    p = pj.pair(P, Q)
    assert pj.trace_index(p) == k - l
    for lam, a, b in pj.spectral_symmetry(p):
        if 1e-8 < abs(lam) < 1 - 1e-8:
            assert a == b


@given(st.integers(2, 7), st.floats(0.0, 0.95), st.integers(0, 2**32 - 1))
def test_near_pair_unitaries(n, dist, seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, n))
    P, Q = pj.near_pair(n, k, dist, rng)
    p = pj.pair(P, Q)
    assert p.normPQ == pytest.approx(dist, abs=1e-9)
    U = pj.kato_unitary(p)
    assert np.allclose(U @ U.conj().T, np.eye(n), atol=1e-10)
    assert np.allclose(U @ p.P @ U.conj().T, p.Q, atol=1e-9)
    S = pj.sgn_unitary(p)
    assert np.allclose(S @ S, np.eye(n), atol=1e-10)
    assert np.allclose(S @ p.P @ S, p.Q, atol=1e-9)


@given(st.integers(2, 7), st.integers(0, 2**32 - 1))
def test_halmos_reconstructs_generic_part(n, seed):
    rng = np.random.default_rng(seed)
    k, l = (int(x) for x in rng.integers(1, n, size=2))
    P, Q = pj.random_pair(n, k, l, rng)
    h = pj.halmos(P, Q)
    G = h.generic_projection()
    assert np.allclose(h.reconstruct_Q(), G @ Q @ G, atol=1e-8)
    m = h.C.shape[0]
    assert np.allclose(h.C @ h.C + h.S @ h.S, np.eye(m), atol=1e-8)
    assert np.allclose(h.C @ h.S, h.S @ h.C, atol=1e-8)
    assert sum(h.corner_dims) + h.generic_dim == n


@given(st.integers(2, 6), st.floats(0.1, 3.0), st.integers(0, 2**32 - 1))
def test_oblique_norm_equality(n, skew, seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, n))
    Pi = pj.random_oblique(n, k, rng, skew)
    if np.linalg.cond(Pi + np.eye(n)) > 1e6:
        return
    on = pj.oblique_norms(Pi)
    assert on.norm == pytest.approx(on.complement_norm, rel=1e-8)
    assert on.norm == pytest.approx(on.ljance, rel=1e-7)
