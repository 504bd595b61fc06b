import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from katolab import asymptotics as asy
from katolab.errors import KatolabError
from katolab.operators import Grid1D, discretize_1d, richardson


def test_pade_simple_cases():
    r = asy.pade(asy.named_series("alternating", 4), 1, 0)
    assert r(1.0) == pytest.approx(0.5)
    assert asy.pade(asy.named_series("exp", 4), 1, 1)(1.0) == pytest.approx(3.0)


def test_pade_matches_mpmath():
    c = [1 / math.factorial(k) for k in range(9)]
    p, q = mpmath.pade(c, 4, 4)
    r = asy.pade(asy.PowerSeries(np.array(c)), 4, 4)
    for z in (0.3, 1.0, 2.0):
        assert r(z) == pytest.approx(float(mpmath.polyval(p[::-1], z) / mpmath.polyval(q[::-1], z)), rel=1e-12)


def test_pade_of_zero_series_is_zero():
    r = asy.pade(asy.named_series("zero", 6), 3, 3)
    assert not np.any(r.P_coeffs)
    assert r(0.7) == 0


def test_pade_taylor_reproduces_series():
    s = asy.named_series("euler", 12)
    r = asy.pade(s, 5, 6)
    assert np.allclose(r.taylor(11), s.coeffs[:12], rtol=1e-9)


def test_euler_borel_sum():
    oracle = float(mpmath.e * mpmath.e1(1))
    b = asy.borel_sum(asy.named_series("euler", 30), 1.0)
    assert float(b) == pytest.approx(oracle, abs=1e-10)
    assert float(b) == pytest.approx(0.596347, abs=1e-5)


def test_geometric_borel_taylor():
    b = asy.borel_sum(asy.named_series("geometric", 60), 0.5, continuation="taylor")
    assert float(b) == pytest.approx(2.0, abs=1e-8)


def test_zero_series_borel():
    assert float(asy.borel_sum(asy.named_series("zero", 10), 1.0)) == 0.0


def test_quartic_pade_vs_operator():
    beta = 0.1
    e = [discretize_1d(Grid1D(-8, 8, n), lambda x: x**2 + beta * x**4).eigvalsh(1)[0] for n in (2000, 4001)]
    oracle = richardson(e[0], e[1])
    s = asy.bender_wu(20)
    assert asy.pade(s, 8, 8)(beta) == pytest.approx(oracle, abs=1e-3)
    assert float(asy.borel_sum(s, beta)) == pytest.approx(oracle, abs=1e-3)


def test_bender_wu_exact_coefficients():
    s = asy.bender_wu(6)
    assert s.exact[:6] == (
        Fraction(1),
        Fraction(3, 4),
        Fraction(-21, 16),
        Fraction(333, 64),
        Fraction(-30885, 1024),
        Fraction(916731, 4096),
    )


def test_bender_wu_large_order():
    s = asy.bender_wu(25)
    assert abs(asy.bender_wu_ratio(25, s) - 1) <= 0.10
    sign, logmag = asy.bender_wu_asymptotic(25, log=True)
    assert sign == np.sign(s.coeffs[25])
    assert logmag == pytest.approx(math.log(abs(s.coeffs[25])), abs=0.1)


def test_bender_wu_truncation_guard():
    with pytest.raises(KatolabError, match="truncation contaminates order N"):
        asy.bender_wu(10, basis_size=20)


def test_hankel_stieltjes():
    assert all(asy.hankel_stieltjes_test(asy.named_series("euler", 8), 4))
    assert asy.hankel_stieltjes_test(asy.named_series("geometric", 6), 3) == [True, False, False]


def test_lie_trotter_first_order():
    A = np.array([[0.0, 1.0], [1.0, 0.0]])
    B = np.array([[1.0, 0.0], [0.0, -1.0]])
    ns = [10, 20, 40, 80, 160]
    errs = [asy.lie_trotter_error(A, B, 1.0, n) for n in ns]
    assert abs(np.polyfit(np.log(ns), np.log(errs), 1)[0] + 1) <= 0.1
    assert asy.lie_trotter_error(A, A, 1.0, 3) <= 1e-13


def test_alternating_projections_line_pair():
    from katolab.projections import line_pair

    P, Q = line_pair(0.3)
    d = [asy.alternating_projection_limit(P, Q, n)[1] for n in range(1, 201)]
    assert all(b <= a + 1e-15 for a, b in zip(d, d[1:]))
    assert d[-1] <= 1e-6


coeff_lists = st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=8)


@given(coeff_lists, coeff_lists, st.floats(-0.5, 0.5))
def test_power_series_ring(a, b, z):
    A, B = asy.PowerSeries(np.array(a)), asy.PowerSeries(np.array(b))
    m = min(A.N, B.N)
    assert (A + B)(z, m) == pytest.approx(A(z, m) + B(z, m), abs=1e-9)
    assert (A - A).is_zero()
    assert (A * B)(z, m) == pytest.approx(np.polyval(np.polymul(a[::-1], b[::-1]), z) - _tail(a, b, m, z), abs=1e-8)


def _tail(a, b, m, z):
    full = np.polymul(a[::-1], b[::-1])[::-1]
    return sum(full[k] * z**k for k in range(m + 1, len(full)))


@given(st.lists(st.floats(-2, 2), min_size=2, max_size=3), st.lists(st.floats(-0.9, 0.9), min_size=1, max_size=2))
def test_pade_recovers_rational_functions(num, den_roots):
    # q(z) = prod (1 - r z); the [N, M] approximant with N = deg q reproduces p/q
    q = np.array([1.0])
    for r in den_roots:
        q = np.polymul(q, [-r, 1.0])
    p = np.array(num[::-1])
    terms = 12
    qa = q[::-1]
    pa = np.array(num)
    c = np.zeros(terms + 1)
    for k in range(terms + 1):
        acc = pa[k] if k < len(pa) else 0.0
        for j in range(1, min(k, len(qa) - 1) + 1):
            acc -= qa[j] * c[k - j]
        c[k] = acc
    try:
        r = asy.pade(asy.PowerSeries(c), len(qa) - 1, len(pa) - 1)
    except KatolabError:
        return
    z = 0.3
    exact = np.polyval(p, z) / np.polyval(q, z)
    assert r(z) == pytest.approx(exact, rel=1e-6, abs=1e-8)
