import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from katolab import models as md
from katolab.errors import KatolabError, SpectralError


def test_helium_shell_count():
    r = md.helium_shells(7294.29954)
    assert (r.k_max, r.count) == (42, 25585)
    assert md.helium_shells(99.0).count == 30
    assert md.helium_shells(math.inf).unbounded
    with pytest.raises(KatolabError, match="invalid masses"):
        md.helium_shells(-1.0)


@given(st.floats(1.0, 1e6), st.floats(1.0, 1e6))
def test_helium_monotone(a, b):
    lo, hi = sorted((a, b))
    assert md.helium_shells(lo).k_max <= md.helium_shells(hi).k_max


def _wvn_oracle():
    r = sp.Symbol("r", positive=True)
    g = 2 * r - sp.sin(2 * r)
    u = sp.sin(r) / (1 + g**2)
    V = sp.diff(u, r, 2) / u + 1
    return sp.lambdify(r, V, "mpmath"), sp.lambdify(r, u, "numpy")


def test_wvn_potential_matches_symbolic_inversion():
    import mpmath

    V, u = _wvn_oracle()
    mpmath.mp.dps = 40
    try:
        for x in (0.05, 0.7, 1.9, np.pi, 7.3, 31.0):
            assert float(md.wvn_potential(x)) == pytest.approx(float(V(mpmath.mpf(x))), rel=1e-9, abs=1e-12)
            assert float(md.wvn_eigenfunction(x)) == pytest.approx(float(u(x)), rel=1e-12)
    finally:
        mpmath.mp.dps = 15


def test_wvn_residual_and_tail():
    r = np.linspace(1e-3, 100.0, 200_001)
    assert np.max(np.abs(md.wvn_residual(r))) <= 1e-6
    t = np.linspace(10, 100, 9001)
    c = np.abs(md.wvn_potential(t) + 8 * np.sin(2 * t) / t) * t**2
    assert c.max() < 40
    assert c[t > 50].max() <= c.max()


def test_wvn_small_r_branch_is_continuous():
    x = np.array([1e-3 * (1 - 1e-9), 1e-3 * (1 + 1e-9)])
    g = md.wvn_g(x)
    assert g[0] == pytest.approx(g[1], rel=1e-6)
    assert md.wvn_g(np.array([1e-5]))[0] == pytest.approx(4 * (1e-5) ** 3 / 3, rel=1e-9)
    with pytest.raises(KatolabError, match="negative radius"):
        md.wvn_potential(-1.0)


def test_eigenfunction_to_potential_recovers_oscillator():
    x = np.linspace(-3, 3, 601)
    V = md.eigenfunction_to_potential(x, np.exp(-x**2 / 2), 1.0)
    assert np.max(np.abs(V - x[1:-1] ** 2)) < 1e-3
    with pytest.raises(SpectralError, match="node in trial eigenfunction"):
        md.eigenfunction_to_potential(x, x, 1.0)


@pytest.mark.parametrize("Z", [1.0, 2.0])
def test_hydrogen_cusp(Z):
    h = 5e-3
    R = 80.0 / Z
    c = md.hydrogen_cusp(R, int(round(R / h)) - 1, Z)
    assert abs(c.ratio + Z / 2) <= 5 * h
    assert c.reference_error <= 1e-4
    assert c.E == pytest.approx(-Z**2 / 4, rel=1e-4)


def test_cusp_p_wave_has_no_cusp():
    c = md.hydrogen_cusp(40.0, 3999, 1.0, ell=1)
    assert math.isnan(c.ratio)


@pytest.mark.parametrize("nu,target", [(3, 0.25), (4, 1.0), (5, 2.25)])
def test_hardy_constant(nu, target):
    v = md.hardy_constant(nu)
    assert target - 1e-6 <= v <= target * 1.02


def test_hardy_truncation_deficit():
    # the finite window costs (pi / (2 ln R))^2
    R = 1e4
    assert md.hardy_constant(3, R=R) == pytest.approx(0.25 + (np.pi / (2 * np.log(R))) ** 2, rel=1e-3)


@pytest.mark.parametrize("nu", [5, 6, 8])
def test_rellich_constant(nu):
    target = nu * (nu - 4) / 4
    v = md.rellich_constant(nu)
    assert target - 1e-6 <= v <= target * 1.05


def test_rellich_regime():
    with pytest.raises(KatolabError, match="need nu >= 5"):
        md.rellich_constant(4)


def test_half_pi_constants():
    r = md.kato_half_pi()
    assert r.top_eigenvalue == pytest.approx(np.pi / 2, rel=0.01)
    assert r.top_eigenvalue < np.pi / 2
    assert r.a9_integral == pytest.approx(np.pi**2 / 4, abs=1e-6)
    assert r.odd_sum == pytest.approx(np.pi**2 / 8, abs=1e-8)
    with pytest.raises(SpectralError, match="widen momentum window"):
        md.kato_half_pi(1e-2, 1e2)


def test_half_pi_window_monotone():
    a = md.half_pi_top_eigenvalue(1e-2, 1e2, 200)
    b = md.half_pi_top_eigenvalue(1e-4, 1e4, 400)
    assert a < b < np.pi / 2


def test_angular_reduction_of_the_kernel():
    # integral over the sphere of |k - p|^-2 equals (2 pi / kp) log((k+p)/|k-p|)
    from scipy.integrate import quad

    k, p = 1.3, 0.4
    val, _ = quad(lambda c: 2 * np.pi / (k * k + p * p - 2 * k * p * c), -1, 1)
    assert val == pytest.approx(2 * np.pi / (k * p) * np.log((k + p) / abs(k - p)), rel=1e-10)


def test_rank_one_fits():
    f = md.rank_one_fit("inv_sqrt")
    assert f.coefficients["sqrt"] == pytest.approx(1.0, abs=1e-2)
    g = md.rank_one_fit("inv")
    assert g.coefficients["linear"] == pytest.approx(1.0, abs=1e-2)
    h = md.rank_one_fit("log_case")
    assert h.coefficients["blogb"] < 0


def test_rank_one_inv_sqrt_closed_form():
    # for |psi|^2 = 1/(pi(1+x^2)) the secular equation is e(1 + sqrt(beta/e))... solved exactly:
    # int w/(beta x^2 + e) = 1/(sqrt(e)(sqrt(e) + sqrt(beta))) = 1  =>  sqrt(e) = (-sqrt(beta) + sqrt(beta + 4))/2
    for beta in (1e-4, 1e-2, 0.3):
        s = (-math.sqrt(beta) + math.sqrt(beta + 4)) / 2
        assert md.rank_one_eigenvalue(beta, "inv_sqrt") == pytest.approx(-s * s, rel=1e-10)


@given(st.floats(1e-5, 0.5), st.sampled_from(["inv_sqrt", "inv", "log_case"]))
def test_secular_function_strictly_monotone(beta, kind):
    # dF/dE = int |psi|^2 / (beta x^2 - E)^2 > 0, so the root is unique
    E = -np.array([1.8, 1.2, 0.9, 0.5, 0.1])
    F = [md.rank_one_secular(beta, e, kind) for e in E]
    assert all(b > a for a, b in zip(F, F[1:]))
