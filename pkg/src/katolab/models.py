"""Model problems with known closed-form answers.

* Wigner–von Neumann potential with an embedded eigenvalue at energy 1.
* Inverting an eigenfunction into its potential, ``V = psi''/psi + E``.
* Hydrogen cusp ratio ``psi'(0)/psi(0) = -Z/2`` from a radial discretization.
* Hardy and Rellich constants from log-variable discretizations.
* Helium shell count from the hydrogenic thresholds of the finite-mass problem.
* Rank-one models ``-<psi, .> psi + beta x²`` with fractional expansions.
* The ``pi/2`` norm of the s-wave kernel ``log((k+p)/|k-p|)`` and two
  companion constants ``pi²/4`` and ``pi²/8``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike
from scipy.integrate import quad
from scipy.linalg import eig_banded, eigh_tridiagonal
from scipy.optimize import brentq
from scipy.sparse.linalg import eigsh

from .errors import KatolabError, SpectralError
from .operators import Grid1D, radial_channel

__all__ = [
    "RadialSolution",
    "CuspResult",
    "HeliumResult",
    "HalfPiResult",
    "wvn_g",
    "wvn_potential",
    "wvn_eigenfunction",
    "wvn_residual",
    "eigenfunction_to_potential",
    "hydrogen_ground_state",
    "hydrogen_cusp",
    "hardy_constant",
    "rellich_constant",
    "helium_shells",
    "rank_one_secular",
    "rank_one_eigenvalue",
    "rank_one_fit",
    "kato_half_pi",
    "half_pi_top_eigenvalue",
    "a9_integral",
    "odd_sum",
]


# Wigner–von Neumann


_G_SERIES_CUTOFF = 1e-3


def wvn_g(r: ArrayLike) -> np.ndarray:
    """``g(r) = 2r - sin 2r``, by its Taylor series below ``r = 1e-3``.

    The direct form loses about ``log10(1/r²)`` digits to cancellation.
    """
    r = np.asarray(r, dtype=float)
    out = 2 * r - np.sin(2 * r)
    small = np.abs(r) < _G_SERIES_CUTOFF
    if np.any(small):
        x = 2 * r[small]
        # sum_{k=1}^{6} (-1)^{k+1} x^{2k+1} / (2k+1)!
        terms = [(-1) ** (k + 1) * x ** (2 * k + 1) / math.factorial(2 * k + 1) for k in range(1, 7)]
        out = np.array(out, copy=True)
        out[small] = sum(terms)
    return out


def wvn_potential(r: ArrayLike) -> np.ndarray:
    """Potential for which ``sin r / (1 + g(r)²)`` solves ``-u'' + V u = u``.

    ``g(r) = 2r - sin 2r``, so ``g' = 4 sin² r`` and the formula is regular
    wherever ``sin r = 0``; near ``r = 0`` it vanishes like ``r⁴``.  For large ``r``,
    ``V(r) = -8 sin(2r)/r + O(r^-2)``.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise KatolabError("negative radius")
    g = wvn_g(r)
    s, c = np.sin(r), np.cos(r)
    s3 = s**3
    num = g**3 * c - 3 * g**2 * s3 + g * c + s3
    return -32 * s * num / (1 + g**2) ** 2


def wvn_eigenfunction(r: ArrayLike, derivative: int = 0) -> np.ndarray:
    """``u = sin r / (1 + g²)`` or its first or second derivative."""
    r = np.asarray(r, dtype=float)
    g = wvn_g(r)
    g1 = 2 - 2 * np.cos(2 * r)
    g2 = 4 * np.sin(2 * r)
    d = 1 + g**2
    F = 1 / d
    F1 = -2 * g * g1 / d**2
    F2 = -2 * (g1**2 + g * g2) / d**2 + 8 * g**2 * g1**2 / d**3
    s, c = np.sin(r), np.cos(r)
    if derivative == 0:
        return s * F
    if derivative == 1:
        return c * F + s * F1
    if derivative == 2:
        return -s * F + 2 * c * F1 + s * F2
    raise KatolabError("derivative must be 0, 1 or 2")


def wvn_residual(r: ArrayLike) -> np.ndarray:
    """Pointwise ``-u'' + V u - u`` using the analytic second derivative."""
    u = wvn_eigenfunction(r)
    return -wvn_eigenfunction(r, 2) + wvn_potential(r) * u - u


def eigenfunction_to_potential(
    x: ArrayLike, psi: ArrayLike, E: float, exclude_nodes: bool = False
) -> np.ndarray:
    """Potential ``V = psi''/psi + E`` making ``psi`` an eigenfunction.

    Parameters
    ----------
    x : array
        Uniform grid.
    psi : array
        Samples of a trial function on ``x``.
    E : float
        Target eigenvalue.
    exclude_nodes : bool
        Mark points next to a zero or sign change with NaN instead of raising.

    Returns
    -------
    ndarray
        ``V`` at the interior nodes ``x[1:-1]`` (three-point second difference).
    """
    x = np.asarray(x, dtype=float)
    psi = np.asarray(psi, dtype=float)
    if x.shape != psi.shape or x.ndim != 1 or len(x) < 3:
        raise KatolabError("x and psi must be 1-D arrays of equal length >= 3")
    h = np.diff(x)
    if not np.allclose(h, h[0], rtol=1e-9, atol=0):
        raise KatolabError("grid must be uniform")
    h = h[0]
    sign = np.sign(psi)
    bad = (psi == 0) | (sign != sign[0])
    bad_int = bad[1:-1] | bad[:-2] | bad[2:]
    if np.any(bad) and not exclude_nodes:
        raise SpectralError("node in trial eigenfunction")
    with np.errstate(divide="ignore", invalid="ignore"):
        V = (psi[2:] - 2 * psi[1:-1] + psi[:-2]) / (h * h * psi[1:-1]) + E
    if exclude_nodes:
        # flag each sign change against its own local sign rather than psi[0]
        local = (psi[1:-1] == 0) | (np.sign(psi[2:]) != np.sign(psi[1:-1])) | (np.sign(psi[:-2]) != np.sign(psi[1:-1]))
        V = np.where(local, np.nan, V)
    elif np.any(bad_int):
        raise SpectralError("node in trial eigenfunction")
    return V


# hydrogen cusp


@dataclass(frozen=True)
class RadialSolution:
    """Reduced radial function ``u = r psi`` on a grid excluding ``r = 0``."""

    grid: Grid1D
    u: np.ndarray
    E: float

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def psi(self) -> np.ndarray:
        return self.u / self.r


@dataclass(frozen=True)
class CuspResult:
    """Cusp estimate ``psi'(0)/psi(0)`` and its target ``-Z/2``.

    ``reference_error`` is ``max |psi/psi(0) - exp(-Z r/2)|`` over the
    region where the exact ground state exceeds ``1e-6``.
    """

    ratio: float
    target: float
    h: float
    psi0: float
    dpsi0: float
    E: float
    reference_error: float

    @property
    def residual(self) -> float:
        return self.dpsi0 - self.target * self.psi0


def hydrogen_ground_state(R: float, n: int, Z: float, ell: int = 0) -> RadialSolution:
    """Lowest state of ``-d²/dr² + l(l+1)/r² - Z/r`` on ``(0, R)`` with Dirichlet ends."""
    grid = Grid1D(0.0, float(R), int(n))
    T = radial_channel(grid, 3, ell, lambda r: -Z / r)
    w, V = T.eigh(1)
    u = V[:, 0]
    u = u if u[np.argmax(np.abs(u))] > 0 else -u
    return RadialSolution(grid, u, float(w[0]))


def hydrogen_cusp(R: float, n: int, Z: float, ell: int = 0, fit_points: int = 6) -> CuspResult:
    """Spherically averaged cusp ratio at the nucleus.

    ``psi = u/r`` near the origin is fitted by a cubic through the first
    ``fit_points`` nodes and extrapolated to ``r = 0``; the ratio of the
    fitted slope to the fitted value estimates ``-Z/2``.  For ``ell >= 1``
    the spherical average vanishes identically, so value and slope are 0 and
    ``ratio`` is NaN.
    """
    if Z <= 0:
        raise KatolabError("Z must be positive")
    if R < 40.0 / Z:
        raise KatolabError("R too small: need R >= 40/Z so the tail is negligible")
    h = R / (n + 1)
    if h > 1e-2:
        raise KatolabError("grid too coarse: need h <= 1e-2")
    target = -Z / 2
    if ell >= 1:
        return CuspResult(float("nan"), target, h, 0.0, 0.0, float("nan"), 0.0)
    sol = hydrogen_ground_state(R, n, Z)
    u = sol.u
    if sol.E >= 0 or np.any(u[: len(u) - 10] <= 0):
        raise SpectralError("ground-state isolation failed")
    r = sol.r
    k = max(4, int(fit_points))
    c = np.polynomial.polynomial.polyfit(r[:k], u[:k] / r[:k], 3)
    psi0, dpsi0 = float(c[0]), float(c[1])
    ref = np.exp(-Z * r / 2)
    mask = ref > 1e-6
    err = float(np.max(np.abs(sol.psi[mask] / psi0 - ref[mask])))
    return CuspResult(dpsi0 / psi0, target, h, psi0, dpsi0, sol.E, err)


# Hardy and Rellich constants
#
# With r = e^t the radial quadratic forms become constant-coefficient forms
# in t: u = r^{1/2} w turns the Hardy quotient into
#   (int (w' + w/2)² + c w²) / int w²,   c = (nu-1)(nu-3)/4,
# and phi = r^{(4-nu)/2} w turns r² Δ into (D + a)(D + nu/2) with
# a = (4-nu)/2.  Each first-order factor D + c is discretized as
#   ((w_{i+1} - w_i)/h + c (w_{i+1} + w_i)/2)
# on the zero-padded vector, a full convolution, so the discrete quotient
# can never drop below the infimum of the symbol.


def _log_grid(R: float, n: int) -> float:
    if R <= 1:
        raise KatolabError("R must exceed 1")
    if n < 10:
        raise KatolabError("need at least 10 grid points")
    return 2 * math.log(R) / (n + 1)


def hardy_constant(nu: int, R: float = 1e20, n: int = 4000) -> float:
    """Smallest discrete Hardy quotient on ``r in (1/R, R)`` for dimension ``nu``.

    Approaches ``(nu-2)²/4`` from above; the gap is about ``(pi / (2 ln R))²``.
    """
    if nu < 3:
        raise KatolabError("Hardy constant needs nu >= 3")
    h = _log_grid(R, n)
    c = (nu - 1) * (nu - 3) / 4.0
    # D w with D_i = (w_{i+1} - w_i)/h + (w_{i+1} + w_i)/4, w_0 = w_{n+1} = 0
    up = 1 / h + 0.25
    lo = -1 / h + 0.25
    diag = np.full(n, up * up + lo * lo + c)
    off = np.full(n - 1, up * lo)
    w = eigh_tridiagonal(diag, off, select="i", select_range=(0, 0), eigvals_only=True)
    return float(w[0])


def _first_order(h: float, c: float) -> tuple[float, float]:
    # diagonal and subdiagonal of the full-convolution matrix of D + c
    return 1 / h + c / 2, -1 / h + c / 2


def rellich_constant(nu: int, R: float = 1e20, n: int = 4000) -> float:
    """Smallest discrete ``||Δ phi|| / ||r^-2 phi||`` over radial ``phi`` on ``(1/R, R)``.

    Approaches ``nu (nu - 4)/4`` from above.
    """
    if nu < 5:
        raise KatolabError("Rellich constant nonpositive regime: need nu >= 5")
    h = _log_grid(R, n)
    a = (4 - nu) / 2.0
    b = nu / 2.0
    p1, m1 = _first_order(h, b)
    p2, m2 = _first_order(h, a)
    # M = L_a L_b has three bands: M[i+2, i], M[i+1, i], M[i, i]
    d0, d1, d2 = m2 * m1, p2 * m1 + m2 * p1, p2 * p1
    # Gram matrix M^T M is pentadiagonal Toeplitz on n unknowns
    g0 = d0 * d0 + d1 * d1 + d2 * d2
    g1 = d0 * d1 + d1 * d2
    g2 = d0 * d2
    ab = np.zeros((3, n))
    ab[0, 2:] = g2
    ab[1, 1:] = g1
    ab[2, :] = g0
    w = eig_banded(ab, lower=False, select="i", select_range=(0, 0), eigvals_only=True)
    return float(np.sqrt(w[0]))


# Helium


@dataclass(frozen=True)
class HeliumResult:
    """Shell count; ``k_max`` and ``count`` are ``math.inf`` for an infinite nucleus."""

    mass_ratio: float
    alpha: float
    k_max: int | float
    count: int | float

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.count)


def helium_shells(mass_ratio: float = 7294.29954) -> HeliumResult:
    """Number of hydrogenic shells proven to lie below the ionization threshold.

    With ``alpha = 1/(M/m + 1)`` the shell ``k`` counts when
    ``-1/(1 - alpha) < -1 - 1/(4k²)``, i.e. ``4 k² < M/m``.  Shells carry
    ``k²`` states, so the count is ``k(k+1)(2k+1)/6``.
    """
    M = float(mass_ratio)
    if math.isnan(M) or M <= 0:
        raise KatolabError("invalid masses")
    if math.isinf(M):
        return HeliumResult(M, 0.0, math.inf, math.inf)
    k = int(math.isqrt(int(M)) // 2) + 1
    while k > 0 and 4 * k * k >= M:
        k -= 1
    while 4 * (k + 1) ** 2 < M:
        k += 1
    return HeliumResult(M, 1.0 / (M + 1.0), k, k * (k + 1) * (2 * k + 1) // 6)


# rank-one models
#
# A(beta) = -<psi, .> psi + beta x² has an eigenvalue E = -e < 0 iff
#   int |psi|² / (beta x² + e) dx = 1.
# Subtracting the normalization gives the cancellation-free form
#   G(e) = int |psi|² (1 - e - beta x²) / (beta x² + e) dx = 0,
# evaluated after x = tan(theta) on (0, pi/2) (the weights are even).

_RANK_ONE = {
    # |psi(tan t)|² dx/dt on (0, pi/2), doubled for the even extension
    "inv_sqrt": lambda t: (2 / np.pi) * np.ones_like(t),
    "inv": lambda t: (4 / np.pi) * np.cos(t) ** 2,
    "log_case": lambda t: 2 * np.sin(t) * np.cos(t),
}

_FIT_BASIS = {
    "inv_sqrt": (("sqrt", lambda b: np.sqrt(b)), ("linear", lambda b: b)),
    "inv": (("linear", lambda b: b), ("three_halves", lambda b: b**1.5)),
    "log_case": (("blogb", lambda b: b * np.log(b)), ("linear", lambda b: b)),
}


def _weight(psi_kind: str):
    try:
        return _RANK_ONE[psi_kind]
    except KeyError:
        raise KatolabError(f"unknown psi_kind {psi_kind!r}; choose from {sorted(_RANK_ONE)}") from None


def rank_one_secular(beta: float, E: float, psi_kind: str = "inv_sqrt") -> float:
    """``int |psi|²/(beta x² - E) dx - 1`` for ``E < 0``."""
    if beta <= 0:
        raise KatolabError("beta must be positive")
    if E >= 0:
        raise KatolabError("E must be negative")
    w = _weight(psi_kind)
    e = -E
    half = np.pi / 2

    def f(t):
        x2 = np.tan(t) ** 2
        return w(t) * (1 - e - beta * x2) / (beta * x2 + e)

    # the integrand changes scale where beta tan² t ~ e
    knee = float(np.arctan(np.sqrt(e / beta)))
    pts = sorted({min(max(knee, 1e-12), half - 1e-12), half - math.sqrt(beta)})
    val, _ = quad(f, 0.0, half, points=pts, epsabs=1e-13, epsrel=1e-12, limit=400)
    return float(val)


def rank_one_eigenvalue(beta: float, psi_kind: str = "inv_sqrt") -> float:
    """Eigenvalue ``E(beta)`` near ``-1`` of ``-<psi, .> psi + beta x²``.

    ``psi_kind`` selects ``c (1+x²)^{-1/2}`` (``inv_sqrt``),
    ``c |x|^{1/2} (1+x²)^{-1}`` (``log_case``) or ``c (1+x²)^{-1}`` (``inv``).
    """
    lo, hi = 1e-12, 2.0
    g_lo = rank_one_secular(beta, -lo, psi_kind)
    g_hi = rank_one_secular(beta, -hi, psi_kind)
    if not (g_lo > 0 > g_hi):
        raise SpectralError("eigenvalue absorbed")
    e = brentq(lambda e: rank_one_secular(beta, -e, psi_kind), lo, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps)
    return -float(e)


@dataclass(frozen=True)
class RankOneFit:
    psi_kind: str
    betas: np.ndarray
    energies: np.ndarray
    coefficients: dict


def rank_one_fit(psi_kind: str = "inv_sqrt", betas: Sequence[float] | None = None) -> RankOneFit:
    """Least-squares fit of ``E(beta) + 1`` to the two leading terms for ``psi_kind``.

    Bases: ``(beta^{1/2}, beta)`` for ``inv_sqrt``, ``(beta, beta^{3/2})``
    for ``inv`` and ``(beta log beta, beta)`` for ``log_case``.
    """
    _weight(psi_kind)
    b = np.logspace(-6, -3, 25) if betas is None else np.asarray(betas, dtype=float)
    E = np.array([rank_one_eigenvalue(x, psi_kind) for x in b])
    basis = _FIT_BASIS[psi_kind]
    X = np.column_stack([f(b) for _, f in basis])
    coef, *_ = np.linalg.lstsq(X, E + 1.0, rcond=None)
    return RankOneFit(psi_kind, b, E, {name: float(c) for (name, _), c in zip(basis, coef)})


# s-wave kernel log((k+p)/|k-p|)
#
# With k = e^x, p = e^y and the symmetrized weight (kp)^{1/2} dx the kernel
# (1/pi)(kp)^{-1/2} log((k+p)/|k-p|) p dy becomes the convolution kernel
# (1/pi) log coth(|x-y|/2), whose integral over the line is pi/2.


@dataclass(frozen=True)
class HalfPiResult:
    top_eigenvalue: float
    a9_integral: float
    odd_sum: float


def _log_coth_cell(d: float) -> float:
    # (1/pi) * integral of log coth(|u|/2) over a cell of width d centred at 0
    val, _ = quad(lambda u: math.log(1 / math.tanh(u / 2)), 0.0, d / 2, limit=200)
    return 2 * val / math.pi


def half_pi_top_eigenvalue(k_min: float = 1e-10, k_max: float = 1e10, n_log: int = 2000) -> float:
    """Largest eigenvalue of the discretized s-wave kernel on ``[k_min, k_max]``."""
    if not (0 < k_min < k_max):
        raise KatolabError("need 0 < k_min < k_max")
    if n_log < 10:
        raise KatolabError("need n_log >= 10")
    x = np.linspace(math.log(k_min), math.log(k_max), n_log)
    dx = x[1] - x[0]
    d = np.abs(np.arange(n_log)) * dx
    col = np.empty(n_log)
    col[0] = _log_coth_cell(dx)
    col[1:] = (dx / math.pi) * np.log(1 / np.tanh(d[1:] / 2))
    idx = np.arange(n_log)
    T = col[np.abs(idx[:, None] - idx[None, :])]
    if n_log <= 400:
        return float(np.linalg.eigvalsh(T)[-1])
    top = eigsh(T, k=1, which="LA", return_eigenvectors=False, tol=1e-12)
    return float(top[0])


def a9_integral() -> float:
    """``int_0^1 x^{-1} log((1+x)/(1-x)) dx`` by adaptive quadrature.

    With ``x = tanh t`` the integrand becomes ``4t / sinh 2t`` on ``(0, inf)``;
    it is below ``1e-30`` past ``t = 40``.
    """
    val, _ = quad(lambda t: 4 * t / math.sinh(2 * t) if t > 0 else 2.0, 0.0, 40.0, epsabs=1e-13, epsrel=1e-12, limit=200)
    return float(val)


def odd_sum(N: int = 10**6) -> float:
    """``sum_{n<=N} (2n-1)^{-2}`` plus the tail estimate ``1/(4N)``."""
    n = np.arange(1, N + 1, dtype=float)
    return math.fsum(1.0 / (2 * n - 1) ** 2) + 1.0 / (4 * N)


def kato_half_pi(k_min: float = 1e-10, k_max: float = 1e10, n_log: int = 2000) -> HalfPiResult:
    """Top eigenvalue of the s-wave kernel together with the two series constants.

    Raises
    ------
    SpectralError
        ``"spectral truncation: widen momentum window"`` unless
        ``k_min <= 1e-3`` and ``k_max >= 1e3``.
    """
    if k_min > 1e-3 or k_max < 1e3:
        raise SpectralError("spectral truncation: widen momentum window")
    return HalfPiResult(half_pi_top_eigenvalue(k_min, k_max, n_log), a9_integral(), odd_sum())
