"""Divergent series and product-formula limits.

Contents
--------
* :class:`PowerSeries` and :func:`pade` rational approximants ``f^{[N,M]}``
  with ``deg Q = N`` and ``deg P = M``.
* :func:`borel_sum`: Laplace integral of the (order-``m``) Borel transform,
  continued past its disc of convergence by Padé or used as a polynomial.
* :func:`hankel_stieltjes_test`: positivity of moment Hankel matrices.
* :func:`bender_wu`: exact ground-state coefficients of ``p² + x² + beta x⁴``
  and :func:`bender_wu_asymptotic`, their factorial large-order growth.
* :func:`lie_trotter_error` and :func:`alternating_projection_limit`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np
from numpy.typing import ArrayLike
from scipy.linalg import expm
from scipy.special import roots_genlaguerre

from .errors import KatolabError
from .perturbation import rs_recursion

__all__ = [
    "PowerSeries",
    "RationalApproximant",
    "BorelResult",
    "pade",
    "pade_table_diagonal",
    "borel_sum",
    "hankel_stieltjes_test",
    "hankel_min_eigenvalues",
    "bender_wu",
    "bender_wu_asymptotic",
    "bender_wu_ratio",
    "oscillator_matrices",
    "lie_trotter_error",
    "alternating_projection_limit",
    "named_series",
]


@dataclass(frozen=True)
class PowerSeries:
    """Truncated power series ``sum_n a_n z**n``, ``n = 0..N``.

    ``exact`` optionally holds rational coefficients the floats came from.
    """

    coeffs: np.ndarray
    exact: tuple[Fraction, ...] | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs))
        if c.ndim != 1 or c.size == 0:
            raise KatolabError("series needs at least one coefficient")
        if not np.iscomplexobj(c):
            c = c.astype(float)
        if not np.all(np.isfinite(c)):
            raise KatolabError("series coefficients must be finite")
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_fractions(cls, fr: Sequence[Fraction]) -> "PowerSeries":
        return cls(np.array([float(f) for f in fr]), exact=tuple(fr))

    @property
    def N(self) -> int:
        return len(self.coeffs) - 1

    def __len__(self) -> int:
        return len(self.coeffs)

    def __getitem__(self, n):
        return self.coeffs[n]

    def __call__(self, z, order: int | None = None):
        """Partial sum through ``order`` (default ``N``)."""
        c = self.coeffs[: (self.N if order is None else order) + 1]
        return np.polynomial.polynomial.polyval(z, c)

    def _binary(self, other, op):
        if isinstance(other, PowerSeries):
            n = min(len(self), len(other))
            return PowerSeries(op(self.coeffs[:n], other.coeffs[:n]))
        return NotImplemented

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __neg__(self):
        return PowerSeries(-self.coeffs)

    def __mul__(self, other):
        if isinstance(other, PowerSeries):
            n = min(len(self), len(other))
            return PowerSeries(np.convolve(self.coeffs[:n], other.coeffs[:n])[:n])
        return PowerSeries(self.coeffs * other)

    __rmul__ = __mul__

    def truncate(self, N: int) -> "PowerSeries":
        ex = self.exact[: N + 1] if self.exact is not None else None
        return PowerSeries(self.coeffs[: N + 1], exact=ex)

    def is_zero(self) -> bool:
        return bool(np.all(self.coeffs == 0))


@dataclass(frozen=True)
class RationalApproximant:
    """``P(z) / Q(z)`` with ``Q(0) = 1``; coefficients in ascending powers."""

    P_coeffs: np.ndarray
    Q_coeffs: np.ndarray

    @property
    def M(self) -> int:
        return len(self.P_coeffs) - 1

    @property
    def N(self) -> int:
        return len(self.Q_coeffs) - 1

    def __call__(self, z):
        pv = np.polynomial.polynomial.polyval(z, self.P_coeffs)
        qv = np.polynomial.polynomial.polyval(z, self.Q_coeffs)
        return pv / qv

    def poles(self) -> np.ndarray:
        q = np.trim_zeros(np.asarray(self.Q_coeffs), "b")
        if len(q) <= 1:
            return np.array([], dtype=complex)
        return np.polynomial.polynomial.polyroots(q).astype(complex)

    def taylor(self, K: int) -> np.ndarray:
        """First ``K + 1`` Taylor coefficients of ``P/Q``."""
        q = np.asarray(self.Q_coeffs)
        p = np.zeros(K + 1, dtype=np.result_type(self.P_coeffs, q))
        m = min(K, self.M)
        p[: m + 1] = self.P_coeffs[: m + 1]
        out = np.zeros(K + 1, dtype=p.dtype)
        for k in range(K + 1):
            acc = p[k]
            for j in range(1, min(k, self.N) + 1):
                acc = acc - q[j] * out[k - j]
            out[k] = acc
        return out


PADE_SINGULAR_TOL = 1e-12


def _as_series(series) -> PowerSeries:
    return series if isinstance(series, PowerSeries) else PowerSeries(np.asarray(series))


def pade(series, N: int, M: int) -> RationalApproximant:
    """Padé approximant with denominator degree ``N`` and numerator degree ``M``.

    The Taylor expansion of the result matches ``a_0 .. a_{N+M}``.

    Raises
    ------
    KatolabError
        ``"Padé block degeneracy"`` when the denominator system is singular
        to relative precision ``1e-12``.
    """
    s = _as_series(series)
    if N < 0 or M < 0:
        raise KatolabError("Padé degrees must be nonnegative")
    if len(s) < N + M + 1:
        raise KatolabError(f"need {N + M + 1} coefficients for [{N},{M}], have {len(s)}")
    a = np.asarray(s.coeffs[: N + M + 1])
    dtype = np.result_type(a, float)
    if s.is_zero() or not np.any(a):
        return RationalApproximant(np.zeros(M + 1, dtype=dtype), np.r_[1.0, np.zeros(N)].astype(dtype))
    # rescale z -> z/rho so the coefficients have comparable size
    roots = [abs(a[k]) ** (1.0 / k) for k in range(1, len(a)) if a[k] != 0]
    rho = 1.0 / max(roots) if roots else 1.0
    # keep rho**k finite when coefficients are near the float limits
    lim = 10.0 ** (150.0 / max(len(a) - 1, 1))
    rho = min(max(rho, 1.0 / lim), lim)
    b = a * rho ** np.arange(len(a))
    if N == 0:
        q = np.ones(1, dtype=dtype)
    else:
        def coef(i):
            return b[i] if i >= 0 else 0.0

        C = np.array([[coef(M + 1 + r - j) for j in range(1, N + 1)] for r in range(N)], dtype=dtype)
        rhs = -np.array([b[M + 1 + r] for r in range(N)], dtype=dtype)
        sv = np.linalg.svd(C, compute_uv=False)
        if sv[0] == 0 or sv[-1] / sv[0] < PADE_SINGULAR_TOL:
            raise KatolabError(f"Padé block degeneracy at [{N},{M}]")
        q = np.r_[1.0, np.linalg.solve(C, rhs)].astype(dtype)
    p = np.array([sum(q[j] * b[k - j] for j in range(0, min(k, N) + 1)) for k in range(M + 1)], dtype=dtype)
    scale_p = rho ** -np.arange(M + 1, dtype=float)
    scale_q = rho ** -np.arange(N + 1, dtype=float)
    return RationalApproximant(p * scale_p, q * scale_q)


def pade_table_diagonal(series, z, Ns: Sequence[int]) -> np.ndarray:
    """Values ``f^{[N,N]}(z)`` for each ``N`` in ``Ns``."""
    return np.array([pade(series, N, N)(z) for N in Ns])


@dataclass(frozen=True)
class BorelResult:
    value: float
    error: float
    method: str
    approximant: RationalApproximant | None = None

    def __float__(self) -> float:
        return float(np.real(self.value))


BOREL_NODES = 64


def _laguerre(n: int):
    x, w = roots_genlaguerre(n, 0.0)
    return x, w


def _borel_transform(s: PowerSeries, m: int) -> np.ndarray:
    c = np.asarray(s.coeffs)
    out = np.empty(len(c), dtype=np.result_type(c, float))
    for n, an in enumerate(c):
        out[n] = an / math.factorial(m * n) if an != 0 else 0.0
    return out


def _diagonal_pade_descending(g: np.ndarray) -> RationalApproximant:
    K = len(g) - 1
    for N in range(K // 2, -1, -1):
        try:
            return pade(PowerSeries(g), N, N)
        except KatolabError:
            continue
    raise KatolabError("Borel continuation obstructed: no nonsingular diagonal Padé")


def borel_sum(
    series,
    z: float,
    order_m: int = 1,
    continuation: str = "pade",
    nodes: int = BOREL_NODES,
) -> BorelResult:
    """Borel sum ``int_0^inf e^{-t} g(z t^m) dt`` of a power series.

    ``g(w) = sum_n a_n w^n / (m n)!`` is the order-``m`` Borel transform.
    With ``continuation="pade"`` it is replaced by its highest nonsingular
    diagonal Padé approximant; with ``"taylor"`` the truncated polynomial is
    integrated as is (exact for convergent series with enough terms).

    The error estimate is the change when the Gauss–Laguerre rule goes from
    ``nodes`` to ``2 * nodes`` points.

    Raises
    ------
    KatolabError
        ``"Borel continuation obstructed"`` if a Padé pole sits on the
        integration ray inside the quadrature range.
    """
    if int(order_m) != order_m or order_m < 1:
        raise KatolabError("order_m must be a positive integer")
    s = _as_series(series)
    if s.is_zero():
        return BorelResult(0.0, 0.0, continuation)
    g = _borel_transform(s, order_m)
    x1, w1 = _laguerre(nodes)
    x2, w2 = _laguerre(2 * nodes)
    approx = None
    if continuation == "pade":
        approx = _diagonal_pade_descending(g)
        t_max = x2[-1]
        for pole in approx.poles():
            if z == 0:
                break
            u = pole / z  # pole sits at z * t^m with t^m = u
            if abs(u.imag) <= 1e-8 * max(1.0, abs(u)) and 0 <= u.real <= t_max**order_m:
                raise KatolabError(f"Borel continuation obstructed: pole at w={pole:.6g}")
        gfun = approx
    elif continuation == "taylor":
        def gfun(w):
            return np.polynomial.polynomial.polyval(w, g)
    else:
        raise KatolabError(f"unknown continuation {continuation!r}")
    v1 = np.sum(w1 * gfun(z * x1**order_m))
    v2 = np.sum(w2 * gfun(z * x2**order_m))
    val = v2 if np.iscomplexobj(v2) and abs(np.imag(v2)) > 0 else float(np.real(v2))
    return BorelResult(val, float(abs(v2 - v1)), continuation, approx)


def hankel_min_eigenvalues(series, k_max: int) -> np.ndarray:
    """Smallest eigenvalue of each diagonally scaled moment Hankel matrix.

    Moments are ``mu_n = (-1)^n a_n``.  A zero diagonal entry gives ``0``.
    """
    s = _as_series(series)
    if np.iscomplexobj(s.coeffs):
        raise KatolabError("Hankel test needs a real series")
    if k_max < 1 or 2 * k_max > s.N:
        raise KatolabError(f"k_max={k_max} needs a series of order >= {2 * k_max}")
    mu = np.array([(-1) ** n * c for n, c in enumerate(s.coeffs)], dtype=float)
    out = np.empty(k_max)
    for k in range(1, k_max + 1):
        H = np.array([[mu[i + j] for j in range(k)] for i in range(k)])
        d = np.diag(H)
        if np.any(d <= 0):
            out[k - 1] = min(0.0, float(d.min()))
            continue
        D = 1 / np.sqrt(d)
        out[k - 1] = float(np.linalg.eigvalsh(H * D[:, None] * D[None, :])[0])
    return out


def hankel_stieltjes_test(series, k_max: int, tol: float = 1e-10) -> list[bool]:
    """Strict positive definiteness of ``[mu_{i+j}]`` for sizes ``1..k_max``.

    A series of Stieltjes has every such matrix positive definite (or
    semi-definite for finitely supported measures, reported as ``False``).
    """
    return [bool(v > tol) for v in hankel_min_eigenvalues(series, k_max)]


# quartic oscillator


def _y_apply(v: np.ndarray) -> np.ndarray:
    # y = a + a† on the unnormalized basis |n) = (a†)^n |0>: y|n) = n|n-1) + |n+1)
    n = len(v)
    out = np.empty(n, dtype=object)
    out[:] = Fraction(0)
    for k in range(n):
        c = v[k]
        if c == 0:
            continue
        if k > 0:
            out[k - 1] += k * c
        if k + 1 < n:
            out[k + 1] += c
        elif c != 0:
            raise KatolabError("truncation contaminates order N")
    return out


def bender_wu(N: int, basis_size: int | None = None) -> PowerSeries:
    """Ground-state series ``E(beta) = sum a_n beta^n`` of ``p² + x² + beta x⁴``.

    Computed exactly in rational arithmetic by the Rayleigh–Schrödinger
    recursion on the oscillator basis, where ``x⁴ = (a + a†)⁴/4`` and the
    level spacing is 2 (``E_0 = 1``).

    Parameters
    ----------
    N : int
        Highest order.
    basis_size : int, optional
        Number of oscillator states kept; at least ``4N + 8``.
    """
    if N < 1:
        raise KatolabError("order N must be >= 1")
    size = 4 * N + 8 if basis_size is None else int(basis_size)
    if size < 4 * N + 8:
        raise KatolabError("truncation contaminates order N")
    zero = np.empty(size, dtype=object)
    zero[:] = Fraction(0)
    phi = zero.copy()
    phi[0] = Fraction(1)
    inv_gap = np.array([Fraction(0)] + [Fraction(1, 2 * m) for m in range(1, size)], dtype=object)

    def apply_B(v):
        return _y_apply(_y_apply(_y_apply(_y_apply(v)))) * Fraction(1, 4)

    E, _ = rs_recursion(
        Fraction(1),
        phi,
        apply_B=apply_B,
        apply_S=lambda v: v * inv_gap,
        overlap=lambda v: v[0],  # |0) is normalized and orthogonal to |n), n > 0
        N=N,
    )
    return PowerSeries.from_fractions(E)


def oscillator_matrices(size: int) -> tuple[np.ndarray, np.ndarray]:
    """``(H0, x⁴)`` in the normalized oscillator basis, truncated to ``size`` states."""
    a = np.diag(np.sqrt(np.arange(1, size, dtype=float)), 1)
    x = (a + a.T) / np.sqrt(2.0)
    x2 = x @ x
    return np.diag(2.0 * np.arange(size) + 1.0), x2 @ x2


def _bw_asym_mp(n: int):
    return (
        4
        * mpmath.pi ** mpmath.mpf(-1.5)
        * (-1) ** (n + 1)
        * mpmath.mpf(1.5) ** (n + mpmath.mpf(0.5))
        * mpmath.gamma(n + mpmath.mpf(0.5))
    )


def bender_wu_asymptotic(n: int, log: bool = False):
    """Large-order estimate ``4 pi^{-3/2} (-1)^{n+1} (3/2)^{n+1/2} Gamma(n+1/2)``.

    Returns a float, or ``(sign, log|value|)`` when ``log=True`` or when the
    value does not fit in a double.
    """
    if n < 1:
        raise KatolabError("n must be >= 1")
    sign = 1 if (n + 1) % 2 == 0 else -1
    logmag = (
        math.log(4.0)
        - 1.5 * math.log(math.pi)
        + (n + 0.5) * math.log(1.5)
        + float(mpmath.loggamma(n + 0.5))
    )
    if log or logmag > 700:
        return sign, logmag
    with mpmath.workdps(30):
        return float(_bw_asym_mp(n))


def bender_wu_ratio(n: int, series: PowerSeries | None = None) -> float:
    """``a_n`` divided by its large-order estimate, in extended precision."""
    s = series if series is not None and series.N >= n else bender_wu(n)
    with mpmath.workdps(40):
        if s.exact is not None:
            fr = s.exact[n]
            an = mpmath.mpf(fr.numerator) / fr.denominator
        else:
            an = mpmath.mpf(float(s.coeffs[n]))
        return float(an / _bw_asym_mp(n))


def named_series(name: str, N: int = 20) -> PowerSeries:
    """Built-in series: ``zero``, ``euler`` ((-1)^n n!), ``geometric`` (1),
    ``alternating`` ((-1)^n), ``exp`` (1/n!) and ``quartic`` (oscillator)."""
    n = np.arange(N + 1)
    if name == "zero":
        return PowerSeries(np.zeros(N + 1))
    if name == "euler":
        return PowerSeries(np.array([(-1) ** k * float(math.factorial(k)) for k in range(N + 1)]))
    if name == "geometric":
        return PowerSeries(np.ones(N + 1))
    if name == "alternating":
        return PowerSeries((-1.0) ** n)
    if name == "exp":
        return PowerSeries(np.array([1 / math.factorial(k) for k in range(N + 1)]))
    if name == "quartic":
        return bender_wu(N)
    raise KatolabError(f"unknown series {name!r}")


# product formulas


def lie_trotter_error(A: ArrayLike, B: ArrayLike, t: float, n: int) -> float:
    """``||e^{t(A+B)} - (e^{tA/n} e^{tB/n})^n||_2``."""
    if int(n) != n or n < 1:
        raise KatolabError("n must be a positive integer")
    A = np.asarray(A)
    B = np.asarray(B)
    exact = expm(t * (A + B))
    step = expm(t * A / n) @ expm(t * B / n)
    return float(np.linalg.norm(exact - np.linalg.matrix_power(step, int(n)), 2))


def _intersection_projection(P: np.ndarray, Q: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    # ran P ∩ ran Q is the eigenvalue -1 space of B = 1 - P - Q
    B = np.eye(P.shape[0]) - P - Q
    w, V = np.linalg.eigh(0.5 * (B + B.conj().T))
    X = V[:, np.abs(w + 1) <= tol]
    return X @ X.conj().T


def alternating_projection_limit(P, Q, n: int) -> tuple[np.ndarray, float]:
    """``((PQ)^n, ||(PQ)^n - R||)`` where ``R`` projects onto ``ran P ∩ ran Q``."""
    from .projections import pair

    if int(n) != n or n < 1:
        raise KatolabError("n must be a positive integer")
    p = pair(P, Q)
    M = np.linalg.matrix_power(p.P @ p.Q, int(n))
    R = _intersection_projection(p.P, p.Q)
    return M, float(np.linalg.norm(M - R, 2))
