"""Rayleigh–Schrödinger series for a simple isolated eigenvalue of ``H0 + beta*B``.

The recursion uses intermediate normalization, ``<phi0, psi(beta)> = 1``,
which makes every order a linear solve with the reduced resolvent ``S``::

    E_k   = <phi0, B psi_{k-1}>
    psi_k = S( sum_{j=1}^{k-1} E_j psi_{k-j} - B psi_{k-1} )

:func:`rs_recursion` is written against callables so the same code runs on
float vectors (:func:`rs_series`) and on exact rational vectors (the
anharmonic oscillator coefficients in :mod:`katolab.asymptotics`).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

import numpy as np
from numpy.typing import ArrayLike

from .errors import KatolabError, SpectralError
from .operators import HermitianMatrix, as_hermitian, eig, reduced_resolvent

__all__ = [
    "RSReport",
    "RelativeBoundCurve",
    "rs_recursion",
    "rs_low_order",
    "rs_series",
    "relative_bound_curve",
]


@dataclass(frozen=True)
class RSReport:
    E: np.ndarray
    psi1: np.ndarray
    index: int
    phi0: np.ndarray
    normalization: str = "intermediate"

    def partial_sum(self, beta: float, order: int | None = None) -> float:
        N = len(self.E) - 1 if order is None else order
        return float(np.polynomial.polynomial.polyval(beta, self.E[: N + 1]))


def rs_recursion(
    E0: Any,
    phi0: Any,
    apply_B: Callable[[Any], Any],
    apply_S: Callable[[Any], Any],
    overlap: Callable[[Any], Any],
    N: int,
) -> tuple[list, list]:
    """Energy and vector coefficients up to order ``N``.

    ``overlap(v)`` must return ``<phi0, v>`` for a normalized ``phi0``.
    Vector arithmetic only needs ``+``, ``-`` and scalar ``*``, so numpy
    arrays of floats or of :class:`fractions.Fraction` both work.
    """
    if N < 1:
        raise KatolabError("order N must be >= 1")
    E = [E0]
    psi = [phi0]
    for k in range(1, N + 1):
        Bpsi = apply_B(psi[k - 1])
        E.append(overlap(Bpsi))
        rhs = -Bpsi
        for j in range(1, k):
            rhs = rhs + E[j] * psi[k - j]
        psi.append(apply_S(rhs))
    return E, psi


def _simple_setup(H0, B, index: int):
    H0 = as_hermitian(H0)
    B = as_hermitian(B)
    if H0.dim != B.dim:
        raise KatolabError("H0 and B must have equal dimension")
    dec = eig(H0)
    if len(dec.cluster_containing_index(index)) != 1:
        raise SpectralError("degenerate eigenvalue: RS simple-case only")
    E0 = float(dec.eigenvalues[index])
    phi0 = dec.vectors[:, index]
    S = reduced_resolvent(H0, E0).entries
    return H0, B.entries, E0, phi0, S


def rs_low_order(H0, B, index: int = 0) -> RSReport:
    """Energy coefficients through third order from the closed formulas.

    Uses ``E2 = -<B phi, S B phi>`` and
    ``E3 = <B phi, S B S B phi> - E1 <B phi, S² B phi>``.
    """
    _, Bm, E0, phi, S = _simple_setup(H0, B, index)
    Bphi = Bm @ phi
    SBphi = S @ Bphi
    E1 = np.vdot(phi, Bphi).real
    E2 = -np.vdot(Bphi, SBphi).real
    E3 = np.vdot(Bphi, S @ (Bm @ SBphi)).real - E1 * np.vdot(SBphi, SBphi).real
    return RSReport(E=np.array([E0, E1, E2, E3]), psi1=-SBphi, index=index, phi0=phi)


def rs_series(H0, B, index: int = 0, N: int = 6) -> RSReport:
    """Energy coefficients ``E_0..E_N`` by the intermediate-normalization recursion."""
    _, Bm, E0, phi, S = _simple_setup(H0, B, index)
    E, psi = rs_recursion(
        E0,
        phi.astype(complex),
        apply_B=lambda v: Bm @ v,
        apply_S=lambda v: S @ v,
        overlap=lambda v: np.vdot(phi, v),
        N=N,
    )
    return RSReport(E=np.real(np.array(E, dtype=complex)), psi1=psi[1], index=index, phi0=phi)


@dataclass(frozen=True)
class RelativeBoundCurve:
    kappas: np.ndarray
    norms: np.ndarray
    a: float
    b: float


def relative_bound_curve(A, B, kappas: ArrayLike) -> RelativeBoundCurve:
    """``||B (A + i kappa)^{-1}||`` over ``kappas`` with a least-squares ``a + b/kappa`` fit.

    The fitted ``a`` estimates the relative bound of ``B`` with respect to ``A``.
    """
    k = np.asarray(kappas, dtype=float)
    if np.any(k <= 0):
        raise KatolabError("kappa must be positive")
    Am = as_hermitian(A)
    Bm = as_hermitian(B).entries
    dec = eig(Am)
    V = dec.vectors
    norms = np.empty_like(k)
    for i, kap in enumerate(k):
        R = (V * (1.0 / (dec.eigenvalues + 1j * kap))) @ V.conj().T
        norms[i] = np.linalg.norm(Bm @ R, 2)
    X = np.column_stack([np.ones_like(k), 1.0 / k])
    (a, b), *_ = np.linalg.lstsq(X, norms, rcond=None)
    return RelativeBoundCurve(kappas=k, norms=norms, a=float(a), b=float(b))
