"""Two-sided eigenvalue enclosures from a trial vector (Temple–Kato bounds).

Given a unit trial vector ``phi`` with Rayleigh quotient ``eta`` and residual
``eps = ||(H - eta) phi||``, and a window ``(alpha, zeta)`` around ``eta``
with ``eps**2 < (eta - alpha)(zeta - eta)``, every point of the spectrum in
the window lies in ``[eta - eps²/(zeta-eta), eta + eps²/(eta-alpha)]``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import HypothesisError, KatolabError
from .operators import as_hermitian, eig

__all__ = [
    "TrialReport",
    "rayleigh",
    "residual",
    "enclosure",
    "spectrum_hit",
    "eigenvector_gap_bound",
    "EIG_CHECK_MAX_DIM",
    "ContainmentSummary",
    "containment_trials",
    "rayleigh_remainder_slope",
]

EIG_CHECK_MAX_DIM = 2000


def _unit(phi, tol: float = 1e-10) -> np.ndarray:
    v = np.asarray(phi)
    if abs(np.linalg.norm(v) - 1.0) > tol:
        raise KatolabError("trial vector not normalized")
    return v


def rayleigh(H, phi) -> float:
    """Rayleigh quotient ``<phi, H phi>`` of a unit vector."""
    Hm = as_hermitian(H).entries
    v = _unit(phi)
    return float(np.vdot(v, Hm @ v).real)


def residual(H, phi) -> float:
    """Residual ``eps = ||(H - eta) phi||`` (never negative)."""
    Hm = as_hermitian(H).entries
    v = _unit(phi)
    eta = np.vdot(v, Hm @ v).real
    return float(np.linalg.norm(Hm @ v - eta * v))


@dataclass(frozen=True)
class TrialReport:
    """Enclosure data for one trial vector and window.

    ``lower_hit`` and ``upper_hit`` are the one-sided conclusions: spectrum
    meets ``[gamma0, zeta)`` and ``(alpha, kappa0]``.  ``verified`` records
    whether those and the two-sided enclosure were checked against a full
    eigensolve (``None`` when skipped for large matrices).
    """

    eta: float
    eps2: float
    alpha: float
    zeta: float
    gamma0: float
    kappa0: float
    vec_bound: float | str
    lower_hit: bool | None = None
    upper_hit: bool | None = None
    verified: bool | None = None

    @property
    def width(self) -> float:
        return self.kappa0 - self.gamma0


def enclosure(H, phi, alpha: float, zeta: float) -> TrialReport:
    """Temple–Kato enclosure ``[gamma0, kappa0]`` for the window ``(alpha, zeta)``.

    Raises
    ------
    HypothesisError
        If ``eps**2 >= (eta - alpha)(zeta - eta)`` or the window misses ``eta``.
    """
    Hm = as_hermitian(H)
    v = _unit(phi)
    A = Hm.entries
    eta = float(np.vdot(v, A @ v).real)
    eps2 = float(np.linalg.norm(A @ v - eta * v) ** 2)
    if not (alpha < eta < zeta):
        raise HypothesisError("window excludes Rayleigh quotient")
    if not eps2 < (eta - alpha) * (zeta - eta):
        raise HypothesisError("Temple–Kato hypothesis fails")
    gamma0 = eta - eps2 / (zeta - eta)
    kappa0 = eta + eps2 / (eta - alpha)

    delta = min(eta - alpha, zeta - eta)
    eps = np.sqrt(eps2)
    vec_bound: float | str = eigenvector_gap_bound(eta, eps, delta)[0] if eps < delta else "not applicable"

    lower_hit = upper_hit = verified = None
    if Hm.dim <= EIG_CHECK_MAX_DIM:
        lam = eig(Hm).eigenvalues
        upper_hit = bool(np.any((lam > alpha) & (lam <= kappa0 + 1e-12)))
        lower_hit = bool(np.any((lam >= gamma0 - 1e-12) & (lam < zeta)))
        inside = lam[(lam > alpha) & (lam < zeta)]
        verified = bool(np.all((inside >= gamma0 - 1e-12) & (inside <= kappa0 + 1e-12))) if len(inside) == 1 else None
    else:
        warnings.warn("window isolation not checked: matrix too large for a full eigensolve")
    return TrialReport(eta, eps2, alpha, zeta, gamma0, kappa0, vec_bound, lower_hit, upper_hit, verified)


def spectrum_hit(H, phi, alpha: float, zeta: float) -> bool:
    """True iff ``<phi, (H - alpha)(H - zeta) phi> < 0``.

    A negative value forces spectrum inside ``(alpha, zeta)``; a gap there
    forces the form to be nonnegative.
    """
    A = as_hermitian(H).entries
    v = _unit(phi)
    a = A @ v - alpha * v
    z = A @ v - zeta * v
    return bool(np.vdot(a, z).real < 0)


def eigenvector_gap_bound(eta: float, eps: float, delta: float) -> tuple[float, float]:
    """Distance bound between a trial vector and the nearby eigenvector.

    Parameters
    ----------
    eta : float
        Rayleigh quotient (kept for the call signature; the bound does not use it).
    eps : float
        Residual norm.
    delta : float
        Distance from ``eta`` to the rest of the spectrum.

    Returns
    -------
    bound, majorant : float
        ``sqrt(2 - 2 sqrt(1 - eps²/delta²))`` and the simpler upper estimate
        ``(eps/delta)(1 - eps²/delta²)**(-1/4)``.
    """
    if not 0 <= eps < delta:
        raise HypothesisError(
            "eigenvector bound hypothesis fails: need eps < delta" if eps >= delta else "eps must be nonnegative"
        )
    t = (eps / delta) ** 2
    root = np.sqrt(1.0 - t)
    # 2 - 2 sqrt(1-t) rewritten as 2t / (1 + sqrt(1-t)) to avoid cancellation
    bound = float(np.sqrt(2.0 * t / (1.0 + root)))
    majorant = float((eps / delta) * (1.0 - t) ** -0.25)
    assert bound <= majorant * (1 + 1e-12) + 1e-300
    return bound, majorant


@dataclass(frozen=True)
class ContainmentSummary:
    trials: int
    failures: int
    max_width: float
    reports: tuple


def containment_trials(trials: int, dim: int, rng: np.random.Generator, noise: float = 0.05) -> ContainmentSummary:
    """Random trials of the two-sided enclosure.

    Each trial perturbs one eigenvector of a random Hermitian matrix, puts
    the window halfway to the neighbouring eigenvalues, and shrinks the
    perturbation until the enclosure hypothesis holds.  A failure is an
    eigenvalue in the window that falls outside ``[gamma0, kappa0]``.
    """
    from .operators import random_hermitian

    failures = 0
    reports = []
    for _ in range(trials):
        H = random_hermitian(dim, rng)
        dec = eig(H)
        lam = dec.eigenvalues
        k = int(rng.integers(dim))
        alpha = 0.5 * (lam[k - 1] + lam[k]) if k > 0 else lam[k] - 1.0
        zeta = 0.5 * (lam[k] + lam[k + 1]) if k < dim - 1 else lam[k] + 1.0
        z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        scale = noise
        while True:
            phi = dec.vectors[:, k] + scale * z / np.linalg.norm(z)
            phi = phi / np.linalg.norm(phi)
            try:
                rep = enclosure(H, phi, alpha, zeta)
                break
            except HypothesisError:
                scale *= 0.5
        if not (rep.gamma0 <= lam[k] <= rep.kappa0):
            failures += 1
        reports.append(rep)
    return ContainmentSummary(trials, failures, max(r.width for r in reports), tuple(reports))


def rayleigh_remainder_slope(H0, B, betas, index: int = 0) -> tuple[float, np.ndarray]:
    """Log-log slope of ``|E(beta) - eta_{phi0}(beta)|`` against ``beta``.

    ``phi0`` is the unperturbed eigenvector, used as the trial vector for
    ``H0 + beta B``; the remainder is second order in ``beta``.
    """
    H0m = as_hermitian(H0).entries
    Bm = as_hermitian(B).entries
    phi = eig(H0m).vectors[:, index]
    b = np.asarray(betas, dtype=float)
    rem = np.array([abs(eig(H0m + x * Bm).eigenvalues[index] - rayleigh(H0m + x * Bm, phi)) for x in b])
    slope = float(np.polyfit(np.log(b), np.log(rem), 1)[0])
    return slope, rem
