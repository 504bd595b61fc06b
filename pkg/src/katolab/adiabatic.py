"""Adiabatic dynamics along a path of Hermitian matrices.

A path ``s -> H(s)`` on ``[0, 1]`` carries an isolated eigenvalue band with
spectral projection ``P(s)``.  Two evolutions are compared:

* Kato transport ``W' = [P', P] W``, which intertwines exactly,
  ``W(s) P(0) W(s)* = P(s)``;
* Schrödinger evolution at slow time, ``U' = -i T H(s) U``, which leaves
  ``ran P(0)`` only by ``O(1/T)``.

Both are integrated with a fourth-order Magnus step (two Gauss nodes per
cell) followed by polar re-unitarization.  ``P'`` comes from central
differences unless the path supplies it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import IntegratorError, KatolabError, SpectralError

__all__ = [
    "OperatorPath",
    "TransportResult",
    "kato_generator",
    "kato_transport",
    "schrodinger_evolve",
    "adiabatic_defect",
    "transport_deviation",
    "berry_phase",
    "two_level_rotation",
    "bloch_loop",
    "three_level",
    "constant_path",
    "retraced",
    "reparametrized",
    "builtin_path",
]

_C1 = 0.5 - np.sqrt(3.0) / 6.0
_C2 = 0.5 + np.sqrt(3.0) / 6.0
_SQ3_12 = np.sqrt(3.0) / 12.0
_DRIFT_TOL = 1e-6


@dataclass(frozen=True)
class OperatorPath:
    """A family ``s -> H(s)`` with a tracked eigenvalue band.

    Parameters
    ----------
    H : callable
        Returns a Hermitian array for each real ``s``.  It is evaluated
        slightly outside ``[0, 1]`` by the finite-difference derivative.
    band : int or (float, float)
        Index of a simple eigenvalue (ascending order) or an open interval
        selecting a group of eigenvalues.
    gap_floor : float
        Smallest allowed distance between the band and the rest of the spectrum.
    derivative_step : float, optional
        Step for central differences of ``P``; default ``min(1e-4, 0.01/steps)``.
    dP : callable, optional
        Analytic derivative of the band projection.
    name : str
    """

    H: Callable[[float], np.ndarray]
    band: int | tuple[float, float] = 0
    gap_floor: float = 1e-3
    derivative_step: float | None = None
    dP: Callable[[float], np.ndarray] | None = None
    name: str = "path"

    @classmethod
    def from_samples(cls, s: Sequence[float], mats: Sequence[np.ndarray], **kw) -> "OperatorPath":
        """Path interpolating sampled matrices by cubic splines in ``s``."""
        s = np.asarray(s, dtype=float)
        M = np.asarray(mats)
        if M.ndim != 3 or M.shape[0] != len(s) or M.shape[1] != M.shape[2]:
            raise KatolabError("samples must have shape (len(s), n, n)")
        spline = CubicSpline(s, M, axis=0)

        def H(x: float) -> np.ndarray:
            A = spline(x)
            return 0.5 * (A + A.conj().T)

        kw.setdefault("name", "sampled")
        return cls(H, **kw)

    @property
    def dim(self) -> int:
        return np.asarray(self.H(0.0)).shape[0]

    def band_data(self, s: float) -> tuple[np.ndarray, float, np.ndarray]:
        """``(P(s), lambda(s), eigenvectors of the band)``.

        Raises ``"band collision"`` when the band comes closer than
        ``gap_floor`` to the rest of the spectrum.
        """
        Hs = np.asarray(self.H(s))
        w, V = np.linalg.eigh(Hs)
        if isinstance(self.band, (int, np.integer)):
            idx = np.array([int(self.band)])
        else:
            a, b = self.band
            idx = np.nonzero((w > a) & (w < b))[0]
            if len(idx) == 0:
                raise SpectralError(f"band collision: no eigenvalue in {self.band} at s={s}")
        inside = w[idx]
        rest = np.delete(w, idx)
        if len(rest):
            gap = np.min(np.abs(rest[:, None] - inside[None, :]))
            if gap < self.gap_floor:
                raise SpectralError(f"band collision at s={s:.6g} (gap {gap:.3e})")
        Vb = V[:, idx]
        return Vb @ Vb.conj().T, float(np.mean(inside)), Vb

    def P(self, s: float) -> np.ndarray:
        return self.band_data(s)[0]

    def eigenvalue(self, s: float) -> float:
        return self.band_data(s)[1]

    def dP_at(self, s: float, steps: int = 1000) -> np.ndarray:
        if self.dP is not None:
            return np.asarray(self.dP(s))
        h = self.derivative_step or min(1e-4, 0.01 / steps)
        return (self.P(s + h) - self.P(s - h)) / (2 * h)

    def is_closed(self, tol: float = 1e-10) -> bool:
        return float(np.max(np.abs(np.asarray(self.H(1.0)) - np.asarray(self.H(0.0))))) <= tol


@dataclass(frozen=True)
class TransportResult:
    """Output of an evolution on the uniform grid ``s``.

    ``W`` has shape ``(len(s), n, n)``.  ``defect`` is the largest value of
    ``||W P(0) W* - P(s)||`` for Kato transport, or of
    ``||(1 - P(s)) U P(0)||`` for Schrödinger evolution.  ``phase`` is the
    holonomy phase factor for closed rank-one paths and ``None`` otherwise.
    """

    s: np.ndarray
    W: np.ndarray
    defect: float
    phase: complex | None = None
    unitarity: float = 0.0


def kato_generator(path: OperatorPath, s: float, steps: int = 1000) -> np.ndarray:
    """Hermitian ``A(s) = -i [P'(s), P(s)]``; satisfies ``P A P = 0``."""
    P = path.P(s)
    dP = path.dP_at(s, steps)
    return -1j * (dP @ P - P @ dP)


def _polar(X: np.ndarray) -> np.ndarray:
    U, _, Vh = np.linalg.svd(X)
    return U @ Vh


def _expi(Hm: np.ndarray) -> np.ndarray:
    # exp(-i Hm) for Hermitian Hm
    Hm = 0.5 * (Hm + Hm.conj().T)
    w, V = np.linalg.eigh(Hm)
    return (V * np.exp(-1j * w)) @ V.conj().T


def _magnus4(G: Callable[[float], np.ndarray], n: int, steps: int) -> tuple[np.ndarray, float]:
    """Integrate ``X' = -i G(s) X`` from ``X(0) = I`` on ``[0, 1]``."""
    if steps < 1:
        raise KatolabError("steps must be positive")
    d = 1.0 / steps
    X = np.eye(n, dtype=complex)
    out = np.empty((steps + 1, n, n), dtype=complex)
    out[0] = X
    worst = 0.0
    I = np.eye(n)
    for k in range(steps):
        s = k * d
        G1 = G(s + _C1 * d)
        G2 = G(s + _C2 * d)
        Heff = 0.5 * d * (G1 + G2) - 1j * _SQ3_12 * d * d * (G2 @ G1 - G1 @ G2)
        X = _expi(Heff) @ X
        drift = float(np.max(np.abs(X.conj().T @ X - I)))
        if not np.isfinite(drift) or drift > _DRIFT_TOL:
            raise IntegratorError(f"integrator failure: unitarity drift {drift:.2e} at s={s:.4g}")
        worst = max(worst, drift)
        X = _polar(X)
        out[k + 1] = X
    return out, worst


def _check_steps(steps: int, minimum: int = 1) -> None:
    if int(steps) != steps or steps < minimum:
        raise KatolabError(f"steps must be an integer >= {minimum}")


def kato_transport(path: OperatorPath, steps: int = 1000) -> TransportResult:
    """Integrate ``W' = [P', P] W`` with ``W(0) = I``.

    The reported ``defect`` is the intertwining error
    ``max_s ||W(s) P(0) W(s)* - P(s)||``.
    """
    _check_steps(steps, 10)
    n = path.dim
    Ws, drift = _magnus4(lambda s: -kato_generator(path, s, steps), n, steps)
    s = np.linspace(0.0, 1.0, steps + 1)
    P0, _, V0 = path.band_data(0.0)
    defect = 0.0
    for k, sk in enumerate(s):
        W = Ws[k]
        defect = max(defect, float(np.linalg.norm(W @ P0 @ W.conj().T - path.P(sk), 2)))
    phase = None
    if V0.shape[1] == 1 and path.is_closed():
        phi = V0[:, 0]
        phase = complex(np.vdot(phi, Ws[-1] @ phi))
    return TransportResult(s, Ws, defect, phase, drift)


def _shifted(path: OperatorPath) -> Callable[[float], np.ndarray]:
    n = path.dim
    I = np.eye(n)
    return lambda s: np.asarray(path.H(s)) - path.eigenvalue(s) * I


def schrodinger_evolve(path: OperatorPath, T: float, steps: int = 1000, shift: bool = False) -> TransportResult:
    """Unitaries solving ``U' = -i T H(s) U`` with ``U(0) = I``.

    With ``shift=True`` the band eigenvalue is subtracted, ``H(s) - lambda(s)``,
    which removes the dynamical phase.  ``defect`` is
    ``max_s ||(1 - P(s)) U(s) P(0)||``.
    """
    if T < 0:
        raise KatolabError("T must be nonnegative")
    _check_steps(steps)
    n = path.dim
    Hf = _shifted(path) if shift else (lambda s: np.asarray(path.H(s)))
    if T == 0:
        Us = np.broadcast_to(np.eye(n, dtype=complex), (steps + 1, n, n)).copy()
        drift = 0.0
    else:
        Us, drift = _magnus4(lambda s: T * Hf(s), n, steps)
    s = np.linspace(0.0, 1.0, steps + 1)
    P0 = path.P(0.0)
    I = np.eye(n)
    defect = max(float(np.linalg.norm((I - path.P(sk)) @ Us[k] @ P0, 2)) for k, sk in enumerate(s))
    return TransportResult(s, Us, defect, None, drift)


def adiabatic_defect(path: OperatorPath, T: float, steps: int = 2000) -> float:
    """``max_s ||(1 - P(s)) U_T(s) P(0)||``; decays like ``C/T`` on gapped paths."""
    return schrodinger_evolve(path, T, steps, shift=True).defect


def _dynamic_phase(path: OperatorPath, steps: int) -> np.ndarray:
    # int_0^{s_k} lambda, two-point Gauss rule per cell
    d = 1.0 / steps
    cells = np.array(
        [0.5 * d * (path.eigenvalue((k + _C1) * d) + path.eigenvalue((k + _C2) * d)) for k in range(steps)]
    )
    return np.concatenate([[0.0], np.cumsum(cells)])


def transport_deviation(path: OperatorPath, T: float, steps: int = 2000, shift: bool = True) -> float:
    """``max_s ||(W(s) - U_T(s)) P(0)||`` comparing Kato and Schrödinger evolution.

    With ``shift=False`` the unshifted Schrödinger evolution is compared with
    ``exp(-i T int_0^s lambda) W(s)`` instead; both readings agree.
    """
    W = kato_transport(path, steps).W
    U = schrodinger_evolve(path, T, steps, shift=shift).W
    P0 = path.P(0.0)
    if shift:
        phases = np.ones(steps + 1)
    else:
        phases = np.exp(-1j * T * _dynamic_phase(path, steps))
    return max(float(np.linalg.norm((phases[k] * W[k] - U[k]) @ P0, 2)) for k in range(steps + 1))


def berry_phase(path: OperatorPath, steps: int = 2000, phi0: np.ndarray | None = None) -> float:
    """Holonomy angle ``arg <phi0, W(1) phi0>`` in ``(-pi, pi]`` for a closed rank-one band."""
    if not path.is_closed():
        raise KatolabError("path not closed")
    P0, _, V0 = path.band_data(0.0)
    if V0.shape[1] != 1:
        raise KatolabError("holonomy is a matrix: use kato_transport")
    phi = V0[:, 0] if phi0 is None else np.asarray(phi0, dtype=complex)
    if abs(np.linalg.norm(phi) - 1) > 1e-10 or np.linalg.norm(P0 @ phi - phi) > 1e-8:
        raise KatolabError("reference vector must be a unit vector in ran P(0)")
    W1 = kato_transport(path, steps).W[-1]
    g = float(np.angle(np.vdot(phi, W1 @ phi)))
    return np.pi if g <= -np.pi else g


# built-in paths

_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def two_level_rotation() -> OperatorPath:
    """``cos(pi s) sz + sin(pi s) sx`` with the lower band; ``||A(s)|| = pi/2``."""
    return OperatorPath(lambda s: np.cos(np.pi * s) * _SZ + np.sin(np.pi * s) * _SX, band=0, name="two-level")


def bloch_loop(theta: float) -> OperatorPath:
    """``-n(s)·sigma`` with ``n`` circling the Bloch sphere at colatitude ``theta``.

    The lower band is the spin state along ``n(s)``; its holonomy angle is
    ``-pi (1 - cos theta)`` modulo ``2 pi``.
    """
    st, ct = np.sin(theta), np.cos(theta)

    def H(s):
        a = 2 * np.pi * s
        return -(st * np.cos(a) * _SX + st * np.sin(a) * _SY + ct * _SZ)

    return OperatorPath(H, band=0, name=f"bloch-loop({theta:g})")


def three_level(gap: float = 1.0) -> OperatorPath:
    """Rotated ``diag(0, gap, gap + 1)`` tracking the bottom eigenvalue."""
    if gap <= 0:
        raise KatolabError("gap must be positive")
    D = np.diag([0.0, gap, gap + 1.0])
    X = np.array([[0, 1.0, 0.5], [-1.0, 0, 0.7], [-0.5, -0.7, 0]])
    w, V = np.linalg.eig(X)

    def U(s):
        return ((V * np.exp(s * w)) @ np.linalg.inv(V)).real

    def H(s):
        R = U(s)
        return R @ D @ R.T

    return OperatorPath(H, band=0, gap_floor=min(1e-3, gap / 2), name=f"three-level({gap:g})")


def constant_path(H0) -> OperatorPath:
    H0 = np.asarray(H0)
    return OperatorPath(lambda s: H0, band=0, name="constant")


def reparametrized(path: OperatorPath, f: Callable[[float], float], name: str | None = None) -> OperatorPath:
    """Path ``s -> H(f(s))`` with the same band selection."""
    return OperatorPath(
        lambda s: path.H(f(s)),
        band=path.band,
        gap_floor=path.gap_floor,
        derivative_step=path.derivative_step,
        name=name or f"{path.name}∘f",
    )


def retraced(path: OperatorPath) -> OperatorPath:
    """Run ``path`` forward to ``s = 1`` and back, smoothly, over ``[0, 1]``."""
    return reparametrized(path, lambda s: 0.5 * (1 - np.cos(2 * np.pi * s)), name=f"{path.name}-retraced")


def builtin_path(name: str, **params) -> OperatorPath:
    """Look up a named path: ``two-level``, ``bloch-loop``, ``three-level``."""
    if name == "two-level":
        return two_level_rotation()
    if name == "bloch-loop":
        return bloch_loop(float(params.get("theta", np.pi / 3)))
    if name == "three-level":
        return three_level(float(params.get("gap", 1.0)))
    raise KatolabError(f"unknown path {name!r}")
