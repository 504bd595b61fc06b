"""Algebra of a pair of orthogonal projections.

For projections ``P`` and ``Q`` put ``A = P - Q`` and ``B = 1 - P - Q``.
Then ``A² + B² = 1`` and ``AB + BA = 0``, so ``A²`` commutes with both
projections.  Everything here is built from those two facts plus
eigendecompositions of ``A`` and ``B``:

* the unitary ``W (1 - A²)^{-1/2}`` carrying ``P`` to ``Q`` when ``||P - Q|| < 1``,
* the self-adjoint unitary ``sgn(B)`` swapping ``P`` and ``Q``,
* the four corner subspaces (``ran P ∩ ker Q`` and friends),
* the two-projection (Halmos) normal form on the generic part,
* norm identities for oblique idempotents.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import orth

from .errors import KatolabError, SpectralError
from .operators import OrthogonalProjection, as_hermitian

__all__ = [
    "ProjectionPair",
    "HalmosDecomposition",
    "pair",
    "identity_residuals",
    "kato_unitary",
    "sgn_unitary",
    "trace_index",
    "spectral_symmetry",
    "corner_subspaces",
    "symmetry_conjugator",
    "halmos",
    "oblique_norms",
    "random_projection",
    "random_pair",
    "near_pair",
    "line_pair",
    "PairAudit",
    "random_oblique",
    "audit_pairs",
]

PAIR_TOL = 1e-10
CORNER_TOL = 1e-8


def _mat(P) -> np.ndarray:
    if isinstance(P, OrthogonalProjection):
        return np.asarray(P.matrix.entries)
    return np.asarray(P)


def _maxabs(M) -> float:
    return float(np.max(np.abs(M))) if np.size(M) else 0.0


def _eigh(M):
    w, V = np.linalg.eigh(M)
    return w, V


def _func(M, f) -> np.ndarray:
    w, V = _eigh(M)
    return (V * f(w)) @ V.conj().T


@dataclass(frozen=True)
class ProjectionPair:
    """Two orthogonal projections with ``A = P - Q`` and ``B = 1 - P - Q`` cached."""

    P: np.ndarray
    Q: np.ndarray
    A: np.ndarray = field(repr=False)
    B: np.ndarray = field(repr=False)
    normPQ: float
    A_eigenvalues: np.ndarray = field(repr=False)
    A_vectors: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.P.shape[0]

    @property
    def rankP(self) -> int:
        return int(round(np.trace(self.P).real))

    @property
    def rankQ(self) -> int:
        return int(round(np.trace(self.Q).real))


def identity_residuals(P, Q) -> dict[str, float]:
    """Max-entry residuals of the pair identities.

    Keys: ``pythagoras`` (A² + B² - 1), ``anticommutator`` (AB + BA),
    ``commute_P`` and ``commute_Q`` ([P, A²], [Q, A²]), ``commutator_square``
    ((PQ - QP)² - (A⁴ - A²)) and ``w_product`` (W W~ - (1 - A²)).
    """
    P = _mat(P)
    Q = _mat(Q)
    n = P.shape[0]
    I = np.eye(n)
    A = P - Q
    B = I - P - Q
    A2 = A @ A
    C = P @ Q - Q @ P
    W = Q @ P + (I - Q) @ (I - P)
    Wt = P @ Q + (I - P) @ (I - Q)
    return {
        "pythagoras": _maxabs(A2 + B @ B - I),
        "anticommutator": _maxabs(A @ B + B @ A),
        "commute_P": _maxabs(P @ A2 - A2 @ P),
        "commute_Q": _maxabs(Q @ A2 - A2 @ Q),
        "commutator_square": _maxabs(C @ C - (A2 @ A2 - A2)),
        "w_product": _maxabs(W @ Wt - (I - A2)),
    }


def pair(P, Q) -> ProjectionPair:
    """Validate ``P`` and ``Q`` as a projection pair and cache its data.

    Raises
    ------
    KatolabError
        ``"not a projection pair"`` when shapes differ, either matrix is not an
        orthogonal projection, or a pair identity fails beyond ``1e-10``.
    """
    try:
        Pm = OrthogonalProjection(as_hermitian(_mat(P))).matrix.entries
        Qm = OrthogonalProjection(as_hermitian(_mat(Q))).matrix.entries
    except KatolabError as exc:
        raise KatolabError(f"not a projection pair: {exc}") from exc
    if Pm.shape != Qm.shape:
        raise KatolabError("not a projection pair: dimensions differ")
    res = identity_residuals(Pm, Qm)
    worst = max(res["pythagoras"], res["anticommutator"], res["commute_P"], res["commute_Q"])
    if worst > PAIR_TOL:
        raise KatolabError(f"not a projection pair: identity residual {worst:.2e}")
    n = Pm.shape[0]
    A = Pm - Qm
    B = np.eye(n) - Pm - Qm
    w, V = _eigh(A)
    normPQ = float(np.max(np.abs(w)))
    if normPQ > 1 + 1e-12:
        raise KatolabError("not a projection pair: ||P - Q|| exceeds 1")
    return ProjectionPair(Pm, Qm, A, B, normPQ, w, V)


def _as_pair(p, Q=None) -> ProjectionPair:
    if isinstance(p, ProjectionPair):
        return p
    return pair(p, Q)


def kato_unitary(p: ProjectionPair) -> np.ndarray:
    """Unitary ``U = W (1 - A²)^{-1/2}`` with ``U P U* = Q``.

    ``W = QP + (1 - Q)(1 - P)``.  Needs ``||P - Q|| < 1``.
    """
    p = _as_pair(p)
    if p.normPQ >= 1 - 1e-10:
        raise SpectralError("projections not norm-close")
    n = p.dim
    I = np.eye(n)
    W = p.Q @ p.P + (I - p.Q) @ (I - p.P)
    w, V = p.A_eigenvalues, p.A_vectors
    inv_sqrt = (V * (1.0 / np.sqrt(1.0 - w**2))) @ V.conj().T
    return W @ inv_sqrt


def sgn_unitary(p: ProjectionPair) -> np.ndarray:
    """Self-adjoint unitary ``sgn(B)`` which swaps ``P`` and ``Q`` by conjugation."""
    p = _as_pair(p)
    w, V = _eigh(p.B)
    if np.min(np.abs(w)) < 1e-10:
        raise SpectralError("B is singular")
    return (V * np.sign(w)) @ V.conj().T


def trace_index(p: ProjectionPair) -> int:
    """``Tr(P - Q)`` as an integer (equal to ``rank P - rank Q``)."""
    p = _as_pair(p)
    t = float(np.trace(p.A).real)
    k = round(t)
    if abs(t - k) > 1e-6:
        raise KatolabError(f"numerical degradation: trace {t} is not an integer")
    return int(k)


def _clusters(w: np.ndarray, tol: float) -> list[list[int]]:
    groups: list[list[int]] = []
    for i in np.argsort(w):
        if groups and abs(w[i] - w[groups[-1][-1]]) <= tol:
            groups[-1].append(int(i))
        else:
            groups.append([int(i)])
    return groups


def spectral_symmetry(p: ProjectionPair, tol: float = CORNER_TOL) -> list[tuple[float, int, int]]:
    """Multiplicities of ``±lam`` in the spectrum of ``A`` for ``0 < lam < 1``.

    Returns a list of ``(lam, dim H_lam, dim H_{-lam})``; for a valid pair the
    two dimensions always agree.
    """
    p = _as_pair(p)
    w = p.A_eigenvalues
    mags = np.abs(w)
    keep = (mags > tol) & (mags < 1 - tol)
    out = []
    for g in _clusters(mags[keep], tol):
        vals = w[keep][g]
        lam = float(np.mean(np.abs(vals)))
        out.append((lam, int(np.sum(vals > 0)), int(np.sum(vals < 0))))
    return out


def _eigenspace(M: np.ndarray, value: float, tol: float) -> np.ndarray:
    w, V = _eigh(M)
    return V[:, np.abs(w - value) <= tol]


def _corner_bases(p: ProjectionPair, tol: float = CORNER_TOL) -> dict[str, np.ndarray]:
    return {
        "P_kerQ": _eigenspace(p.A, 1.0, tol),  # ran P ∩ ker Q
        "kerP_Q": _eigenspace(p.A, -1.0, tol),  # ker P ∩ ran Q
        "P_Q": _eigenspace(p.B, -1.0, tol),  # ran P ∩ ran Q
        "kerP_kerQ": _eigenspace(p.B, 1.0, tol),  # ker P ∩ ker Q
    }


def corner_subspaces(P, Q=None, tol: float = CORNER_TOL) -> tuple[int, int, int, int]:
    """Dimensions of ``ker(A-1)``, ``ker(A+1)``, ``ker(B+1)``, ``ker(B-1)``.

    These are ``ran P ∩ ker Q``, ``ker P ∩ ran Q``, ``ran P ∩ ran Q`` and
    ``ker P ∩ ker Q``; they are mutually orthogonal and their complement is
    the generic part of the pair.
    """
    p = _as_pair(P, Q)
    b = _corner_bases(p, tol)
    return tuple(b[k].shape[1] for k in ("P_kerQ", "kerP_Q", "P_Q", "kerP_kerQ"))  # type: ignore[return-value]


def symmetry_conjugator(P, Q=None, tol: float = CORNER_TOL) -> np.ndarray:
    """Unitary ``U = U*`` with ``U P U = Q`` and ``U Q U = P``.

    It exists exactly when ``ran P ∩ ker Q`` and ``ker P ∩ ran Q`` have equal
    dimension.  The result swaps those two corners by a partial isometry and
    equals ``sgn(B)`` elsewhere.
    """
    p = _as_pair(P, Q)
    b = _corner_bases(p, tol)
    X, Y = b["P_kerQ"], b["kerP_Q"]
    if X.shape[1] != Y.shape[1]:
        raise SpectralError("no symmetry: corner dimensions differ")
    w, V = _eigh(p.B)
    sgn = np.where(np.abs(w) <= tol, 0.0, np.sign(w))
    U = (V * sgn) @ V.conj().T
    if X.shape[1]:
        swap = Y @ X.conj().T
        U = U + swap + swap.conj().T
    return U


@dataclass(frozen=True)
class HalmosDecomposition:
    """Two-projection normal form.

    On the generic part ``H0 = B1 ⊕ B2`` with ``B1 = ran P ∩ H0``, ``P`` acts
    as ``[[1, 0], [0, 0]]`` and ``Q`` as ``[[C², CS], [CS, S²]]`` once ``B2`` is
    identified with ``B1`` through the isometry ``W``.

    Attributes
    ----------
    corner_dims : tuple of int
        Output of :func:`corner_subspaces`.
    basis : ndarray, shape (n, k)
        Orthonormal basis ``E1`` of ``B1``.
    W : ndarray, shape (n, k)
        Image basis ``W E1`` spanning ``B2``.
    C, S : ndarray, shape (k, k)
        Positive commuting contractions with ``C² + S² = 1``.
    """

    corner_dims: tuple[int, int, int, int]
    basis: np.ndarray
    W: np.ndarray
    C: np.ndarray
    S: np.ndarray

    @property
    def generic_dim(self) -> int:
        return 2 * self.basis.shape[1]

    def generic_projection(self) -> np.ndarray:
        E, F = self.basis, self.W
        return E @ E.conj().T + F @ F.conj().T

    def reconstruct_Q(self) -> np.ndarray:
        """``Q`` restricted to the generic part, rebuilt from ``(C, S, W)``."""
        E, F, C, S = self.basis, self.W, self.C, self.S
        CS = C @ S
        return E @ C @ C @ E.conj().T + E @ CS @ F.conj().T + F @ CS @ E.conj().T + F @ S @ S @ F.conj().T


def halmos(P, Q=None, tol: float = CORNER_TOL) -> HalmosDecomposition:
    """Halmos decomposition of a projection pair.

    ``C = |B|`` and ``S = |A|`` restricted to ``B1``; ``W`` is the restriction
    of ``sgn(A) sgn(B)`` to ``B1``.  With an empty generic part the basis and
    blocks are empty arrays.
    """
    p = _as_pair(P, Q)
    dims = corner_subspaces(p, tol=tol)
    n = p.dim
    w = p.A_eigenvalues
    V = p.A_vectors
    mask = (np.abs(w) > tol) & (np.abs(w) < 1 - tol)
    G = V[:, mask]
    if G.shape[1] == 0:
        e = np.zeros((n, 0))
        z = np.zeros((0, 0))
        return HalmosDecomposition(dims, e, e, z, z)
    PG = G @ G.conj().T
    E1 = orth(p.P @ PG, rcond=1e-8)
    absA = _func(p.A, np.abs)
    absB = _func(p.B, np.abs)
    sA = _func(p.A, lambda x: np.where(np.abs(x) <= tol, 0.0, np.sign(x)))
    sB = _func(p.B, lambda x: np.where(np.abs(x) <= tol, 0.0, np.sign(x)))
    F = sA @ sB @ E1
    C = E1.conj().T @ absB @ E1
    S = E1.conj().T @ absA @ E1
    C = 0.5 * (C + C.conj().T)
    S = 0.5 * (S + S.conj().T)
    return HalmosDecomposition(dims, E1, F, C, S)


@dataclass(frozen=True)
class ObliqueNorms:
    norm: float
    complement_norm: float
    ljance: float
    normPQ: float


def oblique_norms(Pi) -> ObliqueNorms:
    """Norms of an idempotent and its complement with the Ljance prediction.

    ``||Pi|| = ||1 - Pi|| = (1 - ||P Q||²)^{-1/2}`` where ``P`` and ``Q`` are
    the orthogonal projections onto ``ran Pi`` and ``ran(1 - Pi)``.
    """
    M = np.asarray(Pi)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise KatolabError("idempotent must be square")
    if _maxabs(M @ M - M) > 1e-10:
        raise KatolabError("matrix is not idempotent")
    n = M.shape[0]
    I = np.eye(n)
    if _maxabs(M) <= 1e-12 or _maxabs(M - I) <= 1e-12:
        raise KatolabError("trivial projection excluded")
    r = int(round(np.trace(M).real))
    U1 = np.linalg.svd(M)[0][:, :r]
    U2 = np.linalg.svd(I - M)[0][:, : n - r]
    P = U1 @ U1.conj().T
    Q = U2 @ U2.conj().T
    npq = float(np.linalg.norm(P @ Q, 2))
    return ObliqueNorms(
        norm=float(np.linalg.norm(M, 2)),
        complement_norm=float(np.linalg.norm(I - M, 2)),
        ljance=float(1.0 / np.sqrt(1.0 - npq**2)),
        normPQ=npq,
    )


def random_projection(n: int, k: int, rng: np.random.Generator, complex_: bool = True) -> np.ndarray:
    """Orthogonal projection onto a Haar-random ``k``-dimensional subspace."""
    X = rng.standard_normal((n, k))
    if complex_:
        X = X + 1j * rng.standard_normal((n, k))
    Qb, _ = np.linalg.qr(X)
    return Qb @ Qb.conj().T


def random_pair(n: int, k: int, l: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    return random_projection(n, k, rng), random_projection(n, l, rng)


def near_pair(n: int, k: int, distance: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Pair ``(P, e^{iX} P e^{-iX})`` with ``||P - Q||`` equal to ``distance``."""
    from scipy.linalg import expm

    if not 0 <= distance < 1:
        raise KatolabError("distance must lie in [0, 1)")
    P = random_projection(n, k, rng)
    H = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    H = 0.5 * (H + H.conj().T)
    X = P @ H @ (np.eye(n) - P)
    X = X + X.conj().T
    X = X / np.linalg.norm(X, 2)
    # for an off-diagonal generator ||P - Q|| = sin(theta * ||X||)
    theta = np.arcsin(distance)
    U = expm(1j * theta * X)
    Q = U @ P @ U.conj().T
    Q = 0.5 * (Q + Q.conj().T)
    return P, Q


def line_pair(theta: float) -> tuple[np.ndarray, np.ndarray]:
    """Projections onto two lines of the plane meeting at angle ``theta``."""
    u = np.array([1.0, 0.0])
    v = np.array([np.cos(theta), np.sin(theta)])
    return np.outer(u, u), np.outer(v, v)


@dataclass(frozen=True)
class PairAudit:
    """Worst residuals over a batch of random pairs (max-entry norms unless noted)."""

    trials: int
    identities: float
    commutator_square: float
    w_product: float
    kato_conjugation: float
    sgn_conjugation: float
    trace_integrality: float
    halmos_reconstruction: float
    oblique_equality: float
    ljance_agreement: float
    near_pairs: int


def random_oblique(n: int, k: int, rng: np.random.Generator, skew: float = 1.0) -> np.ndarray:
    """Idempotent ``X diag(1_k, 0) X^{-1}`` with a well-conditioned random ``X``."""
    X = np.eye(n) + skew * rng.standard_normal((n, n)) / np.sqrt(n)
    D = np.diag([1.0] * k + [0.0] * (n - k))
    return X @ D @ np.linalg.inv(X)


def audit_pairs(trials: int, dim: int, rng: np.random.Generator) -> PairAudit:
    """Check every pair identity on ``trials`` random pairs.

    Even trials draw independent pairs of random ranks (some with
    ``||P - Q|| = 1``); odd trials draw norm-close pairs so the unitaries are
    always exercised.  Each trial also checks one random oblique idempotent.
    """
    worst = dict.fromkeys(
        [
            "identities",
            "commutator_square",
            "w_product",
            "kato_conjugation",
            "sgn_conjugation",
            "trace_integrality",
            "halmos_reconstruction",
            "oblique_equality",
            "ljance_agreement",
        ],
        0.0,
    )
    near = 0
    for t in range(trials):
        if t % 2 == 0:
            k, l = (int(x) for x in rng.integers(1, dim, size=2))
            P, Q = random_pair(dim, k, l, rng)
        else:
            k = int(rng.integers(1, dim))
            P, Q = near_pair(dim, k, float(rng.uniform(0.05, 0.9)), rng)
        res = identity_residuals(P, Q)
        worst["identities"] = max(worst["identities"], res["pythagoras"], res["anticommutator"], res["commute_P"], res["commute_Q"])
        worst["commutator_square"] = max(worst["commutator_square"], res["commutator_square"])
        worst["w_product"] = max(worst["w_product"], res["w_product"])
        p = pair(P, Q)
        tr = float(np.trace(p.A).real)
        worst["trace_integrality"] = max(worst["trace_integrality"], abs(tr - trace_index(p)))
        if p.normPQ < 1 - 1e-10:
            near += 1
            U = kato_unitary(p)
            worst["kato_conjugation"] = max(worst["kato_conjugation"], _maxabs(U @ p.P @ U.conj().T - p.Q))
            S = sgn_unitary(p)
            worst["sgn_conjugation"] = max(
                worst["sgn_conjugation"], _maxabs(S @ p.P @ S - p.Q), _maxabs(S @ p.Q @ S - p.P)
            )
        h = halmos(p)
        G = h.generic_projection()
        worst["halmos_reconstruction"] = max(worst["halmos_reconstruction"], _maxabs(h.reconstruct_Q() - G @ p.Q @ G))
        r = int(rng.integers(1, dim))
        on = oblique_norms(random_oblique(dim, r, rng))
        worst["oblique_equality"] = max(worst["oblique_equality"], abs(on.norm - on.complement_norm))
        worst["ljance_agreement"] = max(worst["ljance_agreement"], abs(on.norm - on.ljance))
    return PairAudit(trials=trials, near_pairs=near, **worst)
