"""Dense Hermitian operator algebra and Schrödinger discretizers.

Everything downstream works with :class:`HermitianMatrix` (a validated dense
matrix) or, for large 1D grids, :class:`TridiagonalMatrix`.  Spectral
projections and reduced resolvents are assembled from eigenvector outer
products rather than contour integrals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg

from .errors import KatolabError, SpectralError

__all__ = [
    "HermitianMatrix",
    "SpectralDecomposition",
    "OrthogonalProjection",
    "Grid1D",
    "TridiagonalMatrix",
    "as_hermitian",
    "eig",
    "spectral_projection",
    "reduced_resolvent",
    "resolvent",
    "discretize_1d",
    "radial_channel",
    "richardson",
    "random_hermitian",
    "fix_phase",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class HermitianMatrix:
    """Dense square matrix certified Hermitian within a relative tolerance.

    Real symmetric input keeps its real dtype; complex input stays complex.
    """

    entries: np.ndarray
    herm_tol: float = 1e-12

    def __post_init__(self):
        a = np.array(self.entries, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise KatolabError(f"expected a nonempty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise KatolabError("matrix has non-finite entries")
        if not np.iscomplexobj(a):
            a = a.astype(float)
        scale = max(1.0, float(np.max(np.abs(a))))
        asym = float(np.max(np.abs(a - a.conj().T)))
        if asym > self.herm_tol * scale:
            raise SpectralError(f"not Hermitian (asymmetry {asym:.3e})")
        # symmetrize so downstream identities hold to rounding
        a = 0.5 * (a + a.conj().T)
        object.__setattr__(self, "entries", _frozen(a))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def A(self) -> np.ndarray:
        return self.entries

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def norm(self) -> float:
        """Operator 2-norm."""
        return float(np.max(np.abs(linalg.eigvalsh(self.entries))))


MatrixLike = Union[HermitianMatrix, ArrayLike]


def as_hermitian(H: MatrixLike, herm_tol: float = 1e-12) -> HermitianMatrix:
    if isinstance(H, HermitianMatrix):
        return H
    if isinstance(H, TridiagonalMatrix):
        return H.dense()
    return HermitianMatrix(np.asarray(H), herm_tol=herm_tol)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Ascending eigenvalues, orthonormal eigenvectors (columns) and clusters."""

    eigenvalues: np.ndarray
    vectors: np.ndarray
    clusters: tuple[tuple[int, ...], ...]
    cluster_tol: float

    def cluster_of(self, E0: float) -> tuple[int, ...]:
        """Indices of the cluster containing ``E0``; raises if none does."""
        for c in self.clusters:
            vals = self.eigenvalues[list(c)]
            if np.min(np.abs(vals - E0)) <= max(self.cluster_tol, 1e-14 * max(1.0, abs(E0))):
                return c
        raise SpectralError("E0 not in spectrum")

    def cluster_containing_index(self, index: int) -> tuple[int, ...]:
        for c in self.clusters:
            if index in c:
                return c
        raise IndexError(index)

    def projector(self, indices: Sequence[int]) -> np.ndarray:
        V = self.vectors[:, list(indices)]
        return V @ V.conj().T


def fix_phase(V: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude component is real positive."""
    V = np.array(V, dtype=complex if np.iscomplexobj(V) else float, copy=True)
    idx = np.argmax(np.abs(V), axis=0)
    pivots = V[idx, np.arange(V.shape[1])]
    phases = pivots / np.abs(pivots)
    return V / phases[np.newaxis, :]


def _default_cluster_tol(evals: np.ndarray) -> float:
    return 1e-9 * float(np.max(np.abs(evals))) if evals.size else 0.0


def _clusters(evals: np.ndarray, tol: float) -> tuple[tuple[int, ...], ...]:
    groups: list[list[int]] = [[0]]
    for k in range(1, len(evals)):
        if evals[k] - evals[k - 1] <= tol:
            groups[-1].append(k)
        else:
            groups.append([k])
    return tuple(tuple(g) for g in groups)


def eig(H: MatrixLike, cluster_tol: float | None = None) -> SpectralDecomposition:
    """Full eigendecomposition with degeneracy clustering.

    Parameters
    ----------
    H : HermitianMatrix, TridiagonalMatrix or array
        Operator to diagonalize.  Arrays are validated as Hermitian.
    cluster_tol : float, optional
        Eigenvalues whose consecutive gaps are at most this value share a
        cluster.  Defaults to ``1e-9`` times the spectral radius.
    """
    if isinstance(H, TridiagonalMatrix):
        try:
            evals, V = linalg.eigh_tridiagonal(H.diagonal, H.offdiagonal)
        except linalg.LinAlgError as exc:
            raise SpectralError("decomposition failed") from exc
    else:
        H = as_hermitian(H)
        try:
            evals, V = linalg.eigh(H.entries)
        except linalg.LinAlgError as exc:
            raise SpectralError("decomposition failed") from exc
    tol = _default_cluster_tol(evals) if cluster_tol is None else float(cluster_tol)
    V = fix_phase(V)
    return SpectralDecomposition(
        eigenvalues=_frozen(evals), vectors=_frozen(V), clusters=_clusters(evals, tol), cluster_tol=tol
    )


@dataclass(frozen=True)
class OrthogonalProjection:
    matrix: HermitianMatrix
    rank: int = field(init=False)

    def __post_init__(self):
        M = as_hermitian(self.matrix)
        object.__setattr__(self, "matrix", M)
        P = M.entries
        if np.max(np.abs(P @ P - P)) > 1e-10:
            raise KatolabError("matrix is not idempotent")
        tr = float(np.real(np.trace(P)))
        r = int(round(tr))
        if abs(tr - r) > 1e-8:
            raise KatolabError(f"trace {tr} of projection is not an integer")
        object.__setattr__(self, "rank", r)

    @property
    def dim(self) -> int:
        return self.matrix.dim

    @property
    def A(self) -> np.ndarray:
        return self.matrix.entries

    def complement(self) -> "OrthogonalProjection":
        return OrthogonalProjection(HermitianMatrix(np.eye(self.dim) - self.A))

    @classmethod
    def onto(cls, basis: ArrayLike) -> "OrthogonalProjection":
        """Projection onto the column span of ``basis`` (need not be orthonormal)."""
        X = np.atleast_2d(np.asarray(basis))
        if X.shape[0] == 1 and X.ndim == 2 and np.asarray(basis).ndim == 1:
            X = X.T
        Qm, _ = np.linalg.qr(X)
        return cls(HermitianMatrix(Qm @ Qm.conj().T))


def spectral_projection(
    H: MatrixLike, interval: tuple[float, float], cluster_tol: float | None = None
) -> OrthogonalProjection:
    """Projection onto eigenvectors whose eigenvalues lie in the open interval."""
    a, b = interval
    if not a < b:
        raise KatolabError("interval must satisfy a < b")
    dec = eig(H, cluster_tol)
    tol = max(dec.cluster_tol, 1e-14)
    ev = dec.eigenvalues
    if np.any(np.abs(ev - a) <= tol) or np.any(np.abs(ev - b) <= tol):
        raise SpectralError("endpoint hits spectrum")
    inside = np.nonzero((ev > a) & (ev < b))[0]
    return OrthogonalProjection(HermitianMatrix(dec.projector(inside)))


def reduced_resolvent(H: MatrixLike, E0: float, cluster_tol: float | None = None) -> HermitianMatrix:
    """The inverse of ``H - E0`` on the complement of the ``E0`` eigenspace, zero on it."""
    dec = eig(H, cluster_tol)
    cluster = set(dec.cluster_of(E0))
    ev = dec.eigenvalues
    weights = np.array([0.0 if k in cluster else 1.0 / (ev[k] - E0) for k in range(len(ev))])
    V = dec.vectors
    return HermitianMatrix((V * weights) @ V.conj().T)


def resolvent(H: MatrixLike, z: complex) -> np.ndarray:
    """``(H - z)^{-1}`` computed from the spectral decomposition."""
    dec = eig(H)
    d = dec.eigenvalues - z
    if np.min(np.abs(d)) <= 1e-12:
        raise SpectralError("resolvent pole")
    V = dec.vectors
    return (V * (1.0 / d)) @ V.conj().T


def random_hermitian(n: int, rng: np.random.Generator, complex_: bool = True) -> HermitianMatrix:
    X = rng.standard_normal((n, n))
    if complex_:
        X = X + 1j * rng.standard_normal((n, n))
    return HermitianMatrix((X + X.conj().T) / 2)


# ---------------------------------------------------------------- discretizers


@dataclass(frozen=True)
class Grid1D:
    """Uniform interior grid on ``(x_min, x_max)`` with Dirichlet ends."""

    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise KatolabError("grid requires x_min < x_max")
        if self.n < 2:
            raise KatolabError("grid requires at least 2 interior points")

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n + 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.x_min + self.h * np.arange(1, self.n + 1)


@dataclass(frozen=True)
class TridiagonalMatrix:
    """Real symmetric tridiagonal operator stored by its two bands."""

    diagonal: np.ndarray
    offdiagonal: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diagonal, dtype=float)
        e = np.asarray(self.offdiagonal, dtype=float)
        if e.shape[0] != d.shape[0] - 1:
            raise KatolabError("offdiagonal must have length n-1")
        object.__setattr__(self, "diagonal", _frozen(d.copy()))
        object.__setattr__(self, "offdiagonal", _frozen(e.copy()))

    @property
    def dim(self) -> int:
        return self.diagonal.shape[0]

    def dense(self) -> HermitianMatrix:
        return HermitianMatrix(
            np.diag(self.diagonal) + np.diag(self.offdiagonal, 1) + np.diag(self.offdiagonal, -1)
        )

    def eigvalsh(self, k: int | None = None) -> np.ndarray:
        """Lowest ``k`` eigenvalues (all when ``k`` is None)."""
        if k is None:
            return linalg.eigvalsh_tridiagonal(self.diagonal, self.offdiagonal)
        return linalg.eigvalsh_tridiagonal(
            self.diagonal, self.offdiagonal, select="i", select_range=(0, k - 1)
        )

    def eigh(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        return linalg.eigh_tridiagonal(
            self.diagonal, self.offdiagonal, select="i", select_range=(0, k - 1)
        )

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diagonal * v
        out[:-1] += self.offdiagonal * v[1:]
        out[1:] += self.offdiagonal * v[:-1]
        return out


def _sample(V: Callable[[np.ndarray], ArrayLike] | ArrayLike, x: np.ndarray) -> np.ndarray:
    vals = np.asarray(V(x) if callable(V) else V, dtype=float)
    if vals.shape == ():
        vals = np.full_like(x, float(vals))
    if vals.shape != x.shape:
        raise KatolabError(f"potential has shape {vals.shape}, grid has {x.shape}")
    if not np.all(np.isfinite(vals)):
        raise KatolabError("invalid potential sample")
    return vals


def discretize_1d(grid: Grid1D, V) -> TridiagonalMatrix:
    """Three-point stencil for ``-d²/dx² + V`` with Dirichlet ends.

    ``V`` is either a callable evaluated at the nodes or an array of samples.
    """
    x = grid.nodes
    h2 = grid.h**2
    diag = 2.0 / h2 + _sample(V, x)
    off = np.full(grid.n - 1, -1.0 / h2)
    return TridiagonalMatrix(diag, off)


def radial_channel(grid: Grid1D, nu: int, ell: int, q=0.0) -> TridiagonalMatrix:
    """Reduced radial operator of angular momentum ``ell`` in ``nu`` dimensions.

    Builds ``-d²/dr² + (nu-1)(nu-3)/(4r²) + ell(ell+nu-2)/r² + q(r)`` on a
    grid whose first node sits at ``r = h`` (Dirichlet at the origin).
    """
    if grid.x_min < 0:
        raise KatolabError("negative radius")
    if nu < 2 or ell < 0:
        raise KatolabError("need nu >= 2 and ell >= 0")
    r = grid.nodes
    barrier = (nu - 1) * (nu - 3) / 4.0 + ell * (ell + nu - 2)
    return discretize_1d(grid, barrier / r**2 + _sample(q, r))


def richardson(coarse: float, fine: float, order: int = 2, ratio: float = 2.0) -> float:
    """Extrapolate two grid results whose error scales like ``h**order``."""
    f = ratio**order
    return (f * fine - coarse) / (f - 1.0)
