"""Dense symmetric linear algebra used throughout the package.

The central objects are :class:`KernelMatrix` (an immutable symmetric
matrix with a cached trace), :class:`LandmarkSubset` (a sorted index set
with its complement) and :class:`Spectrum` (a sorted eigendecomposition
with a deterministic sign convention).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.linalg import lapack

from .exceptions import EigenSolverError, InvalidSubsetError, ParameterError

#: Relative threshold below which eigenvalues / pivots are treated as zero.
DEFAULT_RTOL = 1e-12
#: Relative tolerance for PSD validation.
PSD_TOL = 1e-10


class KernelMatrix:
    """Immutable dense symmetric matrix with a cached trace.

    The input is copied and symmetrized as ``(M + M.T) / 2`` so that
    symmetry holds exactly. Positive semi-definiteness is *not* checked
    here because it costs an eigendecomposition; call
    :meth:`validate_psd` when it matters.
    """

    __slots__ = ("_values", "trace")

    def __init__(self, values):
        if isinstance(values, KernelMatrix):
            values = values.values
        a = np.array(values, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ParameterError(f"kernel must be a square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ParameterError("kernel has non-finite entries")
        a = (a + a.T) / 2.0
        a.setflags(write=False)
        self._values = a
        self.trace = float(np.trace(a))

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def n(self) -> int:
        return self._values.shape[0]

    @property
    def shape(self):
        return self._values.shape

    def diagonal(self) -> np.ndarray:
        return np.diag(self._values).copy()

    def __array__(self, dtype=None, copy=None):
        if dtype is None and not copy:
            return self._values
        return np.array(self._values, dtype=dtype, copy=True)

    def __repr__(self):
        return f"KernelMatrix(n={self.n}, trace={self.trace:.6g})"

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self._values)[0])

    def is_psd(self, tol: float = PSD_TOL) -> bool:
        if np.any(np.diag(self._values) < 0):
            return False
        w = np.linalg.eigvalsh(self._values)
        return bool(w[0] >= -tol * max(w[-1], 0.0))

    def validate_psd(self, tol: float = PSD_TOL) -> "KernelMatrix":
        """Raise :class:`ParameterError` unless the matrix is PSD; return self."""
        if not self.is_psd(tol):
            raise ParameterError(
                f"kernel is not positive semi-definite (min eigenvalue {self.min_eigenvalue():.3e})"
            )
        return self


MatrixLike = Union[KernelMatrix, np.ndarray]


def as_kernel(Q) -> KernelMatrix:
    return Q if isinstance(Q, KernelMatrix) else KernelMatrix(Q)


def symmetrize(M) -> np.ndarray:
    a = np.asarray(M, dtype=float)
    return (a + a.T) / 2.0


@dataclass(frozen=True)
class LandmarkSubset:
    """Sorted set of landmark indices ``J`` within ``range(n)``."""

    indices: tuple
    n: int

    def __post_init__(self):
        idx = tuple(sorted(int(i) for i in self.indices))
        n = int(self.n)
        if len(idx) == 0:
            raise InvalidSubsetError("landmark subset is empty")
        if len(set(idx)) != len(idx):
            raise InvalidSubsetError(f"landmark subset has repeated indices: {idx}")
        if idx[0] < 0 or idx[-1] >= n:
            raise InvalidSubsetError(f"landmark indices must lie in [0, {n}), got {idx}")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "n", n)

    @classmethod
    def full(cls, n: int) -> "LandmarkSubset":
        return cls(tuple(range(n)), n)

    @property
    def k(self) -> int:
        return len(self.indices)

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.indices, dtype=np.intp)

    @property
    def mask(self) -> np.ndarray:
        m = np.zeros(self.n, dtype=bool)
        m[list(self.indices)] = True
        return m

    @property
    def complement(self) -> np.ndarray:
        """Indices not in ``J``, increasing."""
        return np.flatnonzero(~self.mask)

    @property
    def permutation(self) -> np.ndarray:
        """``J`` followed by its complement; maps block order to original order."""
        return np.concatenate([self.array, self.complement])


def as_subset(J, n: int) -> LandmarkSubset:
    if isinstance(J, LandmarkSubset):
        if J.n != n:
            raise InvalidSubsetError(f"subset is over {J.n} indices but the kernel has order {n}")
        return J
    return LandmarkSubset(tuple(np.asarray(J, dtype=np.intp).ravel()), n)


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted non-increasing with paired orthonormal eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n(self) -> int:
        return self.eigenvectors.shape[0]

    def reconstruct(self) -> np.ndarray:
        U = self.eigenvectors
        return (U * self.eigenvalues) @ U.T

    def top(self, d: int) -> "Spectrum":
        return Spectrum(self.eigenvalues[:d], self.eigenvectors[:, :d])


def fix_signs(V: np.ndarray) -> np.ndarray:
    """Flip columns so each one's largest-magnitude entry is positive.

    Ties in magnitude go to the lowest row index (``argmax`` semantics).
    """
    if V.size == 0:
        return V
    rows = np.argmax(np.abs(V), axis=0)
    signs = np.where(V[rows, np.arange(V.shape[1])] < 0, -1.0, 1.0)
    return V * signs


def eigh(Q: MatrixLike) -> Spectrum:
    """Eigendecomposition of a symmetric matrix, eigenvalues non-increasing.

    Raises
    ------
    EigenSolverError
        If LAPACK's divide-and-conquer driver fails to converge.
    """
    a = np.asarray(Q, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ParameterError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ParameterError("matrix has non-finite entries")
    n = a.shape[0]
    if n == 0:
        return Spectrum(np.empty(0), np.empty((0, 0)))
    w, v, info = lapack.dsyevd(symmetrize(a), compute_v=1, lower=1)
    if info != 0:
        raise EigenSolverError(n, info)
    w = w[::-1].copy()
    v = fix_signs(v[:, ::-1])
    return Spectrum(w, np.ascontiguousarray(v))


@dataclass(frozen=True)
class KernelPartition:
    """Blocks ``Q_J``, ``Y`` and ``Z`` of a kernel under a landmark subset."""

    subset: LandmarkSubset
    Q_J: np.ndarray
    Y: np.ndarray
    Z: np.ndarray

    def assemble(self) -> np.ndarray:
        """Reassemble the full matrix in the original index order."""
        block = np.block([[self.Q_J, self.Y], [self.Y.T, self.Z]])
        perm = self.subset.permutation
        out = np.empty_like(block)
        out[np.ix_(perm, perm)] = block
        return out


def principal_submatrix(Q, idx) -> np.ndarray:
    a = np.asarray(Q, dtype=float)
    idx = np.asarray(idx, dtype=np.intp)
    return a[np.ix_(idx, idx)]


def partition(Q: MatrixLike, J) -> KernelPartition:
    """Split ``Q`` into landmark block, cross block and complement block."""
    Q = as_kernel(Q)
    J = as_subset(J, Q.n)
    if J.k >= Q.n:
        raise InvalidSubsetError(
            f"subset of size {J.k} leaves no complement in a kernel of order {Q.n}"
        )
    a = Q.values
    j, jbar = J.array, J.complement
    return KernelPartition(
        subset=J,
        Q_J=a[np.ix_(j, j)],
        Y=a[np.ix_(j, jbar)],
        Z=a[np.ix_(jbar, jbar)],
    )


def psd_pinv_factor(A, rtol: float = DEFAULT_RTOL) -> np.ndarray:
    """Return ``F`` with ``F @ F.T`` the thresholded pseudo-inverse of PSD ``A``.

    Eigenvalues at or below ``rtol * max(eigenvalue)`` are discarded, so
    ``F`` has one column per retained eigenvalue.
    """
    w, U = np.linalg.eigh(symmetrize(A))
    if w.size == 0 or w[-1] <= 0:
        return np.zeros((len(w), 0))
    keep = w > rtol * w[-1]
    return U[:, keep] / np.sqrt(w[keep])


def schur_complement(Q: MatrixLike, J, rtol: float = DEFAULT_RTOL) -> np.ndarray:
    """``Z - Y^T Q_J^+ Y`` for the partition of ``Q`` induced by ``J``.

    A singular ``Q_J`` is handled by the thresholded pseudo-inverse of
    :func:`psd_pinv_factor` rather than raising.
    """
    if rtol <= 0:
        raise ParameterError("rtol must be positive")
    p = partition(Q, J)
    G = psd_pinv_factor(p.Q_J, rtol).T @ p.Y
    return symmetrize(p.Z - G.T @ G)


def trace_norm(M, assume_psd: bool = False) -> float:
    """Sum of singular values.

    With ``assume_psd=True`` the trace is returned directly, which equals
    the trace norm for positive semi-definite input.
    """
    a = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ParameterError("matrix has non-finite entries")
    if a.size == 0:
        return 0.0
    if assume_psd:
        return float(np.trace(a))
    return float(np.sum(np.linalg.svd(a, compute_uv=False)))


def logdet_psd(A, rtol: float = DEFAULT_RTOL) -> float:
    """Log-determinant of a symmetric PSD matrix via Cholesky.

    Returns ``-inf`` when a pivot is non-positive or falls below
    ``rtol * max(diag(A))``. The empty matrix has log-determinant 0.
    """
    a = np.asarray(A, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ParameterError("logdet_psd: matrix has non-finite entries")
    return _logdet_unchecked(a, rtol)


def _logdet_unchecked(a: np.ndarray, rtol: float = DEFAULT_RTOL) -> float:
    # hot path for samplers: no finiteness check; scalar work on Python
    # floats because numpy reductions dominate the cost for small k
    if a.shape[0] == 0:
        return 0.0
    scale = max(a.diagonal().tolist())
    if scale <= 0:
        return -math.inf
    c, info = lapack.dpotrf(a, lower=1, clean=0)
    if info != 0:
        return -math.inf
    d = c.diagonal().tolist()
    if min(d) ** 2 <= rtol * scale:
        return -math.inf
    return 2.0 * math.fsum(map(math.log, d))


def tridiagonal_logdet_approx(A, rtol: float = DEFAULT_RTOL) -> float:
    """Log-determinant of the tridiagonal part of ``A`` in O(k).

    Entries beyond the first off-diagonal are ignored. The continuant
    recurrence ``f_j = a_j f_{j-1} - b_{j-1}^2 f_{j-2}`` is run on the
    ratios ``r_j = f_j / f_{j-1}`` (the LDL^T pivots) to stay in the
    log domain; a pivot at or below ``rtol * max(diag)`` gives ``-inf``.
    """
    a = np.asarray(A, dtype=float)
    k = a.shape[0]
    if k == 0:
        return 0.0
    diag = np.diag(a)
    off = np.diag(a, 1)
    if not (np.all(np.isfinite(diag)) and np.all(np.isfinite(off))):
        raise ParameterError("tridiagonal_logdet_approx: non-finite entries")
    scale = diag.max()
    if scale <= 0:
        return -np.inf
    floor = rtol * scale
    total = 0.0
    r = diag[0]
    if r <= floor:
        return -np.inf
    total += np.log(r)
    for j in range(1, k):
        r = diag[j] - off[j - 1] ** 2 / r
        if r <= floor:
            return -np.inf
        total += np.log(r)
    return float(total)

