"""Nystrom extension of a PSD kernel from a landmark subset.

Given landmarks ``J`` with the kernel partitioned as::

    Q = [[Q_J, Y], [Y^T, Z]]

the extension replaces ``Z`` by ``Y^T Q_J^+ Y``. The approximation error
in trace norm is the trace of the Schur complement ``Z - Y^T Q_J^+ Y``,
which :func:`nystrom_error_trace` evaluates without forming the
completed matrix.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidSubsetError, ParameterError
from .linalg import (
    DEFAULT_RTOL,
    KernelMatrix,
    LandmarkSubset,
    as_kernel,
    as_subset,
    fix_signs,
    partition,
    symmetrize,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class NystromApprox:
    """Factorized Nystrom approximation.

    Attributes
    ----------
    subset : LandmarkSubset
    Q_J : (k, k) array
        Landmark block.
    Y : (k, n - k) array
        Landmark-to-complement block, complement in increasing order.
    eigenvalues : (k,) array
        Eigenvalues of ``Q_J``, non-increasing.
    eigenvectors : (n, k) array
        Approximate eigenvectors in the *original* row order: rows in
        ``J`` hold ``U_J`` and the remaining rows hold
        ``Y^T U_J Lambda_J^+``. Columns for discarded (null) eigenvalues
        are zero outside ``J``.
    rtol : float
        Pseudo-inverse threshold used for ``Q_J``.
    """

    subset: LandmarkSubset
    Q_J: np.ndarray
    Y: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    rtol: float = DEFAULT_RTOL

    @property
    def n(self) -> int:
        return self.subset.n

    @property
    def k(self) -> int:
        return self.subset.k

    @property
    def retained(self) -> np.ndarray:
        """Mask of eigenvalues above the pseudo-inverse threshold."""
        w = self.eigenvalues
        if w.size == 0 or w[0] <= 0:
            return np.zeros(w.shape, dtype=bool)
        return w > self.rtol * w[0]

    def completion_factor(self) -> np.ndarray:
        """``G`` (n x r) with ``G @ G.T`` equal to the completed kernel."""
        keep = self.retained
        return self.eigenvectors[:, keep] * np.sqrt(self.eigenvalues[keep])


def nystrom_extend(Q, J, rtol: float = DEFAULT_RTOL) -> NystromApprox:
    """Nystrom approximation of ``Q`` from landmark rows/columns ``J``.

    Requires ``1 <= |J| < n``.
    """
    Q = as_kernel(Q)
    J = as_subset(J, Q.n)
    if J.k >= Q.n:
        raise InvalidSubsetError("the Nystrom extension needs at least one non-landmark index")
    p = partition(Q, J)
    w, U = np.linalg.eigh(symmetrize(p.Q_J))
    w, U = w[::-1].copy(), fix_signs(U[:, ::-1])
    inv = np.zeros_like(w)
    if w.size and w[0] > 0:
        keep = w > rtol * w[0]
        inv[keep] = 1.0 / w[keep]
    Ut = np.empty((Q.n, J.k))
    Ut[J.array] = U
    Ut[J.complement] = p.Y.T @ U * inv
    return NystromApprox(J, p.Q_J, p.Y, w, Ut, rtol)


def reconstruct(approx: NystromApprox) -> KernelMatrix:
    """Materialize the completed kernel in the original index order.

    The ``J`` rows and columns are copied from ``[Q_J, Y]`` verbatim; only
    the complement block is synthesized.
    """
    J = approx.subset
    j, jbar = J.array, J.complement
    G = approx.completion_factor()[jbar]
    out = np.empty((approx.n, approx.n))
    out[np.ix_(j, j)] = approx.Q_J
    out[np.ix_(j, jbar)] = approx.Y
    out[np.ix_(jbar, j)] = approx.Y.T
    out[np.ix_(jbar, jbar)] = G @ G.T
    return KernelMatrix(out)


@dataclass(frozen=True)
class OrthogonalEigensystem:
    """Orthonormal eigenvectors of a Nystrom completion.

    ``rank`` can be smaller than the number of landmarks when ``Q_J`` is
    singular; ``dropped`` counts the discarded directions.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    dropped: int

    @property
    def rank(self) -> int:
        return self.eigenvectors.shape[1]


def orthogonalized_eigenvectors(approx: NystromApprox, rtol: float = DEFAULT_RTOL) -> OrthogonalEigensystem:
    """Orthonormalize the approximate eigenvectors by a k x k projection.

    With ``G`` the completion factor (``Q~ = G G^T``) and ``G^T G = R S R^T``,
    the columns of ``G R S^{-1/2}`` are orthonormal, span the same space
    as the approximate eigenvectors, and are exact eigenvectors of the
    completed kernel with eigenvalues ``S``. Cost is ``O(n k^2)``.
    """
    G = approx.completion_factor()
    s, R = np.linalg.eigh(symmetrize(G.T @ G))
    s, R = s[::-1], R[:, ::-1]
    keep = s > rtol * s[0] if s.size and s[0] > 0 else np.zeros(s.shape, dtype=bool)
    V = G @ (R[:, keep] / np.sqrt(s[keep]))
    dropped = approx.k - int(keep.sum())
    if dropped:
        log.info("orthogonalization dropped %d rank-deficient direction(s)", dropped)
    return OrthogonalEigensystem(s[keep].copy(), fix_signs(V), dropped)


def nystrom_error_trace(Q, J, rtol: float = DEFAULT_RTOL) -> float:
    """Trace-norm error ``tr(Z) - tr(Y^T Q_J^+ Y)`` of the Nystrom extension.

    A full subset (``|J| = n``) reconstructs exactly and returns 0. Tiny
    negative values from cancellation are clipped to 0.
    """
    Q = as_kernel(Q)
    J = as_subset(J, Q.n)
    if J.k == Q.n:
        return 0.0
    a = Q.values
    j, jbar = J.array, J.complement
    QJ = a[np.ix_(j, j)]
    Y = a[np.ix_(j, jbar)]
    w, U = np.linalg.eigh(symmetrize(QJ))
    tr_z = float(np.sum(a[jbar, jbar]))
    if w[-1] <= 0:
        return max(tr_z, 0.0)
    keep = w > rtol * w[-1]
    P = U[:, keep].T @ Y
    explained = float(np.sum(np.sum(P * P, axis=1) / w[keep]))
    return max(tr_z - explained, 0.0)


def optimal_rank_k_error(Q, k: int) -> float:
    """Trace-norm error of the best rank-``k`` approximation: sum of the tail eigenvalues."""
    Q = as_kernel(Q)
    if not (0 <= k <= Q.n):
        raise ParameterError(f"k must lie in [0, {Q.n}], got {k}")
    w = np.sort(np.linalg.eigvalsh(Q.values))[::-1]
    return float(np.sum(np.clip(w[k:], 0.0, None)))


def regression_residual_error(X, J) -> float:
    """Residual sum of squares from regressing columns ``X[:, ~J]`` on ``X[:, J]``.

    For ``Q = X^T X`` this equals :func:`nystrom_error_trace` ``(Q, J)``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ParameterError("X must be a 2-D factor matrix")
    J = as_subset(J, X.shape[1])
    XJ, Xr = X[:, J.array], X[:, J.complement]
    if Xr.shape[1] == 0:
        return 0.0
    coef, *_ = np.linalg.lstsq(XJ, Xr, rcond=None)
    resid = Xr - XJ @ coef
    return float(np.sum(resid * resid))


def normalized_error(Q, J, rtol: float = DEFAULT_RTOL) -> float:
    """Nystrom trace-norm error divided by ``tr(Q)``."""
    Q = as_kernel(Q)
    if not Q.trace > 0:
        raise ParameterError("normalized error is undefined for a zero-trace kernel")
    return nystrom_error_trace(Q, J, rtol) / Q.trace
