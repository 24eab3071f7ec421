"""Spectral embeddings: PCA, diffusion maps and Laplacian eigenmaps.

Diffusion maps eigendecompose the symmetric conjugate
``D^{-1/2} Q D^{-1/2}`` of the Markov matrix ``D^{-1} Q`` and map the
eigenvectors back with ``D^{-1/2}``; Laplacian eigenmaps do the same
with the normalized Laplacian. Eigenvector signs follow
:func:`nystrom_landmarks.linalg.fix_signs` on the symmetric problem, so
comparisons between embeddings should be made up to per-column sign.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components

from .exceptions import (
    AmbiguousTrivialPairError,
    ConnectivityError,
    InsufficientLandmarksError,
    ParameterError,
)
from .kernels import (
    as_points,
    combinatorial_laplacian,
    covariance_kernel,
    degree,
    knn_graph_kernel,
    rbf_kernel,
)
from .linalg import DEFAULT_RTOL, as_subset, eigh
from .nystrom import nystrom_extend, orthogonalized_eigenvectors

#: Eigenvalues within this distance of 1 count toward the trivial eigenvalue's multiplicity.
TRIVIAL_TOL = 1e-10


@dataclass(frozen=True)
class Embedding:
    """Low-dimensional coordinates with the eigenvalues that produced them."""

    coordinates: np.ndarray
    eigenvalues: np.ndarray
    method: str
    trivial_dropped: bool = False
    metadata: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.coordinates.shape[1]


def pca_embed(X, d: int) -> Embedding:
    """Project centred samples on the top-``d`` eigenvectors of ``X_c^T X_c``.

    Column ``i`` of the coordinates has sum of squares equal to the
    ``i``-th eigenvalue.
    """
    A = as_points(X)
    n = A.shape[1]
    if not (1 <= d <= n):
        raise ParameterError(f"d must lie in [1, {n}], got {d}")
    spec = eigh(covariance_kernel(A))
    Xc = A - A.mean(axis=0)
    return Embedding(Xc @ spec.eigenvectors[:, :d], spec.eigenvalues[:d].copy(), "pca")


def _check_dim(d: int, N: int):
    if not (1 <= d <= N - 1):
        raise ParameterError(f"embedding dimension must lie in [1, {N - 1}], got {d}")


def diffusion_maps_embed(X, sigma: float, d: int, m: int = 1) -> Embedding:
    """Diffusion maps coordinates ``u_i lambda_i^m`` for the ``d`` leading non-trivial pairs.

    ``u_i = D^{-1/2} v_i`` where ``v_i`` are unit eigenvectors of the
    symmetric conjugate, so each ``u_i`` has unit ``D``-norm. The pair
    with eigenvalue 1 (constant eigenvector) is removed.

    Raises
    ------
    AmbiguousTrivialPairError
        If eigenvalue 1 is not simple, i.e. the kernel is numerically
        disconnected.
    """
    A = as_points(X)
    N = A.shape[0]
    _check_dim(d, N)
    if m < 1:
        raise ParameterError("diffusion time m must be a positive integer")
    Q = rbf_kernel(A, sigma)
    deg = degree(Q)
    s = 1.0 / np.sqrt(deg)
    spec = eigh(s[:, None] * Q.values * s[None, :])
    w = spec.eigenvalues
    mult = int(np.sum(np.abs(w - 1.0) <= TRIVIAL_TOL))
    if mult > 1:
        raise AmbiguousTrivialPairError(mult)
    U = s[:, None] * spec.eigenvectors
    u0 = U[:, 0]
    lam = w[1:d + 1]
    meta = {
        "sigma": float(sigma),
        "m": int(m),
        "trivial_eigenvalue": float(w[0]),
        "trivial_constancy": float(np.ptp(u0) / np.max(np.abs(u0))),
    }
    return Embedding(U[:, 1:d + 1] * lam**m, lam.copy(), "diffusion_maps", True, meta)


def laplacian_eigenmaps_embed(X, k_nn: int, sigma: float, d: int) -> Embedding:
    """Laplacian eigenmaps on the symmetrized k-NN graph.

    Solves ``L v = lambda D v`` through the normalized Laplacian
    ``D^{-1/2} L D^{-1/2}``, drops the constant solution and returns the
    next ``d`` generalized eigenvectors with ``v^T D v = 1``. Eigenvalues
    are reported in increasing order, and for the returned coordinates
    ``sum_ij |y_i - y_j|^2 Q_ij = 2 * sum(eigenvalues)``.
    """
    A = as_points(X)
    N = A.shape[0]
    _check_dim(d, N)
    Q = knn_graph_kernel(A, k_nn, sigma)
    n_comp, _ = connected_components(Q.values > 0, directed=False)
    if n_comp > 1:
        raise ConnectivityError(int(n_comp))
    L = combinatorial_laplacian(Q).values
    s = 1.0 / np.sqrt(degree(Q))
    spec = eigh(s[:, None] * L * s[None, :])
    w = spec.eigenvalues[::-1]
    V = s[:, None] * spec.eigenvectors[:, ::-1]
    lam = w[1:d + 1]
    meta = {"k_nn": int(k_nn), "sigma": float(sigma), "null_eigenvalue": float(w[0])}
    return Embedding(V[:, 1:d + 1], lam.copy(), "laplacian_eigenmaps", True, meta)


def _normalized_variance(U: np.ndarray) -> np.ndarray:
    ms = np.mean(U * U, axis=0)
    ms[ms == 0] = 1.0
    return np.var(U, axis=0) / ms


def select_trivial_pair(eigenvalues: np.ndarray, vectors: np.ndarray) -> int:
    """Index of the approximate trivial pair.

    Candidates are the eigenvalues nearest to 1 (within twice the
    smallest distance); among them the vector with the smallest
    coordinate variance relative to its mean square is chosen.
    """
    dist = np.abs(eigenvalues - 1.0)
    cand = np.flatnonzero(dist <= 2.0 * dist.min() + 1e-12)
    return int(cand[np.argmin(_normalized_variance(vectors[:, cand]))])


def nystrom_diffusion_embed(X, sigma: float, J, d: int, m: int = 1,
                            rtol: float = DEFAULT_RTOL) -> Embedding:
    """Diffusion maps from a Nystrom approximation of the normalized kernel.

    Degrees come from the full RBF kernel. The Nystrom eigenvectors of
    ``D^{-1/2} Q D^{-1/2}`` are orthogonalized, mapped back through
    ``D^{-1/2}``, the approximate trivial pair is removed (see
    :func:`select_trivial_pair`) and the next ``d`` columns are scaled by
    ``lambda^m``. A full landmark set gives the exact embedding.
    """
    A = as_points(X)
    N = A.shape[0]
    _check_dim(d, N)
    if m < 1:
        raise ParameterError("diffusion time m must be a positive integer")
    J = as_subset(J, N)
    if J.k <= d:
        raise InsufficientLandmarksError(f"{J.k} landmarks cannot support a {d}-dimensional embedding")
    Q = rbf_kernel(A, sigma)
    s = 1.0 / np.sqrt(degree(Q))
    Qn = s[:, None] * Q.values * s[None, :]
    if J.k == N:
        spec = eigh(Qn)
        w, V, dropped = spec.eigenvalues, spec.eigenvectors, 0
    else:
        eig = orthogonalized_eigenvectors(nystrom_extend(Qn, J, rtol), rtol)
        w, V, dropped = eig.eigenvalues, eig.eigenvectors, eig.dropped
    if len(w) <= d:
        raise InsufficientLandmarksError(
            f"only {len(w)} non-degenerate Nystrom eigenpairs for a {d}-dimensional embedding"
        )
    U = s[:, None] * V
    t = select_trivial_pair(w, U)
    keep = np.delete(np.arange(len(w)), t)[:d]
    lam = w[keep]
    meta = {
        "sigma": float(sigma),
        "m": int(m),
        "landmarks": list(J.indices) if J.k < N else "all",
        "trivial_index": t,
        "trivial_eigenvalue": float(w[t]),
        "rank_dropped": int(dropped),
    }
    return Embedding(U[:, keep] * lam**m, lam.copy(), "nystrom_diffusion_maps", True, meta)
