"""Kernel constructors and normalizations for point clouds."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .exceptions import DegenerateKernelError, ParameterError
from .linalg import KernelMatrix, as_kernel


@dataclass(frozen=True)
class PointCloud:
    """``N`` samples in ``R^n``, one per row, with optional ground-truth tags."""

    points: np.ndarray
    tags: Optional[np.ndarray] = None

    def __post_init__(self):
        X = np.array(self.points, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2:
            raise ParameterError(f"points must be a 2-D array, got shape {X.shape}")
        if X.shape[0] < 2:
            raise ParameterError("a point cloud needs at least 2 samples")
        if not np.all(np.isfinite(X)):
            raise ParameterError("point cloud has non-finite entries")
        X.setflags(write=False)
        object.__setattr__(self, "points", X)
        if self.tags is not None:
            t = np.array(self.tags, dtype=float)
            if t.shape[0] != X.shape[0]:
                raise ParameterError("tags must have one row per point")
            t.setflags(write=False)
            object.__setattr__(self, "tags", t)

    @property
    def N(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def take(self, order) -> "PointCloud":
        order = np.asarray(order, dtype=np.intp)
        tags = None if self.tags is None else self.tags[order]
        return PointCloud(self.points[order], tags)


def as_points(X) -> np.ndarray:
    if isinstance(X, PointCloud):
        return X.points
    return PointCloud(X).points


def standardize(X) -> PointCloud:
    """Zero-mean, unit-variance features; constant features are only centred."""
    tags = X.tags if isinstance(X, PointCloud) else None
    A = as_points(X)
    mu = A.mean(axis=0)
    sd = A.std(axis=0)
    sd[sd == 0] = 1.0
    return PointCloud((A - mu) / sd, tags)


def squared_distances(X) -> np.ndarray:
    return squareform(pdist(as_points(X), "sqeuclidean"))


def rbf_kernel(X, sigma: float) -> KernelMatrix:
    """Gaussian kernel ``exp(-|x_i - x_j|^2 / (2 sigma^2))``."""
    if not sigma > 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    return KernelMatrix(np.exp(-squared_distances(X) / (2.0 * sigma**2)))


def knn_adjacency(X, k_nn: int) -> np.ndarray:
    """Symmetric boolean k-nearest-neighbour adjacency with empty diagonal.

    ``i ~ j`` iff ``j`` is among the ``k_nn`` closest points to ``i`` or
    vice versa. Distance ties go to the lower index.
    """
    D2 = squared_distances(X)
    N = D2.shape[0]
    if not (1 <= k_nn < N):
        raise ParameterError(f"k_nn must lie in [1, {N - 1}], got {k_nn}")
    np.fill_diagonal(D2, np.inf)
    nearest = np.argsort(D2, axis=1, kind="stable")[:, :k_nn]
    A = np.zeros((N, N), dtype=bool)
    A[np.repeat(np.arange(N), k_nn), nearest.ravel()] = True
    return A | A.T


def knn_graph_kernel(X, k_nn: int, sigma: float) -> KernelMatrix:
    """RBF weights restricted to the symmetrized k-NN graph, zero diagonal."""
    if not sigma > 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    A = knn_adjacency(X, k_nn)
    W = np.exp(-squared_distances(X) / (2.0 * sigma**2))
    return KernelMatrix(np.where(A, W, 0.0))


def degree(Q) -> np.ndarray:
    return np.asarray(Q, dtype=float).sum(axis=1)


def _positive_degrees(Q) -> np.ndarray:
    d = degree(Q)
    bad = np.flatnonzero(d <= 0)
    if bad.size:
        raise DegenerateKernelError(int(bad[0]))
    return d


def markov_matrix(Q) -> np.ndarray:
    """Row-stochastic transition matrix ``D^{-1} Q``."""
    d = _positive_degrees(Q)
    return np.asarray(Q, dtype=float) / d[:, None]


def symmetric_normalization(Q) -> KernelMatrix:
    """``D^{-1/2} Q D^{-1/2}``; shares its spectrum with ``D^{-1} Q``."""
    s = 1.0 / np.sqrt(_positive_degrees(Q))
    return KernelMatrix(s[:, None] * np.asarray(Q, dtype=float) * s[None, :])


def combinatorial_laplacian(Q) -> KernelMatrix:
    """Graph Laplacian ``L = D - Q``."""
    Q = as_kernel(Q)
    return KernelMatrix(np.diag(degree(Q)) - Q.values)


def covariance_kernel(X) -> KernelMatrix:
    """Feature-space kernel ``X_c^T X_c`` of order ``n`` (the feature dimension).

    Samples are rows of ``X``; features are mean-centred first. No
    division by ``N`` is applied.
    """
    A = as_points(X)
    Xc = A - A.mean(axis=0)
    return KernelMatrix(Xc.T @ Xc)


def gram_kernel(X) -> KernelMatrix:
    """Inner-product kernel ``<x_i, x_j>`` of order ``N``."""
    A = as_points(X)
    return KernelMatrix(A @ A.T)
