"""Landmark selection for Nystrom low-rank kernel approximation.

The Nystrom extension completes a PSD kernel ``Q`` from the rows and
columns indexed by a landmark subset ``J``; its trace-norm error is the
trace of the Schur complement of ``Q_J``. This package provides the
extension itself, several landmark selection schemes (uniform, squared
diagonal, annealed determinantal sampling via Metropolis, determinant
maximization), spectral embeddings built on top of it, and a benchmark
harness.
"""
__version__ = "0.1.0"

from .exceptions import (
    AmbiguousTrivialPairError,
    ConfigError,
    ConnectivityError,
    DegenerateDistributionError,
    DegenerateKernelError,
    DegenerateWeightsError,
    EigenSolverError,
    InsufficientLandmarksError,
    InvalidSubsetError,
    LandmarkError,
    NumericalDegeneracyError,
    ParameterError,
    RankExhaustedError,
)
from .linalg import (
    KernelMatrix,
    LandmarkSubset,
    Spectrum,
    eigh,
    logdet_psd,
    partition,
    schur_complement,
    trace_norm,
    tridiagonal_logdet_approx,
)
from .kernels import (
    PointCloud,
    combinatorial_laplacian,
    covariance_kernel,
    degree,
    gram_kernel,
    knn_graph_kernel,
    markov_matrix,
    rbf_kernel,
    symmetric_normalization,
)
from .nystrom import (
    NystromApprox,
    normalized_error,
    nystrom_error_trace,
    nystrom_extend,
    optimal_rank_k_error,
    orthogonalized_eigenvectors,
    reconstruct,
    regression_residual_error,
)
from .sampling import (
    DeterminantalChain,
    RandomSeed,
    det_max_exhaustive,
    det_max_greedy,
    det_max_random_search,
    detmc_subset,
    diag_squared_subset,
    exact_subset_distribution,
    expected_error_exact,
    uniform_subset,
)
from .datasets import fishbowl, uneven_line
from .embeddings import (
    Embedding,
    diffusion_maps_embed,
    laplacian_eigenmaps_embed,
    nystrom_diffusion_embed,
    pca_embed,
)

__all__ = [name for name in dir() if not name.startswith("_")]
