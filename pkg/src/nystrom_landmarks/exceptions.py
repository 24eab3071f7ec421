"""Exception hierarchy.

Parameter problems derive from ``ValueError``; numerical degeneracies
(isolated vertices, rank exhaustion, all-zero weights...) derive from
:class:`NumericalDegeneracyError` so callers can treat them uniformly.
"""


class LandmarkError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(LandmarkError, ValueError):
    """An argument is outside its documented range."""


class InvalidSubsetError(ParameterError):
    """A landmark subset is empty, too large, or has bad indices."""


class InsufficientLandmarksError(ParameterError):
    """Too few landmarks for the requested embedding dimension."""


class ConfigError(ParameterError):
    """An experiment configuration is malformed."""


class EigenSolverError(LandmarkError):
    """The dense symmetric eigensolver failed to converge."""

    def __init__(self, order, info):
        self.order = order
        self.info = info
        super().__init__(
            f"symmetric eigensolver did not converge for a matrix of order {order} "
            f"(LAPACK info={info}: {info} off-diagonal elements failed to converge)"
        )


class NumericalDegeneracyError(LandmarkError):
    """Base class for degenerate numerical input."""


class DegenerateKernelError(NumericalDegeneracyError):
    """A kernel has a zero-degree (isolated) vertex."""

    def __init__(self, index):
        self.index = index
        super().__init__(f"vertex {index} has zero degree; the kernel cannot be normalized")


class ConnectivityError(NumericalDegeneracyError):
    """A neighbourhood graph is disconnected."""

    def __init__(self, n_components):
        self.n_components = n_components
        super().__init__(f"graph is disconnected ({n_components} connected components)")


class AmbiguousTrivialPairError(NumericalDegeneracyError):
    """Eigenvalue 1 of a Markov matrix is not simple."""

    def __init__(self, multiplicity):
        self.multiplicity = multiplicity
        super().__init__(
            f"eigenvalue 1 has multiplicity {multiplicity}; the kernel is disconnected "
            "and the trivial eigenpair is ambiguous"
        )


class DegenerateWeightsError(NumericalDegeneracyError):
    """Not enough positive sampling weights to draw a subset."""


class DegenerateDistributionError(NumericalDegeneracyError):
    """Every subset has zero probability."""


class RankExhaustedError(NumericalDegeneracyError):
    """Greedy selection ran out of directions with positive residual."""

    def __init__(self, achieved, requested):
        self.achieved = achieved
        self.requested = requested
        super().__init__(
            f"kernel rank exhausted after selecting {achieved} of {requested} landmarks"
        )
