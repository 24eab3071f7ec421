"""Landmark selection strategies.

Randomized samplers take a ``seed`` that may be a :class:`RandomSeed`, a
plain integer, or a ``numpy.random.Generator``; there is no module-level
random state. Exhaustive helpers enumerate all ``C(n, k)`` subsets and
are meant as oracles for small kernels.
"""
from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, Optional, Tuple, Union

import numpy as np

from .exceptions import (
    DegenerateDistributionError,
    DegenerateWeightsError,
    ParameterError,
    RankExhaustedError,
)
from .linalg import (
    DEFAULT_RTOL,
    LandmarkSubset,
    _logdet_unchecked,
    as_kernel,
    logdet_psd,
    tridiagonal_logdet_approx,
)
from .nystrom import nystrom_error_trace

MAX_ENUMERATION = 10**6


@dataclass(frozen=True)
class RandomSeed:
    """A 64-bit seed plus a stream index.

    The same ``(seed, stream)`` pair always yields the same generator, and
    distinct streams are statistically independent (``SeedSequence``
    spawn keys).
    """

    seed: int
    stream: int = 0

    def __post_init__(self):
        if not (0 <= int(self.seed) < 2**64):
            raise ParameterError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if int(self.stream) < 0:
            raise ParameterError("stream index must be non-negative")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream),))
        return np.random.Generator(np.random.PCG64(ss))

    def derive(self, *labels) -> "RandomSeed":
        """Stream keyed by a stable hash of ``labels`` (e.g. method, rank, trial)."""
        h = hashlib.blake2b(repr((self.stream,) + labels).encode(), digest_size=8)
        return RandomSeed(self.seed, int.from_bytes(h.digest(), "little") >> 1)


SeedLike = Union[RandomSeed, int, np.random.Generator]


def as_generator(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, RandomSeed):
        return seed.generator()
    if isinstance(seed, (int, np.integer)):
        return RandomSeed(int(seed)).generator()
    raise ParameterError(f"cannot build a random generator from {seed!r}")


def _check_k(n: int, k: int, allow_full: bool = False):
    hi = n if allow_full else n - 1
    if not (1 <= k <= hi):
        raise ParameterError(f"k must lie in [1, {hi}] for n = {n}, got {k}")


def _uniform_indices(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    # partial Fisher-Yates over a virtual arange(n): only displaced slots
    # are stored, and the k swap targets come from one batch of uniforms
    moved = {}
    for i, u in enumerate(rng.random(k).tolist()):
        j = i + min(int(u * (n - i)), n - 1 - i)
        moved[i], moved[j] = moved.get(j, j), moved.get(i, i)
    return np.array(sorted(moved.get(i, i) for i in range(k)), dtype=np.intp)


def uniform_subset(n: int, k: int, seed: SeedLike) -> LandmarkSubset:
    """Uniformly random ``k``-subset of ``range(n)``."""
    _check_k(n, k)
    return LandmarkSubset(tuple(_uniform_indices(n, k, as_generator(seed))), n)


def diag_squared_subset(Q, k: int, seed: SeedLike) -> LandmarkSubset:
    """Draw ``k`` distinct indices sequentially with weights ``Q_ii^2``.

    Each draw is taken among the indices not yet selected, with
    probability proportional to the squared diagonal entry.
    """
    Q = as_kernel(Q)
    _check_k(Q.n, k)
    w = np.clip(np.diag(Q.values), 0.0, None) ** 2
    if np.count_nonzero(w) < k:
        raise DegenerateWeightsError(
            f"only {np.count_nonzero(w)} positive diagonal entries; cannot draw {k} landmarks"
        )
    rng = as_generator(seed)
    chosen = []
    w = w.copy()
    for _ in range(k):
        c = np.cumsum(w)
        i = int(np.searchsorted(c, rng.random() * c[-1], side="right"))
        i = min(i, len(w) - 1)
        while w[i] == 0:  # guard against landing on a zero-weight slot at the boundary
            i -= 1
        chosen.append(i)
        w[i] = 0.0
    return LandmarkSubset(tuple(chosen), Q.n)


def _logdet_fn(backend: str) -> Callable[[np.ndarray], float]:
    if backend == "exact":
        return logdet_psd
    if backend == "tridiagonal":
        return tridiagonal_logdet_approx
    raise ParameterError(f"unknown log-determinant backend {backend!r}")


def _subset_count(n: int, k: int) -> int:
    c = math.comb(n, k)
    if c > MAX_ENUMERATION:
        raise ParameterError(f"C({n}, {k}) = {c} subsets exceeds the enumeration limit {MAX_ENUMERATION}")
    return c


def subset_logdets(Q, k: int, rtol: float = DEFAULT_RTOL) -> Dict[Tuple[int, ...], float]:
    """``log det(Q_J)`` for every ``k``-subset in lexicographic order."""
    Q = as_kernel(Q)
    _check_k(Q.n, k, allow_full=True)
    _subset_count(Q.n, k)
    a = Q.values
    out = {}
    for J in itertools.combinations(range(Q.n), k):
        idx = np.array(J)
        out[J] = logdet_psd(a[np.ix_(idx, idx)], rtol)
    return out


def exact_subset_distribution(Q, k: int, s: float, rtol: float = DEFAULT_RTOL) -> Dict[Tuple[int, ...], float]:
    """Exact ``p^s(J) ~ det(Q_J)^s`` over all ``k``-subsets.

    ``s = 0`` is the uniform distribution (singular subsets included).
    For ``s > 0`` singular subsets get probability exactly 0.
    """
    if s < 0:
        raise ParameterError(f"exponent s must be non-negative, got {s}")
    if s == 0:
        Q = as_kernel(Q)
        _check_k(Q.n, k, allow_full=True)
        c = _subset_count(Q.n, k)
        return {J: 1.0 / c for J in itertools.combinations(range(Q.n), k)}
    lds = subset_logdets(Q, k, rtol)
    keys = list(lds)
    ld = np.array([lds[J] for J in keys])
    finite = np.isfinite(ld)
    if not finite.any():
        raise DegenerateDistributionError(f"every {k}-subset has a singular principal submatrix")
    logw = np.where(finite, s * (ld - ld[finite].max()), -np.inf)
    w = np.exp(logw)
    p = w / w.sum()
    return dict(zip(keys, p.tolist()))


def det_max_exhaustive(Q, k: int, rtol: float = DEFAULT_RTOL) -> LandmarkSubset:
    """Subset maximizing ``det(Q_J)`` by full enumeration; first maximizer wins."""
    Q = as_kernel(Q)
    lds = subset_logdets(Q, k, rtol)
    best = max(lds, key=lambda J: lds[J])  # max() keeps the first of equal keys
    return LandmarkSubset(best, Q.n)


def expected_error_exact(Q, k: int, s: float, rtol: float = DEFAULT_RTOL) -> float:
    """``E_{J ~ p^s} ||Q - Q~_J||_tr`` by enumeration."""
    Q = as_kernel(Q)
    dist = exact_subset_distribution(Q, k, s, rtol)
    total = 0.0
    for J, p in dist.items():
        if p > 0:
            total += p * nystrom_error_trace(Q, J, rtol)
    return total


@dataclass(frozen=True)
class SamplerDiagnostics:
    steps: int
    accepted: int
    proposed: int
    final_logdet: float
    target: str = "exact"

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposed if self.proposed else 0.0


class DeterminantalChain:
    """Metropolis chain on ``k``-subsets targeting ``p^s(J) ~ det(Q_J)^s``.

    Each step swaps one uniformly chosen member of ``J`` with one
    uniformly chosen non-member. The proposal is symmetric, so the
    acceptance probability is ``min(1, (det Q_J' / det Q_J)^s)``. A
    proposal with zero determinant is always rejected; a zero-determinant
    current state (only possible for ``s = 0``) accepts any non-singular
    proposal.

    Parameters
    ----------
    Q : kernel
    k : int
        Subset size, ``1 <= k < n``.
    s : float
        Annealing exponent, ``s >= 0``.
    seed : RandomSeed, int or Generator
    logdet : {'exact', 'tridiagonal'}
        ``'tridiagonal'`` replaces ``log det(Q_J)`` by the log-determinant
        of the tridiagonal part of ``Q_J``; the chain then targets that
        surrogate instead of ``p^s``.
    max_restarts : int
        Number of redraws of a singular initial state before giving up.
    """

    _BATCH = 3 * 1024

    def __init__(self, Q, k: int, s: float, seed: SeedLike, logdet: str = "exact",
                 rtol: float = DEFAULT_RTOL, max_restarts: int = 100):
        Q = as_kernel(Q)
        _check_k(Q.n, k)
        if s < 0:
            raise ParameterError(f"exponent s must be non-negative, got {s}")
        self.Q = Q
        self.n, self.k, self.s = Q.n, k, float(s)
        self.target = logdet
        self._logdet = _logdet_unchecked if logdet == "exact" else _logdet_fn(logdet)
        self.rtol = rtol
        self.rng = as_generator(seed)
        # memoize only when the state space is small enough to revisit states
        self._cache: Optional[Dict[bytes, float]] = {} if math.comb(self.n, k) <= 200_000 else None
        self._u = np.empty(0)
        self._pos = 0
        self.accepted = 0
        self.proposed = 0

        J = _uniform_indices(self.n, k, self.rng)
        ld = self.logdet(J)
        restarts = 0
        while self.s > 0 and not np.isfinite(ld):
            if restarts >= max_restarts:
                raise DegenerateDistributionError(
                    f"no non-singular initial {k}-subset found in {max_restarts} redraws"
                )
            J = _uniform_indices(self.n, k, self.rng)
            ld = self.logdet(J)
            restarts += 1
        self.restarts = restarts
        inside = np.zeros(self.n, dtype=bool)
        inside[J] = True
        self._outside = np.flatnonzero(~inside)
        self.state = J
        self.current_logdet = ld

    def logdet(self, J: np.ndarray) -> float:
        """``log det(Q_J)`` (or its surrogate) for a sorted index array."""
        if self._cache is not None:
            key = J.tobytes()
            val = self._cache.get(key)
            if val is None:
                val = self._cache[key] = self._eval(J)
            return val
        return self._eval(J)

    def _eval(self, J: np.ndarray) -> float:
        return self._logdet(self.Q.values.take(J, 0).take(J, 1), self.rtol)

    def _uniforms(self):
        if self._pos >= len(self._u):
            self._u = self.rng.random(self._BATCH)
            self._pos = 0
        u = self._u[self._pos:self._pos + 3]
        self._pos += 3
        return u

    def step(self) -> bool:
        """Advance one Metropolis step; return whether the proposal was accepted."""
        u_out, u_in, u_acc = self._uniforms()
        i = int(u_out * self.k)
        jpos = int(u_in * (self.n - self.k))
        j = self._outside[jpos]
        self.proposed += 1
        proposal = self.state.copy()
        proposal[i] = j
        proposal.sort()
        if self.s == 0:
            accept, new_ld = True, None
        else:
            new_ld = self.logdet(proposal)
            cur = self.current_logdet
            if not math.isfinite(new_ld):
                accept = False
            elif not math.isfinite(cur):
                accept = True
            else:
                delta = self.s * (new_ld - cur)
                accept = delta >= 0 or u_acc < math.exp(delta)
        if accept:
            self._outside[jpos] = self.state[i]
            self.state = proposal
            if new_ld is not None:
                self.current_logdet = new_ld
            self.accepted += 1
        return accept

    def run(self, steps: int) -> LandmarkSubset:
        for _ in range(steps):
            self.step()
        return self.subset()

    def subset(self) -> LandmarkSubset:
        return LandmarkSubset(tuple(self.state.tolist()), self.n)

    def samples(self, count: int, burn_in: Optional[int] = None, thin: int = 5) -> Iterator[LandmarkSubset]:
        """Yield ``count`` states after ``burn_in`` steps, one every ``thin`` steps.

        ``burn_in`` defaults to ``max(10 k, 500)``.
        """
        if burn_in is None:
            burn_in = default_burn_in(self.k)
        self.run(burn_in)
        for _ in range(count):
            self.run(thin)
            yield self.subset()

    def diagnostics(self) -> SamplerDiagnostics:
        return SamplerDiagnostics(
            steps=self.proposed,
            accepted=self.accepted,
            proposed=self.proposed,
            final_logdet=float(self.logdet(self.state)),
            target=self.target,
        )


def default_burn_in(k: int) -> int:
    return max(10 * k, 500)


def detmc_subset(Q, k: int, s: float, steps: int, seed: SeedLike,
                 logdet: str = "exact") -> Tuple[LandmarkSubset, SamplerDiagnostics]:
    """Final state of a ``steps``-long determinantal Metropolis chain."""
    if steps < 1:
        raise ParameterError("steps must be at least 1")
    chain = DeterminantalChain(Q, k, s, seed, logdet=logdet)
    J = chain.run(steps)
    return J, chain.diagnostics()


def det_max_random_search(Q, k: int, trials: int, seed: SeedLike,
                          rtol: float = DEFAULT_RTOL) -> LandmarkSubset:
    """Best of ``trials`` uniform subsets by ``det(Q_J)``; first found wins ties."""
    Q = as_kernel(Q)
    _check_k(Q.n, k)
    if trials < 1:
        raise ParameterError("trials must be at least 1")
    rng = as_generator(seed)
    a = Q.values
    best, best_ld = None, -np.inf
    for _ in range(trials):
        J = _uniform_indices(Q.n, k, rng)
        ld = _logdet_unchecked(a.take(J, 0).take(J, 1), rtol)
        if best is None or ld > best_ld:
            best, best_ld = J, ld
    return LandmarkSubset(tuple(best.tolist()), Q.n)


def det_max_greedy(Q, k: int, rtol: float = DEFAULT_RTOL) -> LandmarkSubset:
    """Greedy determinant maximization (diagonally pivoted Cholesky).

    At each step the index with the largest Schur-complement diagonal
    is added, which is the index that maximizes the determinant of the
    grown principal submatrix. Ties go to the lowest index.

    Raises
    ------
    RankExhaustedError
        If every remaining Schur diagonal is at or below
        ``rtol * max(diag(Q))`` before ``k`` indices are chosen.
    """
    Q = as_kernel(Q)
    _check_k(Q.n, k)
    a = Q.values
    resid = np.diag(a).copy()
    floor = rtol * max(resid.max(), 0.0)
    L = np.zeros((Q.n, k))
    chosen = []
    for t in range(k):
        r = resid.copy()
        r[chosen] = -np.inf
        i = int(np.argmax(r))
        if not r[i] > floor:
            raise RankExhaustedError(t, k)
        col = (a[:, i] - L[:, :t] @ L[i, :t]) / math.sqrt(r[i])
        L[:, t] = col
        resid = resid - col**2
        chosen.append(i)
    return LandmarkSubset(tuple(chosen), Q.n)
