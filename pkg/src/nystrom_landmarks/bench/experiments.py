"""Benchmark experiments: error-vs-rank curves, embeddings, bound checks.

Trial ``t`` of method ``m`` at rank ``k`` draws its randomness from the
stream ``RandomSeed(seed).derive(m, k, t)``, so results do not depend on
the order in which trials run.
"""
from __future__ import annotations

import logging
import math
import platform
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import scipy
from scipy.stats import spearmanr

from .. import __version__
from ..datasets import fishbowl, uneven_line
from ..embeddings import diffusion_maps_embed, nystrom_diffusion_embed
from ..exceptions import ConfigError, NumericalDegeneracyError, ParameterError
from ..kernels import PointCloud, gram_kernel, knn_graph_kernel, rbf_kernel, standardize, symmetric_normalization
from ..linalg import KernelMatrix, LandmarkSubset, as_kernel
from ..nystrom import nystrom_error_trace, normalized_error
from ..sampling import (
    MAX_ENUMERATION,
    RandomSeed,
    default_burn_in,
    det_max_exhaustive,
    det_max_greedy,
    det_max_random_search,
    detmc_subset,
    diag_squared_subset,
    expected_error_exact,
    uniform_subset,
)
from .config import ExperimentConfig, MethodSpec
from .io import load_points_csv, write_csv, write_json

log = logging.getLogger(__name__)

CURVE_HEADER = ["method", "k", "mean_error", "std_err", "trials", "baseline"]
BOUND_TOL = 1e-10


def build_points(config: ExperimentConfig) -> PointCloud:
    seed = RandomSeed(config.dataset_seed)
    if config.dataset == "fishbowl":
        X = fishbowl(config.n_points, config.cap_z, seed)
    elif config.dataset == "uneven_line":
        X = uneven_line(config.n_points, seed)
    elif config.dataset == "gaussian":
        rng = seed.generator()
        X = PointCloud(rng.standard_normal((config.n_points, config.dim)))
    elif config.dataset == "csv":
        X = load_points_csv(config.data_path, config.header, config.tag_column)
    else:
        raise ConfigError(f"unknown dataset {config.dataset!r}")
    if config.normalize == "standardize":
        X = standardize(X)
    return X


def build_kernel(config: ExperimentConfig, X) -> KernelMatrix:
    if config.kernel == "rbf":
        return rbf_kernel(X, config.sigma)
    if config.kernel == "knn":
        return knn_graph_kernel(X, config.k_nn, config.sigma)
    if config.kernel == "gram":
        return gram_kernel(X)
    raise ConfigError(f"unknown kernel {config.kernel!r}")


def select_landmarks(method: MethodSpec, Q: KernelMatrix, k: int, seed: RandomSeed) -> LandmarkSubset:
    name = method.name
    if name == "uniform":
        return uniform_subset(Q.n, k, seed)
    if name == "diag2":
        return diag_squared_subset(Q, k, seed)
    if name == "detmc":
        steps = method.get("steps") or default_burn_in(k)
        J, _ = detmc_subset(Q, k, method.get("s"), steps, seed, logdet=method.get("logdet"))
        return J
    if name == "detmax_random":
        return det_max_random_search(Q, k, method.get("trials"), seed)
    if name == "detmax_greedy":
        return det_max_greedy(Q, k)
    if name == "full":
        return LandmarkSubset.full(Q.n)
    raise ConfigError(f"unknown method {name!r}")


def _versions() -> dict:
    return {
        "nystrom_landmarks": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


def _config_dict(config: ExperimentConfig) -> dict:
    d = asdict(config)
    d["methods"] = [m.label for m in config.methods]
    # the output location is not part of the result
    d.pop("out")
    return d


@dataclass
class CurveRow:
    method: str
    k: int
    mean_error: float
    std_err: float
    trials: int
    baseline: float
    skipped: int = 0
    deterministic: bool = False

    def as_csv_row(self):
        return [self.method, self.k, self.mean_error, self.std_err, self.trials, self.baseline]


@dataclass
class ErrorCurve:
    """Mean normalized Nystrom error per (method, rank) with the optimal baseline."""

    rows: List[CurveRow]
    baseline: Dict[int, float]
    metadata: dict = field(default_factory=dict)

    def row(self, method: str, k: int) -> CurveRow:
        for r in self.rows:
            if r.method == method and r.k == k:
                return r
        raise KeyError((method, k))

    def means(self, method: str) -> Dict[int, float]:
        return {r.k: r.mean_error for r in self.rows if r.method == method}

    @property
    def degenerate(self) -> bool:
        return any(r.trials == 0 for r in self.rows)


def _mean_and_se(values) -> tuple:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return math.nan, math.nan
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return float(v.mean()), se


def run_error_experiment(config: ExperimentConfig, Q=None) -> ErrorCurve:
    """Error-vs-rank curves for every configured landmark method.

    ``Q`` overrides the kernel built from the configured dataset. Each
    randomized method gets ``config.trials`` independent draws per rank;
    deterministic methods run once. Trials that hit a numerical
    degeneracy are skipped and counted, never averaged in.
    """
    if Q is None:
        X = build_points(config)
        config.validate(X.N)
        Q = build_kernel(config, X)
    else:
        Q = as_kernel(Q)
        config.validate(Q.n, kernel=False)
    if not Q.trace > 0:
        raise ParameterError("kernel has zero trace")
    w = np.clip(np.sort(np.linalg.eigvalsh(Q.values))[::-1], 0.0, None)
    ranks = list(range(config.rank_min, config.rank_max + 1))
    baseline = {k: float(w[k:].sum() / Q.trace) for k in ranks}
    base_seed = RandomSeed(config.seed)
    rows, skipped_log = [], {}
    for method in config.methods:
        for k in ranks:
            n_trials = 1 if method.deterministic else config.trials
            errs, skipped = [], 0
            for t in range(n_trials):
                try:
                    J = select_landmarks(method, Q, k, base_seed.derive(method.label, k, t))
                except NumericalDegeneracyError as exc:
                    skipped += 1
                    skipped_log.setdefault(method.label, {}).setdefault(str(k), str(exc))
                    continue
                errs.append(normalized_error(Q, J))
            mean, se = _mean_and_se(errs)
            rows.append(CurveRow(method.label, k, mean, se, len(errs), baseline[k],
                                 skipped, method.deterministic))
            if skipped:
                log.warning("%s at k=%d: %d trial(s) skipped", method.label, k, skipped)
    meta = {
        "command": "error-curve",
        "versions": _versions(),
        "config": _config_dict(config),
        "kernel_order": Q.n,
        "kernel_trace": Q.trace,
        "definitions": {
            "mean_error": "mean over trials of nystrom_error_trace(Q, J) / tr(Q)",
            "std_err": "sample standard deviation / sqrt(trials); 0 for a single trial",
            "baseline": "sum of eigenvalues beyond the k-th, divided by tr(Q)",
            "trial_seed": "RandomSeed(seed).derive(method, k, trial)",
        },
        "deterministic_methods": sorted({r.method for r in rows if r.deterministic}),
        "skipped_trials": {f"{r.method}@{r.k}": r.skipped for r in rows if r.skipped},
        "first_skip_reason": skipped_log,
    }
    return ErrorCurve(rows, baseline, meta)


def write_error_curve(curve: ErrorCurve, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "error_curve.csv", CURVE_HEADER, [r.as_csv_row() for r in curve.rows])
    write_json(out / "error_curve.json", curve.metadata)
    return out / "error_curve.csv"


def abs_spearman(coord, tag) -> float:
    rho = spearmanr(coord, tag)[0]
    return float(abs(rho)) if np.isfinite(rho) else math.nan


def _file_label(label: str) -> str:
    return "".join(c if c.isalnum() else "_" for c in label).strip("_")


def _embedding_rows(coords, tags):
    rows = []
    for i, row in enumerate(coords):
        tail = [] if tags is None else list(np.atleast_1d(tags[i]))
        rows.append([i, *row, *tail])
    return rows


def _embedding_header(d, tags):
    header = ["point_id"] + [f"coord_{j + 1}" for j in range(d)]
    if tags is not None:
        header += ["tag"] if tags.ndim == 1 else [f"tag_{j + 1}" for j in range(tags.shape[1])]
    return header


@dataclass
class EmbeddingRun:
    exact: object
    representative: Dict[str, object]
    spearman: Dict[str, List[float]]
    skipped: Dict[str, int]
    metadata: dict

    def median_spearman(self, method: str) -> float:
        return float(np.nanmedian(self.spearman[method]))


def run_embedding_experiment(config: ExperimentConfig, out_dir=None) -> EmbeddingRun:
    """Exact and Nystrom diffusion-maps embeddings for each landmark method.

    Landmarks are drawn on the normalized kernel ``D^{-1/2} Q D^{-1/2}``
    that the Nystrom extension approximates. For a scalar ground-truth
    tag, ``|Spearman|`` between the first coordinate and the tag is
    recorded for every trial. Trial 0 of each method is written out.
    """
    if config.kernel != "rbf":
        raise ConfigError("embedding experiments use the rbf kernel")
    X = build_points(config)
    config.validate(X.N, ranks=False)
    d, m, k = config.embed_dim, config.diffusion_time, config.landmarks
    if not (d < k <= X.N):
        raise ConfigError(f"need embed_dim < landmarks <= N, got d={d}, landmarks={k}, N={X.N}")
    exact = diffusion_maps_embed(X, config.sigma, d, m)
    Qn = symmetric_normalization(rbf_kernel(X, config.sigma))
    scalar_tag = X.tags is not None and X.tags.ndim == 1
    base_seed = RandomSeed(config.seed)
    reps, rhos, skipped, rep_meta = {}, {}, {}, {}
    for method in config.methods:
        n_trials = 1 if method.deterministic else config.trials
        rhos[method.label], skipped[method.label] = [], 0
        for t in range(n_trials):
            try:
                if method.name == "full" or k == X.N:
                    J = LandmarkSubset.full(X.N)
                else:
                    J = select_landmarks(method, Qn, k, base_seed.derive(method.label, k, t))
                emb = nystrom_diffusion_embed(X, config.sigma, J, d, m)
            except NumericalDegeneracyError as exc:
                skipped[method.label] += 1
                log.warning("%s trial %d skipped: %s", method.label, t, exc)
                continue
            if method.label not in reps:
                reps[method.label] = emb
                rep_meta[method.label] = {"trial": t, **emb.metadata}
            if scalar_tag:
                rhos[method.label].append(abs_spearman(emb.coordinates[:, 0], X.tags))
    meta = {
        "command": "embed",
        "versions": _versions(),
        "config": _config_dict(config),
        "sigma": config.sigma,
        "m": m,
        "embed_dim": d,
        "landmarks": k,
        "exact": exact.metadata,
        "representative_trials": rep_meta,
        "skipped_trials": skipped,
        "definitions": {
            "spearman": "|Spearman rank correlation| of coord_1 with the scalar tag",
            "trivial_pair": "Nystrom runs drop the eigenpair nearest 1 with least coordinate variance",
            "trial_seed": "RandomSeed(seed).derive(method, landmarks, trial)",
        },
    }
    if scalar_tag:
        meta["exact_spearman"] = abs_spearman(exact.coordinates[:, 0], X.tags)
    run = EmbeddingRun(exact, reps, rhos, skipped, meta)
    if out_dir is not None:
        write_embedding_run(run, X, out_dir)
    return run


def write_embedding_run(run: EmbeddingRun, X: PointCloud, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tags = X.tags
    d = run.exact.dim
    header = _embedding_header(d, tags)
    write_csv(out / "exact.csv", header, _embedding_rows(run.exact.coordinates, tags))
    files = {"exact": "exact.csv"}
    for label, emb in run.representative.items():
        name = f"nystrom_{_file_label(label)}.csv"
        write_csv(out / name, header, _embedding_rows(emb.coordinates, tags))
        files[label] = name
    summary = []
    for label, vals in run.spearman.items():
        v = np.asarray(vals, dtype=float)
        if v.size:
            summary.append([label, v.size, float(np.nanmedian(v)), float(np.nanmean(v)),
                            float(np.nanmin(v)), run.skipped[label]])
    if summary:
        write_csv(out / "spearman_summary.csv",
                  ["method", "trials", "median_abs_spearman", "mean_abs_spearman",
                   "min_abs_spearman", "skipped"], summary)
    meta = dict(run.metadata)
    meta["files"] = files
    write_json(out / "embedding.json", meta)
    return out


# --- bound verification ---------------------------------------------------

INSTANCE_KINDS = ("generic", "diagonal", "lowrank")


def random_psd(kind: str, n: int, rng: np.random.Generator, rank: Optional[int] = None) -> KernelMatrix:
    """Random PSD test instance.

    ``generic`` has a geometrically decaying random spectrum, ``diagonal``
    is diagonal with positive entries, and ``lowrank`` is a Gram matrix of
    exact rank ``rank``.
    """
    if kind == "generic":
        A = rng.standard_normal((n, n)) * (0.7 ** np.arange(n))[None, :]
        return KernelMatrix(A @ A.T)
    if kind == "diagonal":
        return KernelMatrix(np.diag(rng.uniform(0.1, 2.0, size=n)))
    if kind == "lowrank":
        r = rank if rank is not None else int(rng.integers(1, n))
        A = rng.standard_normal((n, r))
        return KernelMatrix(A @ A.T)
    raise ParameterError(f"unknown instance kind {kind!r}")


@dataclass
class BoundRow:
    instance: int
    kind: str
    k: int
    bound: str
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.lhs <= self.rhs + BOUND_TOL


@dataclass
class BoundsReport:
    rows: List[BoundRow]
    metadata: dict

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def select(self, bound=None, kind=None):
        return [r for r in self.rows if (bound is None or r.bound == bound)
                and (kind is None or r.kind == kind)]


def bound_rows(Q, k: int, instance: int = 0, kind: str = "generic") -> List[BoundRow]:
    """Evaluate the uniform, determinant-maximization and s=1 sampling bounds."""
    Q = as_kernel(Q)
    n = Q.n
    lam = np.clip(np.sort(np.linalg.eigvalsh(Q.values))[::-1], 0.0, None)
    tail = float(lam[k:].sum())
    J_max = det_max_exhaustive(Q, k)
    return [
        BoundRow(instance, kind, k, "uniform", expected_error_exact(Q, k, 0.0),
                 (n - k) / n * Q.trace),
        BoundRow(instance, kind, k, "detmax", nystrom_error_trace(Q, J_max),
                 (k + 1) * (n - k) * float(lam[k])),
        BoundRow(instance, kind, k, "determinantal", expected_error_exact(Q, k, 1.0),
                 (k + 1) * tail),
    ]


def verify_bounds(n: int, k_max: int, instances: int, seed) -> BoundsReport:
    """Check the three expected/worst-case error bounds on random instances.

    Instance kinds cycle through generic, diagonal and low-rank (rank
    drawn from ``1..k_max``). Every ``k`` from 1 to ``k_max`` is checked.
    """
    if not (1 <= k_max < n):
        raise ParameterError(f"need 1 <= k_max < n, got k_max={k_max}, n={n}")
    if instances < 1:
        raise ParameterError("instances must be at least 1")
    worst = max(math.comb(n, k) for k in range(1, k_max + 1))
    if worst > MAX_ENUMERATION:
        raise ParameterError(f"C({n}, k) reaches {worst} > {MAX_ENUMERATION}; reduce n or k_max")
    seed = seed if isinstance(seed, RandomSeed) else RandomSeed(int(seed))
    rows = []
    for i in range(instances):
        kind = INSTANCE_KINDS[i % len(INSTANCE_KINDS)]
        rng = seed.derive("instance", i).generator()
        rank = int(rng.integers(1, k_max + 1)) if kind == "lowrank" else None
        Q = random_psd(kind, n, rng, rank)
        for k in range(1, k_max + 1):
            if kind == "lowrank" and k > rank:
                # every k-subset is singular; the s=1 distribution does not exist
                continue
            rows.extend(bound_rows(Q, k, i, kind))
    meta = {
        "command": "verify-bounds",
        "versions": _versions(),
        "n": n,
        "k_max": k_max,
        "instances": instances,
        "seed": seed.seed,
        "tolerance": BOUND_TOL,
        "bounds": {
            "uniform": "E_uniform error <= (n - k) / n * tr(Q)",
            "detmax": "error at argmax det(Q_J) <= (k + 1) (n - k) lambda_{k+1}",
            "determinantal": "E_{det^1} error <= (k + 1) * sum_{i>k} lambda_i",
        },
        "all_passed": all(r.passed for r in rows),
        "failures": sum(not r.passed for r in rows),
    }
    return BoundsReport(rows, meta)


def write_bounds_report(report: BoundsReport, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "bounds.csv",
              ["instance", "kind", "k", "bound", "lhs", "rhs", "slack", "passed"],
              [[r.instance, r.kind, r.k, r.bound, r.lhs, r.rhs, r.slack, r.passed] for r in report.rows])
    write_json(out / "bounds.json", report.metadata)
    return out / "bounds.csv"
