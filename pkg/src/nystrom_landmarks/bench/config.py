"""Experiment configuration files.

A config file is a flat list of ``key = value`` lines; ``#`` starts a
comment. Recognised keys (defaults in brackets)::

    dataset         fishbowl | uneven_line | gaussian | csv   [fishbowl]
    n_points        number of generated points                [200]
    cap_z           fishbowl cap height in (0, 1)             [0.7]
    dim             ambient dimension of the gaussian dataset [5]
    data_path       CSV file, one point per row (dataset = csv)
    header          skip one header line in data_path         [false]
    tag_column      last CSV column is a ground-truth tag     [false]
    dataset_seed    seed for generated datasets               [0]
    normalize       standardize | none                        [standardize]
    kernel          rbf | knn | gram                          [rbf]
    sigma           kernel bandwidth (rbf, knn)               [required for rbf/knn]
    k_nn            neighbours per point (knn)                [10]
    methods         comma-separated method list, e.g.
                    uniform, diag2, detmc(s=1, steps=500),
                    detmax_random(trials=100), detmax_greedy, full
    rank_min        smallest landmark count                   [2]
    rank_max        largest landmark count                    [20]
    trials          Monte Carlo trials per (method, rank)     [500]
    seed            base seed for landmark selection          [0]
    out             output directory                          [results]
    embed_dim       embedding dimension d                     [1]
    diffusion_time  diffusion time m                          [1]
    landmarks       landmark count for `embed`                [12]
    bound_n         kernel order for `verify-bounds`          [10]
    bound_k_max     largest k for `verify-bounds`             [4]
    bound_instances random instances for `verify-bounds`      [50]

``normalize = standardize`` rescales every feature to zero mean and unit
variance before the kernel is built (constant features are only
centred).
"""
from __future__ import annotations

import configparser
import dataclasses
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple

from ..exceptions import ConfigError

METHOD_PARAMS = {
    "uniform": {},
    "diag2": {},
    "detmc": {"s": float, "steps": int, "logdet": str},
    "detmax_random": {"trials": int},
    "detmax_greedy": {},
    "full": {},
}
DEFAULT_METHOD_PARAMS = {
    "detmc": {"s": 1.0, "logdet": "exact"},
    "detmax_random": {"trials": 100},
}
DETERMINISTIC = {"detmax_greedy", "full"}


@dataclass(frozen=True)
class MethodSpec:
    name: str
    params: Tuple[Tuple[str, object], ...] = ()

    @property
    def label(self) -> str:
        if not self.params:
            return self.name
        inner = ",".join(f"{k}={_fmt_param(v)}" for k, v in self.params)
        return f"{self.name}({inner})"

    @property
    def deterministic(self) -> bool:
        return self.name in DETERMINISTIC

    def get(self, key, default=None):
        return dict(self.params).get(key, default)


def _fmt_param(v) -> str:
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    return str(v)


_METHOD_RE = re.compile(r"^\s*([a-z_0-9]+)\s*(?:\((.*)\))?\s*$")


def parse_method(text: str) -> MethodSpec:
    m = _METHOD_RE.match(text)
    if not m:
        raise ConfigError(f"cannot parse method {text!r}")
    name, args = m.group(1), m.group(2)
    if name not in METHOD_PARAMS:
        raise ConfigError(f"unknown method {name!r}; expected one of {sorted(METHOD_PARAMS)}")
    params = dict(DEFAULT_METHOD_PARAMS.get(name, {}))
    if args and args.strip():
        for item in args.split(","):
            if "=" not in item:
                raise ConfigError(f"method argument {item.strip()!r} must be key=value")
            k, v = (x.strip() for x in item.split("=", 1))
            if k not in METHOD_PARAMS[name]:
                raise ConfigError(f"method {name!r} has no parameter {k!r}")
            try:
                params[k] = METHOD_PARAMS[name][k](v)
            except ValueError:
                raise ConfigError(f"bad value {v!r} for {name}.{k}") from None
    if name == "detmc":
        if params["s"] < 0:
            raise ConfigError("detmc exponent s must be non-negative")
        if params["logdet"] not in ("exact", "tridiagonal"):
            raise ConfigError("detmc logdet must be 'exact' or 'tridiagonal'")
        if "steps" in params and params["steps"] < 1:
            raise ConfigError("detmc steps must be at least 1")
    if name == "detmax_random" and params["trials"] < 1:
        raise ConfigError("detmax_random trials must be at least 1")
    return MethodSpec(name, tuple(sorted(params.items())))


def split_methods(text: str):
    # commas inside parentheses belong to the method's argument list
    return [p for p in re.split(r",(?![^()]*\))", text) if p.strip()]


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str = "fishbowl"
    n_points: int = 200
    cap_z: float = 0.7
    dim: int = 5
    data_path: Optional[str] = None
    header: bool = False
    tag_column: bool = False
    dataset_seed: int = 0
    normalize: str = "standardize"
    kernel: str = "rbf"
    sigma: Optional[float] = None
    k_nn: int = 10
    methods: Tuple[MethodSpec, ...] = field(
        default_factory=lambda: (parse_method("uniform"), parse_method("detmc")))
    rank_min: int = 2
    rank_max: int = 20
    trials: int = 500
    seed: int = 0
    out: str = "results"
    embed_dim: int = 1
    diffusion_time: int = 1
    landmarks: int = 12
    bound_n: int = 10
    bound_k_max: int = 4
    bound_instances: int = 50

    def replace(self, **changes) -> "ExperimentConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        return dataclasses.replace(self, **changes)

    def validate(self, n_points: Optional[int] = None, kernel: bool = True,
                 ranks: bool = True) -> "ExperimentConfig":
        """Check ranges; ``n_points`` overrides the configured count (CSV data).

        ``kernel=False`` skips the kernel settings (a kernel is supplied
        directly); ``ranks=False`` skips the rank range (embeddings).
        """
        N = self.n_points if n_points is None else n_points
        if self.dataset not in ("fishbowl", "uneven_line", "gaussian", "csv"):
            raise ConfigError(f"unknown dataset {self.dataset!r}")
        if self.dataset == "csv" and not self.data_path:
            raise ConfigError("dataset = csv requires data_path")
        if self.normalize not in ("standardize", "none"):
            raise ConfigError("normalize must be 'standardize' or 'none'")
        if self.kernel not in ("rbf", "knn", "gram"):
            raise ConfigError(f"unknown kernel {self.kernel!r}")
        if kernel and self.kernel in ("rbf", "knn") and not (self.sigma is not None and self.sigma > 0):
            raise ConfigError(f"kernel {self.kernel!r} needs a positive sigma")
        if N < 4:
            raise ConfigError("need at least 4 points")
        if not self.methods:
            raise ConfigError("methods must not be empty")
        if ranks and not (1 <= self.rank_min <= self.rank_max):
            raise ConfigError("need 1 <= rank_min <= rank_max")
        if ranks and self.rank_max >= N:
            raise ConfigError(f"rank_max = {self.rank_max} must be smaller than the number of points {N}")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if not (0 <= self.seed < 2**64 and 0 <= self.dataset_seed < 2**64):
            raise ConfigError("seeds must be 64-bit unsigned integers")
        if kernel and self.kernel == "knn" and not (1 <= self.k_nn < N):
            raise ConfigError("k_nn must lie in [1, N - 1]")
        return self


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _convert(key: str, raw: str):
    ftype = _FIELDS[key].type
    raw = raw.strip()
    if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "\"'":
        raw = raw[1:-1]
    if key == "methods":
        return tuple(parse_method(m) for m in split_methods(raw))
    try:
        if ftype in ("int",):
            return int(raw)
        if ftype in ("float", "Optional[float]"):
            return float(raw)
        if ftype == "bool":
            low = raw.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for key {key!r}") from None
    return raw


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(
        inline_comment_prefixes=("#",), interpolation=None, delimiters=("=",))
    try:
        parser.read_string("[experiment]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    values = {}
    for key, raw in parser["experiment"].items():
        if key not in _FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = _convert(key, raw)
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
