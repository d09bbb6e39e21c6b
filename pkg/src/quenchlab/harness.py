"""Two-level Monte Carlo experiments: environments outside, selections inside.

Each (N, replicate) task owns the random stream
``SeedSequence(seed, spawn_key=(N, rep))``, so results do not depend on the
number of worker threads.
"""
from __future__ import annotations

import ast
import configparser
import csv
import io
import json
import math
import operator
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .environments import (
    IidMoment,
    LayeredStable,
    ParameterError,
    SimplexEq,
    SimplexLe,
    SphereUniform,
    sample_environment,
)
from .quenched import EmpiricalDistribution, Normalization, sample_quenched_measure
from .selectors import (
    InfeasibleSchemeError,
    UniformPermutation,
    UniformSubset,
    UpRightPath,
    UpRightPathAvoidSquare,
    UpRightPathThrough,
    check_feasible,
    is_path,
    lambda_fit,
    loglog_fit,
    path_table,
    selection_size,
    site_shape,
    waypoints_from_fractions,
)
from .targets import (
    ConvolutionPower,
    GammaLaw,
    Normal01,
    StableFiniteN,
    bl_distance_lower_bound,
    cf_distance,
    characteristic_exponent,
    default_bl_bank,
    ks_distance,
    w1_distance,
)

THREADS_ENV = "QUENCHLAB_THREADS"
METRICS = ("w1", "ks", "bl", "cf")
COLUMNS = ("N", "rep", "metric", "value")


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


def substream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key)))


# ---------------------------------------------------------------------------
# size rules such as "N", "N^2", "2N-1", "5"

_OPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Pow: operator.pow,
    ast.FloorDiv: operator.floordiv,
}


def eval_rule(rule, N: int) -> int:
    """Evaluate an integer arithmetic expression in N (``^`` means power)."""
    if isinstance(rule, (int, np.integer)):
        return int(rule)
    text = str(rule).replace("^", "**")
    # allow implicit products like 2N
    text = "".join(
        f"{ch}*" if ch.isdigit() and nxt == "N" else ch for ch, nxt in zip(text, text[1:] + " ")
    )

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, int):
            return node.value
        if isinstance(node, ast.Name) and node.id == "N":
            return N
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            return -ev(node.operand)
        raise ConfigError(f"unsupported size rule {rule!r}")

    try:
        return int(ev(ast.parse(text, mode="eval")))
    except SyntaxError as exc:
        raise ConfigError(f"unparsable size rule {rule!r}") from exc


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class SchemeFamily:
    """Builds a selection scheme for each system size N.

    kinds: ``uprr`` (N x floor(xi N) grid), ``through`` (plus waypoints given
    as (zeta, xi) fractions), ``avoid`` (N x N minus the central square of
    side floor(beta N)), ``subset`` (n_rule, m_rule), ``perm`` (N x N array).
    """

    kind: str = "uprr"
    xi: float = 1.0
    waypoints: tuple = ((0.25, 0.75),)
    beta: float = 0.5
    n_rule: str = "N"
    m_rule: str = "N"

    def __post_init__(self):
        if self.kind not in ("uprr", "through", "avoid", "subset", "perm"):
            raise ConfigError(f"unknown scheme kind {self.kind!r}")

    def build(self, N: int):
        if self.kind == "perm":
            return UniformPermutation(N)
        if self.kind == "subset":
            return UniformSubset(eval_rule(self.n_rule, N), eval_rule(self.m_rule, N))
        if self.kind == "avoid":
            return UpRightPathAvoidSquare(N, self.beta)
        M = max(1, math.floor(self.xi * N + 1e-9))
        if self.kind == "through":
            return UpRightPathThrough(N, M, waypoints_from_fractions(N, M, self.waypoints))
        return UpRightPath(N, M)


@dataclass(frozen=True)
class TargetSpec:
    """Selects the limit law at each N.

    ``gamma`` takes ``shape`` (an integer, or ``"m"`` for the selection size);
    ``convolution`` convolves fresh draws of the model's base law ``m`` times
    (``base_size`` draws, default n_sel); ``stable`` matches the layered
    stable model with n = number of layers the selection crosses.
    """

    kind: str = "normal"
    shape: str = "m"
    base_size: int | None = None

    def __post_init__(self):
        if self.kind not in ("normal", "gamma", "convolution", "stable"):
            raise ConfigError(f"unknown target kind {self.kind!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "experiment"
    kind: str = "quenched"  # or "lambda"
    model: object = field(default_factory=lambda: IidMoment("uniform"))
    scheme: SchemeFamily = field(default_factory=SchemeFamily)
    norm: Normalization = field(default_factory=Normalization)
    target: TargetSpec = field(default_factory=TargetSpec)
    sizes: tuple = (16, 32, 64)
    n_env: int = 50
    n_sel: int = 2000
    metrics: tuple = ("ks", "w1")
    epsilon: float = 0.05
    seed: int = 20240601
    output: str | None = None
    format: str = "csv"
    t_grid: tuple = (0.25, 0.5, 1.0, 2.0)
    bl_step: float = 0.05
    threads: int = 1

    def validate(self):
        if self.kind not in ("quenched", "lambda"):
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        sizes = list(self.sizes)
        if not sizes or any(b <= a for a, b in zip(sizes, sizes[1:])) or sizes[0] < 1:
            raise ConfigError("sizes must be a nonempty increasing list of positive integers")
        if self.n_env < 1 or self.n_sel < 1:
            raise ConfigError("n_env and n_sel must be >= 1")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.kind == "lambda":
            return self
        bad = [m for m in self.metrics if m not in METRICS]
        if bad or not self.metrics:
            raise ConfigError(f"metrics must be a nonempty subset of {METRICS}; got {self.metrics}")
        if self.target.kind == "stable":
            if not isinstance(self.model, LayeredStable):
                raise ConfigError("the stable target needs the layered-stable model")
            if set(self.metrics) - {"cf"}:
                raise ConfigError("the stable target supports only the cf metric")
        if self.target.kind == "convolution" and not isinstance(self.model, IidMoment):
            raise ConfigError("the convolution target needs an iid model")
        if isinstance(self.model, LayeredStable) and self.scheme.kind in ("subset",):
            raise ConfigError("layered-stable weights live on a grid")
        return self


# ---------------------------------------------------------------------------
# presets


def _lambda_sizes():
    return tuple(16 * 2**k for k in range(7))


PRESETS = {
    "thm12": lambda: ExperimentConfig(
        name="thm12",
        model=IidMoment("uniform"),
        scheme=SchemeFamily("uprr"),
        sizes=(16, 32, 64, 128),
        metrics=("ks", "w1", "bl"),
    ),
    "thm12-through": lambda: ExperimentConfig(
        name="thm12-through",
        model=IidMoment("uniform"),
        scheme=SchemeFamily("through", waypoints=((0.25, 0.75),)),
        sizes=(16, 32, 64, 128),
        metrics=("ks", "w1", "bl"),
    ),
    "thm12-avoid": lambda: ExperimentConfig(
        name="thm12-avoid",
        model=IidMoment("uniform"),
        scheme=SchemeFamily("avoid", beta=0.5),
        sizes=(16, 32, 64, 128),
        metrics=("ks", "w1", "bl"),
    ),
    "thm13-sphere": lambda: ExperimentConfig(
        name="thm13-sphere", model=SphereUniform(), sizes=(16, 32, 64), metrics=("ks", "w1", "bl")
    ),
    "thm13-simplex-eq": lambda: ExperimentConfig(
        name="thm13-simplex-eq", model=SimplexEq(), sizes=(16, 32, 64), metrics=("ks", "w1", "bl")
    ),
    "thm13-simplex-le": lambda: ExperimentConfig(
        name="thm13-simplex-le", model=SimplexLe(), sizes=(16, 32, 64), metrics=("ks", "w1", "bl")
    ),
    "thm14-stable": lambda: ExperimentConfig(
        name="thm14-stable",
        model=LayeredStable(1.8, 2.5, 1.0, 0.0),
        norm=Normalization(alpha=1.8, exponent=1 / 1.8 - 2.5, center=False),
        target=TargetSpec("stable"),
        sizes=(8, 16, 32, 64),
        metrics=("cf",),
    ),
    "thm15-hoeffding": lambda: ExperimentConfig(
        name="thm15-hoeffding",
        model=IidMoment("rademacher"),
        scheme=SchemeFamily("perm"),
        sizes=(32, 128, 512),
        metrics=("ks", "w1", "bl"),
    ),
    "thm16-fixed-m": lambda: ExperimentConfig(
        name="thm16-fixed-m",
        model=IidMoment("exponential"),
        scheme=SchemeFamily("subset", n_rule="N", m_rule="2"),
        norm=Normalization(alpha=math.inf, center=False),
        target=TargetSpec("convolution"),
        sizes=(100, 1000, 10000),
        n_sel=10000,
        metrics=("w1", "ks", "bl"),
    ),
    "thm17-sphere": lambda: ExperimentConfig(
        name="thm17-sphere",
        model=SphereUniform(),
        scheme=SchemeFamily("subset", n_rule="N", m_rule="5"),
        norm=Normalization(alpha=2.0, center=False),
        sizes=(100, 1000, 10000),
        n_sel=10000,
        metrics=("ks", "w1", "bl"),
    ),
    "thm17-simplex": lambda: ExperimentConfig(
        name="thm17-simplex",
        model=SimplexEq(),
        scheme=SchemeFamily("subset", n_rule="N", m_rule="3"),
        norm=Normalization(alpha=math.inf, center=False),
        target=TargetSpec("gamma", shape="m"),
        sizes=(100, 1000, 10000),
        n_sel=10000,
        metrics=("ks", "w1", "bl"),
    ),
    "cor33-subset": lambda: ExperimentConfig(
        name="cor33-subset",
        model=IidMoment("student_t", p=6.0, nu=10.0),
        scheme=SchemeFamily("subset", n_rule="N^2", m_rule="2N-1"),
        sizes=(16, 32, 64),
        metrics=("ks", "w1", "bl"),
    ),
    "lemma31-lambda": lambda: ExperimentConfig(
        name="lemma31-lambda", kind="lambda", sizes=_lambda_sizes(), n_env=1, n_sel=1
    ),
}

LAMBDA_FAMILIES = {
    "L_uprr": SchemeFamily("uprr"),
    "L_through": SchemeFamily("through", waypoints=((0.25, 0.75),)),
    "L_avoid": SchemeFamily("avoid", beta=0.5),
}


def preset(name: str) -> ExperimentConfig:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}") from None


# ---------------------------------------------------------------------------
# config files: INI sections [experiment] [model] [scheme] [norm] [target]

_MODEL_KINDS = {
    "iid": IidMoment,
    "sphere": SphereUniform,
    "simplex-eq": SimplexEq,
    "simplex-le": SimplexLe,
    "layered-stable": LayeredStable,
}


def _float(s: str) -> float:
    s = s.strip().lower()
    return math.inf if s in ("inf", "infinity", "+inf") else float(s)


def _floats(s: str) -> tuple:
    return tuple(_float(x) for x in s.replace(";", ",").split(",") if x.strip())


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    unknown = set(cp.sections()) - {"experiment", "model", "scheme", "norm", "target"}
    if unknown:
        raise ConfigError(f"unknown sections {sorted(unknown)}")
    try:
        return _build_config(cp).validate()
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad config value: {exc}") from exc


def _build_config(cp) -> ExperimentConfig:
    ex = dict(cp["experiment"]) if cp.has_section("experiment") else {}
    if "preset" in ex:
        cfg = preset(ex.pop("preset"))
    else:
        cfg = ExperimentConfig()
    kw = {}
    conv = {
        "name": str,
        "kind": str,
        "sizes": lambda s: tuple(int(x) for x in _floats(s)),
        "n_env": int,
        "n_sel": int,
        "metrics": lambda s: tuple(x.strip() for x in s.split(",") if x.strip()),
        "epsilon": _float,
        "seed": int,
        "output": str,
        "format": str,
        "t_grid": _floats,
        "bl_step": _float,
        "threads": int,
    }
    for key, val in ex.items():
        if key not in conv:
            raise ConfigError(f"unknown experiment key {key!r}")
        kw[key] = conv[key](val)

    if cp.has_section("model"):
        m = dict(cp["model"])
        kind = m.pop("kind", "iid")
        if kind not in _MODEL_KINDS:
            raise ConfigError(f"unknown model kind {kind!r}")
        args = {}
        for key, val in m.items():
            args[key] = val if key == "base" else _float(val)
        kw["model"] = _MODEL_KINDS[kind](**args)

    if cp.has_section("scheme"):
        s = dict(cp["scheme"])
        args = {"kind": s.pop("kind", "uprr")}
        for key, val in s.items():
            if key in ("xi", "beta"):
                args[key] = _float(val)
            elif key == "waypoints":
                pts = []
                for chunk in val.split(";"):
                    if chunk.strip():
                        z, x = chunk.split(":")
                        pts.append((_float(z), _float(x)))
                args[key] = tuple(pts)
            elif key in ("n", "m"):
                args[f"{key}_rule"] = val.strip()
            else:
                raise ConfigError(f"unknown scheme key {key!r}")
        kw["scheme"] = SchemeFamily(**args)

    if cp.has_section("norm"):
        s = dict(cp["norm"])
        args = {}
        for key, val in s.items():
            if key in ("alpha", "divisor", "exponent"):
                args[key] = _float(val)
            elif key == "mode":
                args[key] = val.strip()
            elif key == "center":
                args[key] = _bool(val)
            else:
                raise ConfigError(f"unknown norm key {key!r}")
        kw["norm"] = Normalization(**args)

    if cp.has_section("target"):
        s = dict(cp["target"])
        args = {}
        for key, val in s.items():
            if key in ("kind", "shape"):
                args[key] = val.strip()
            elif key == "base_size":
                args[key] = int(val)
            else:
                raise ConfigError(f"unknown target key {key!r}")
        kw["target"] = TargetSpec(**args)
    return replace(cfg, **kw)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def _fmt(v) -> str:
    if isinstance(v, float):
        return "inf" if math.isinf(v) else repr(v)
    return str(v)


def dump_config(cfg: ExperimentConfig) -> str:
    """Render a config in the INI format read by ``parse_config``."""
    lines = ["[experiment]"]
    for key in ("name", "kind", "n_env", "n_sel", "epsilon", "seed", "format", "bl_step", "threads"):
        lines.append(f"{key} = {_fmt(getattr(cfg, key))}")
    lines.append("sizes = " + ", ".join(str(s) for s in cfg.sizes))
    lines.append("metrics = " + ", ".join(cfg.metrics))
    lines.append("t_grid = " + ", ".join(_fmt(float(t)) for t in cfg.t_grid))
    if cfg.output:
        lines.append(f"output = {cfg.output}")
    kind = next(k for k, v in _MODEL_KINDS.items() if isinstance(cfg.model, v))
    lines += ["", "[model]", f"kind = {kind}"]
    for key, val in asdict(cfg.model).items():
        if val is not None:
            lines.append(f"{key} = {_fmt(val)}")
    s = cfg.scheme
    lines += ["", "[scheme]", f"kind = {s.kind}", f"xi = {_fmt(s.xi)}", f"beta = {_fmt(s.beta)}"]
    lines.append("waypoints = " + "; ".join(f"{_fmt(z)}:{_fmt(x)}" for z, x in s.waypoints))
    lines += [f"n = {s.n_rule}", f"m = {s.m_rule}"]
    nm = cfg.norm
    lines += ["", "[norm]", f"alpha = {_fmt(nm.alpha)}", f"mode = {nm.mode}", f"center = {nm.center}"]
    if nm.divisor is not None:
        lines.append(f"divisor = {_fmt(nm.divisor)}")
    if nm.exponent is not None:
        lines.append(f"exponent = {_fmt(nm.exponent)}")
    t = cfg.target
    lines += ["", "[target]", f"kind = {t.kind}", f"shape = {t.shape}"]
    if t.base_size is not None:
        lines.append(f"base_size = {t.base_size}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# results


@dataclass
class ExperimentResult:
    name: str
    sizes: list
    metrics: list
    epsilon: float
    n_env: int
    rows: list  # (N, rep, metric, value)

    def values(self, metric: str, N: int) -> np.ndarray:
        if metric not in self.metrics:
            raise KeyError(f"unknown metric {metric!r}")
        return np.array([v for n, _, m, v in self.rows if n == N and m == metric])

    def medians(self, metric: str) -> list:
        return [float(np.median(self.values(metric, N))) for N in self.sizes]

    def summary(self) -> dict:
        out = []
        for metric in self.metrics:
            for N in self.sizes:
                v = self.values(metric, N)
                out.append(
                    {
                        "N": N,
                        "metric": metric,
                        "median": float(np.median(v)),
                        "q10": float(np.quantile(v, 0.1)),
                        "q90": float(np.quantile(v, 0.9)),
                        "tail_fraction": float(np.mean(v > self.epsilon)),
                    }
                )
        fits = {}
        if len(self.sizes) >= 3:
            for metric in self.metrics:
                try:
                    slope, stderr = rate_fit(self, metric)
                    fits[metric] = {"slope": slope, "stderr": stderr}
                except ValueError as exc:
                    fits[metric] = {"error": str(exc)}
        return {"name": self.name, "epsilon": self.epsilon, "rows": out, "rate_fits": fits}

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(COLUMNS)
        for n, rep, metric, v in self.rows:
            wr.writerow((n, rep, metric, _fmt(float(v))))
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {
                "name": self.name,
                "epsilon": self.epsilon,
                "columns": list(COLUMNS),
                "rows": [[n, rep, metric, float(v)] for n, rep, metric, v in self.rows],
            },
            indent=1,
        )

    def save(self, path, fmt: str = "csv", summary: bool = True) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv() if fmt == "csv" else self.to_json())
        if summary:
            summary_path = path.with_name(path.stem + ".summary.json")
            summary_path.write_text(json.dumps(self.summary(), indent=1) + "\n")
        return path

    @classmethod
    def from_rows(cls, rows, name="result", epsilon=0.05):
        rows = [(int(n), int(rep), str(m), float(v)) for n, rep, m, v in rows]
        if not rows:
            raise ValueError("empty result")
        sizes = sorted({r[0] for r in rows})
        metrics = list(dict.fromkeys(r[2] for r in rows))
        n_env = len({r[1] for r in rows})
        return cls(name, sizes, metrics, epsilon, n_env, rows)


def load_result(path) -> ExperimentResult:
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        data = json.loads(text)
        return ExperimentResult.from_rows(data["rows"], data.get("name", path.stem), data.get("epsilon", 0.05))
    rd = csv.reader(io.StringIO(text))
    header = next(rd)
    if tuple(header) != COLUMNS:
        raise ValueError(f"unexpected columns {header}")
    return ExperimentResult.from_rows(list(rd), path.stem)


def wip_tail(result: ExperimentResult, metric: str, epsilon: float | None = None) -> dict:
    """Fraction of environment replicates whose metric exceeds epsilon, per N."""
    eps = result.epsilon if epsilon is None else epsilon
    return {N: float(np.mean(result.values(metric, N) > eps)) for N in result.sizes}


def rate_fit(result: ExperimentResult, metric: str) -> tuple:
    """Slope and standard error of log median(metric) against log N."""
    med = result.medians(metric)
    if len(med) < 3:
        raise ValueError("a rate fit needs at least 3 sizes")
    if min(med) <= 0:
        if max(med) == min(med):
            return 0.0, 0.0
        raise ValueError(f"nonpositive medians for {metric}; no log-log fit")
    slope, stderr, _ = loglog_fit(result.sizes, med)
    return slope, stderr


# ---------------------------------------------------------------------------
# running


def build_target(cfg: ExperimentConfig, scheme, N: int):
    spec = cfg.target
    m = selection_size(scheme)
    if spec.kind == "normal":
        return Normal01()
    if spec.kind == "gamma":
        return GammaLaw(m if spec.shape == "m" else int(spec.shape))
    if spec.kind == "convolution":
        rng = substream(cfg.seed, N)
        size = spec.base_size or cfg.n_sel
        base = EmpiricalDistribution(cfg.model.law.sample(rng, size))
        return ConvolutionPower.build(base, m if spec.shape == "m" else int(spec.shape), rng)
    model = cfg.model
    norm = cfg.norm
    if norm.mode == "none" or m == 1:
        e = 0.0
    elif norm.mode == "explicit":
        e = math.log(norm.divisor) / math.log(m)
    else:
        e = norm.power
    return StableFiniteN(model.alpha, model.tau, model.kappa, model.beta, m, scale_exponent=e)


def prepare_scheme(scheme) -> None:
    """Check feasibility and build shared read-only tables before threads start."""
    check_feasible(scheme)
    if is_path(scheme) and not isinstance(scheme, UpRightPath):
        path_table(scheme).right_probability


def metric_values(dist: EmpiricalDistribution, target, metrics: Sequence[str], cfg: ExperimentConfig) -> list:
    out = []
    for metric in metrics:
        if metric == "w1":
            out.append(w1_distance(dist, target))
        elif metric == "ks":
            out.append(ks_distance(dist, target))
        elif metric == "bl":
            other = target.samples.samples if isinstance(target, ConvolutionPower) else None
            bank = default_bl_bank(dist.samples, other, step=cfg.bl_step)
            out.append(bl_distance_lower_bound(dist, target, bank))
        elif metric == "cf":
            out.append(cf_distance(dist, characteristic_exponent(target), cfg.t_grid))
    return out


def _thread_count(cfg: ExperimentConfig, threads: int | None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return max(1, cfg.threads)


def run_experiment(cfg: ExperimentConfig, threads: int | None = None) -> ExperimentResult:
    cfg.validate()
    if cfg.kind == "lambda":
        return run_lambda(cfg)
    schemes, targets = {}, {}
    for N in cfg.sizes:
        try:
            scheme = cfg.scheme.build(N)
            prepare_scheme(scheme)
        except InfeasibleSchemeError as exc:
            raise InfeasibleSchemeError(f"N={N}: {exc}") from exc
        schemes[N] = scheme
        targets[N] = build_target(cfg, scheme, N)

    def task(key):
        N, rep = key
        rng = substream(cfg.seed, N, rep)
        scheme = schemes[N]
        w = sample_environment(cfg.model, site_shape(scheme), rng)
        dist = sample_quenched_measure(w, scheme, cfg.norm, cfg.n_sel, rng)
        return metric_values(dist, targets[N], cfg.metrics, cfg)

    keys = [(N, rep) for N in cfg.sizes for rep in range(cfg.n_env)]
    workers = _thread_count(cfg, threads)
    if workers == 1:
        values = [task(k) for k in keys]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(task, keys))
    rows = [
        (N, rep, metric, float(v))
        for (N, rep), vals in zip(keys, values)
        for metric, v in zip(cfg.metrics, vals)
    ]
    return ExperimentResult(cfg.name, list(cfg.sizes), list(cfg.metrics), cfg.epsilon, cfg.n_env, rows)


def run_lambda(cfg: ExperimentConfig) -> ExperimentResult:
    """Exact L(N) for the three corner-growth schemes; rate fits give lambda."""
    rows = []
    for metric, family in LAMBDA_FAMILIES.items():
        fit = lambda_fit(family.build, cfg.sizes)
        rows += [(N, 0, metric, L) for N, L in zip(fit.sizes, fit.L)]
    rows.sort(key=lambda r: (r[0], list(LAMBDA_FAMILIES).index(r[2])))
    return ExperimentResult(cfg.name, list(cfg.sizes), list(LAMBDA_FAMILIES), cfg.epsilon, 1, rows)
