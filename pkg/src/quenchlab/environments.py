"""Random environments: one realization of the weight vector per call.

Sites are addressed by flat row-major index.  Grid environments carry their
``(N, M)`` shape so that ``(i, j)`` (1-based) maps to ``(i - 1) * M + (j - 1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np
from scipy.special import gammaln

Shape = Union[int, tuple]


class ParameterError(ValueError):
    """Invalid model or scheme parameters."""


# ---------------------------------------------------------------------------
# base laws for independent weights


@dataclass(frozen=True)
class BaseLaw:
    """A standardized scalar law (mean 0, variance 1) with analytic moments."""

    name: str
    nu: float | None = None

    def __post_init__(self):
        if self.name not in BASE_LAWS:
            raise ParameterError(f"unknown base law {self.name!r}; choose from {sorted(BASE_LAWS)}")
        if self.name == "student_t" and (self.nu is None or self.nu <= 2):
            raise ParameterError("student_t needs nu > 2 for a finite variance")

    @property
    def bounded(self) -> bool:
        return self.name in ("rademacher", "uniform", "zero")

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.name == "rademacher":
            return rng.integers(0, 2, size=size).astype(np.float64) * 2.0 - 1.0
        if self.name == "uniform":
            s = math.sqrt(3.0)
            return rng.uniform(-s, s, size=size)
        if self.name == "normal":
            return rng.standard_normal(size)
        if self.name == "exponential":
            return rng.standard_exponential(size) - 1.0
        if self.name == "student_t":
            return rng.standard_t(self.nu, size) * math.sqrt((self.nu - 2.0) / self.nu)
        return np.zeros(size)

    def abs_moment(self, p: float) -> float:
        """E|w|^p, or ``inf`` when it diverges."""
        if p <= 0:
            raise ParameterError("moment order must be positive")
        if self.name == "zero":
            return 0.0
        if math.isinf(p):
            # sup norm of a bounded law, inf otherwise
            return {"rademacher": 1.0, "uniform": math.sqrt(3.0)}.get(self.name, math.inf)
        if self.name == "rademacher":
            return 1.0
        if self.name == "uniform":
            return math.sqrt(3.0) ** p / (p + 1.0)
        if self.name == "normal":
            return math.exp(p / 2 * math.log(2.0) + gammaln((p + 1) / 2) - 0.5 * math.log(math.pi))
        if self.name == "exponential":
            # E|E - 1|^p = int_0^1 (1-x)^p e^-x dx + int_1^inf (x-1)^p e^-x dx
            from scipy.integrate import quad

            head, _ = quad(lambda x: (1.0 - x) ** p * math.exp(-x), 0.0, 1.0)
            return head + math.exp(-1.0) * math.gamma(p + 1.0)
        nu = self.nu
        if p >= nu:
            return math.inf
        log_t = (
            p / 2 * math.log(nu)
            + gammaln((p + 1) / 2)
            + gammaln((nu - p) / 2)
            - 0.5 * math.log(math.pi)
            - gammaln(nu / 2)
        )
        return math.exp(log_t + p / 2 * math.log((nu - 2.0) / nu))


BASE_LAWS = ("rademacher", "uniform", "normal", "exponential", "student_t", "zero")


# ---------------------------------------------------------------------------
# weight models


@dataclass(frozen=True)
class IidMoment:
    """Independent weights from a standardized base law with E|w|^p <= K.

    ``K=None`` fills in the analytic moment.  ``p=inf`` asks for a bounded
    law; ``p=None`` picks inf for bounded laws and 2 otherwise.  The ``zero``
    base law is a degenerate point mass kept for sanity runs.
    """

    base: str = "rademacher"
    p: float | None = None
    K: float | None = None
    nu: float | None = None

    def __post_init__(self):
        law = BaseLaw(self.base, self.nu)
        if self.p is None:
            object.__setattr__(self, "p", math.inf if law.bounded else 2.0)
        moment = law.abs_moment(self.p)
        if math.isinf(moment):
            raise ParameterError(f"{self.base} has no finite moment of order {self.p}")
        if self.K is not None:
            if self.K <= 0:
                raise ParameterError("moment bound K must be positive")
            if moment > self.K * (1 + 1e-12):
                raise ParameterError(f"E|w|^{self.p} = {moment:.6g} exceeds K = {self.K}")

    @property
    def law(self) -> BaseLaw:
        return BaseLaw(self.base, self.nu)

    @property
    def moment_bound(self) -> float:
        return self.K if self.K is not None else self.law.abs_moment(self.p)


@dataclass(frozen=True)
class SphereUniform:
    """Uniform on the sphere of radius sqrt(n)."""


@dataclass(frozen=True)
class SimplexEq:
    """Uniform on {x >= 0, sum x = n}."""


@dataclass(frozen=True)
class SimplexLe:
    """Uniform on {x >= 0, sum x <= n}."""


@dataclass(frozen=True)
class LayeredStable:
    """Independent stable weights, entry (i, j) distributed as k^-tau X with k = i + j - 1."""

    alpha: float = 1.8
    tau: float = 2.5
    kappa: float = 1.0
    beta: float = 0.0

    def __post_init__(self):
        if not 1.5 < self.alpha < 2.0:
            raise ParameterError("layered stable weights need alpha in (3/2, 2)")
        if self.tau <= 0:
            raise ParameterError("tau must be positive")
        _check_stable(self.alpha, self.beta, self.kappa)


WeightModel = Union[IidMoment, SphereUniform, SimplexEq, SimplexLe, LayeredStable]


@dataclass
class WeightVector:
    """One realized environment.

    ``values`` and ``centering`` are flat arrays over sites; ``shape`` is
    ``(n,)`` for a plain ground set or ``(N, M)`` for a grid.
    """

    values: np.ndarray
    centering: np.ndarray
    shape: tuple = field(default=())

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.centering = np.broadcast_to(
            np.asarray(self.centering, dtype=np.float64), self.values.shape
        ).copy()
        if not self.shape:
            self.shape = (self.values.size,)
        if math.prod(self.shape) != self.values.size:
            raise ParameterError(f"shape {self.shape} does not match {self.values.size} values")

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def sites(self) -> list:
        if len(self.shape) == 1:
            return list(range(1, self.n + 1))
        N, M = self.shape
        return [(i, j) for i in range(1, N + 1) for j in range(1, M + 1)]

    def grid(self) -> np.ndarray:
        return self.values.reshape(self.shape)


def _normalize_shape(shape: Shape) -> tuple:
    if isinstance(shape, (int, np.integer)):
        shape = (int(shape),)
    shape = tuple(int(s) for s in shape)
    if not shape or min(shape) < 1 or len(shape) > 2:
        raise ParameterError(f"invalid site layout {shape}")
    return shape


def sample_environment(model: WeightModel, n: Shape, rng: np.random.Generator) -> WeightVector:
    """Draw one environment on ``n`` sites (an int, or an ``(N, M)`` grid)."""
    shape = _normalize_shape(n)
    size = math.prod(shape)
    if isinstance(model, IidMoment):
        return WeightVector(model.law.sample(rng, size), 0.0, shape)
    if isinstance(model, SphereUniform):
        g = rng.standard_normal(size)
        norm = np.linalg.norm(g)
        while norm == 0.0:
            g = rng.standard_normal(size)
            norm = np.linalg.norm(g)
        return WeightVector(g * (math.sqrt(size) / norm), 0.0, shape)
    if isinstance(model, SimplexEq):
        e = rng.standard_exponential(size)
        return WeightVector(e * (size / e.sum()), 1.0, shape)
    if isinstance(model, SimplexLe):
        e = rng.standard_exponential(size + 1)
        return WeightVector(e[:size] * (size / e.sum()), size / (size + 1.0), shape)
    if isinstance(model, LayeredStable):
        if len(shape) != 2:
            raise ParameterError("layered stable weights live on an (N, M) grid")
        return sample_layered_stable(
            shape[0], model.alpha, model.tau, model.kappa, model.beta, rng, M=shape[1]
        )
    raise ParameterError(f"unknown weight model {model!r}")


# ---------------------------------------------------------------------------
# stable laws


def _check_stable(alpha, beta, kappa):
    if not 0 < alpha <= 2:
        raise ParameterError("alpha must lie in (0, 2]")
    if not -1 <= beta <= 1:
        raise ParameterError("beta must lie in [-1, 1]")
    if kappa <= 0:
        raise ParameterError("kappa must be positive")
    if alpha == 1 and beta != 0:
        raise ParameterError("the exponent -k|t|(1 - i b sign(t) tan(pi/2)) is undefined for b != 0")


def stable_rvs(alpha: float, beta: float, kappa: float, rng: np.random.Generator, size=None):
    """Chambers-Mallows-Stuck draws with characteristic exponent

        psi(t) = -kappa^alpha |t|^alpha (1 - i beta sign(t) tan(pi alpha / 2)).

    With V ~ U(-pi/2, pi/2), W ~ Exp(1), B = arctan(beta tan(pi alpha/2)) / alpha
    and S = (1 + beta^2 tan^2(pi alpha/2))^(1/(2 alpha)):

        X = S sin(alpha (V + B)) / cos(V)^(1/alpha)
              * (cos(V - alpha (V + B)) / W)^((1 - alpha)/alpha)

    and the output is kappa * X.  At alpha = 2 this is 2 sin(V) sqrt(W) ~ N(0, 2).
    """
    _check_stable(alpha, beta, kappa)
    v = rng.uniform(-math.pi / 2, math.pi / 2, size)
    w = rng.standard_exponential(size)
    if alpha == 1:
        return kappa * np.tan(v)
    zeta = beta * math.tan(math.pi * alpha / 2)
    b = math.atan(zeta) / alpha
    s = (1.0 + zeta * zeta) ** (1.0 / (2.0 * alpha))
    x = (
        s
        * np.sin(alpha * (v + b))
        / np.cos(v) ** (1.0 / alpha)
        * (np.cos(v - alpha * (v + b)) / w) ** ((1.0 - alpha) / alpha)
    )
    return kappa * x


def sample_stable_scalar(alpha: float, beta: float, kappa: float, rng: np.random.Generator) -> float:
    return float(stable_rvs(alpha, beta, kappa, rng))


def layer_scales(N: int, tau: float, M: int | None = None) -> np.ndarray:
    """Flat array of k^-tau with k = i + j - 1."""
    M = N if M is None else M
    i = np.arange(1, N + 1)[:, None]
    j = np.arange(1, M + 1)[None, :]
    return ((i + j - 1.0) ** (-tau)).ravel()


def sample_layered_stable(
    N: int,
    alpha: float,
    tau: float,
    kappa: float,
    beta: float,
    rng: np.random.Generator,
    M: int | None = None,
) -> WeightVector:
    if N < 1 or (M is not None and M < 1):
        raise ParameterError("grid sides must be positive")
    if tau <= 0:
        raise ParameterError("tau must be positive")
    M = N if M is None else M
    x = stable_rvs(alpha, beta, kappa, rng, N * M)
    return WeightVector(x * layer_scales(N, tau, M), 0.0, (N, M))


def truncate(w: WeightVector, R: float) -> WeightVector:
    """Zero out weights with |w_a| > R; centering is left at the untruncated mean."""
    if not R > 0:
        raise ParameterError("truncation level must be positive")
    values = np.where(np.abs(w.values) > R, 0.0, w.values)
    return replace(w, values=values, centering=w.centering.copy())
