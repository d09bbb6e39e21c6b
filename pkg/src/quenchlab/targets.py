"""Limit laws and distances from empirical measures to them."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from scipy import stats

from .environments import ParameterError, _check_stable
from .quenched import EmpiricalDistribution, TestFunction, bank_integrals, bl_bank


class UnsupportedTargetError(ValueError):
    """The target law lacks the evaluation an operation needs."""


@dataclass(frozen=True)
class Normal01:
    pass


@dataclass(frozen=True)
class GammaLaw:
    shape: int = 1

    def __post_init__(self):
        if self.shape < 1 or int(self.shape) != self.shape:
            raise ParameterError("gamma shape must be a positive integer")


@dataclass(frozen=True, eq=False)
class ConvolutionPower:
    """m-fold convolution of a base law, represented by oracle samples."""

    base: EmpiricalDistribution
    m: int
    samples: EmpiricalDistribution = field(repr=False, default=None)

    @classmethod
    def build(cls, base: EmpiricalDistribution, m: int, rng: np.random.Generator):
        return cls(base, m, convolution_oracle(base, m, rng))


@dataclass(frozen=True)
class StableFiniteN:
    """Law of sum_{k<=n} k^-tau X_k divided by n^scale_exponent.

    ``scale_exponent=None`` means 1/gamma = 1/alpha - tau, which makes the
    characteristic exponent exactly ``psi_finite_n``.
    """

    alpha: float = 1.8
    tau: float = 2.5
    kappa: float = 1.0
    beta: float = 0.0
    n: int = 1
    scale_exponent: float | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError("n must be >= 1")


TargetLaw = Union[Normal01, GammaLaw, ConvolutionPower, StableFiniteN]


def cdf(target: TargetLaw, x):
    if isinstance(target, Normal01):
        return stats.norm.cdf(x)
    if isinstance(target, GammaLaw):
        return stats.gamma.cdf(x, target.shape)
    if isinstance(target, ConvolutionPower):
        return target.samples.cdf(x)
    raise UnsupportedTargetError(f"no CDF for {type(target).__name__}")


def quantile(target: TargetLaw, q):
    q = np.asarray(q, dtype=np.float64)
    if np.any((q <= 0) | (q >= 1)):
        raise ValueError("quantile levels must lie in (0, 1)")
    if isinstance(target, Normal01):
        return stats.norm.ppf(q)
    if isinstance(target, GammaLaw):
        return stats.gamma.ppf(q, target.shape)
    raise UnsupportedTargetError(f"no analytic quantile for {type(target).__name__}")


def mean(target: TargetLaw) -> float:
    if isinstance(target, Normal01):
        return 0.0
    if isinstance(target, GammaLaw):
        return float(target.shape)
    if isinstance(target, ConvolutionPower):
        return target.samples.mean
    raise UnsupportedTargetError(f"no mean for {type(target).__name__}")


def hinge_expectation(target: TargetLaw, theta):
    """E max(X - theta, 0) under the target."""
    theta = np.asarray(theta, dtype=np.float64)
    if isinstance(target, Normal01):
        return stats.norm.pdf(theta) - theta * stats.norm.sf(theta)
    if isinstance(target, GammaLaw):
        m = target.shape
        pos = m * stats.gamma.sf(theta, m + 1) - theta * stats.gamma.sf(theta, m)
        return np.where(theta <= 0, m - theta, pos)
    if isinstance(target, ConvolutionPower):
        from .quenched import hinge_means

        out = hinge_means(target.samples.samples, np.atleast_1d(theta))
        return out if theta.ndim else float(out[0])
    raise UnsupportedTargetError(f"no hinge expectation for {type(target).__name__}")


def integrate_target(target: TargetLaw, f: TestFunction) -> float:
    val = f.linear * mean(target) if f.linear else 0.0
    for coef, theta in f.hinges:
        val += coef * float(hinge_expectation(target, theta))
    return val


def characteristic_exponent(target: TargetLaw) -> Callable:
    """t -> log E exp(i t X) for the target."""
    if isinstance(target, Normal01):
        return lambda t: -0.5 * np.asarray(t, dtype=np.float64) ** 2 + 0j
    if isinstance(target, GammaLaw):
        return lambda t: -target.shape * np.log(1 - 1j * np.asarray(t, dtype=np.float64))
    if isinstance(target, StableFiniteN):
        inv_gamma = 1.0 / target.alpha - target.tau
        e = inv_gamma if target.scale_exponent is None else target.scale_exponent
        stretch = target.n ** (inv_gamma - e)
        return lambda t: psi_finite_n(
            np.asarray(t, dtype=np.float64) * stretch,
            target.alpha, target.tau, target.kappa, target.beta, target.n,
        )
    if isinstance(target, ConvolutionPower):
        x = target.samples.samples
        return lambda t: np.log(
            np.exp(1j * np.outer(np.atleast_1d(t), x)).mean(axis=1).astype(complex)
        )
    raise UnsupportedTargetError(f"no characteristic exponent for {type(target).__name__}")


def convolution_oracle(
    base: EmpiricalDistribution, m: int, rng: np.random.Generator
) -> EmpiricalDistribution:
    """Samples of the m-fold sum of independent with-replacement resamples of ``base``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    x = base.samples
    idx = rng.integers(0, x.size, size=(x.size, m))
    return EmpiricalDistribution(x[idx].sum(axis=1))


def psi_finite_n(t, alpha: float, tau: float, kappa: float, beta: float, n: int):
    """-kappa^a sum_{k<=n} k^(-a tau) / n^(1 - a tau) |t|^a (1 - i beta sign(t) tan(pi a / 2))."""
    if not 1.5 < alpha < 2:
        raise ParameterError("alpha must lie in (3/2, 2)")
    if tau <= 0:
        raise ParameterError("tau must be positive")
    if n < 1:
        raise ParameterError("n must be >= 1")
    _check_stable(alpha, beta, kappa)
    k = np.arange(1, n + 1, dtype=np.float64)
    layer = math.fsum((k ** (-alpha * tau)).tolist()) / float(n) ** (1.0 - alpha * tau)
    t = np.asarray(t, dtype=np.float64)
    skew = 1 - 1j * beta * np.sign(t) * math.tan(math.pi * alpha / 2)
    out = -(kappa**alpha) * layer * np.abs(t) ** alpha * skew
    return out if out.ndim else complex(out)


# ---------------------------------------------------------------------------
# distances


def _as_samples(a) -> np.ndarray:
    return a.samples if isinstance(a, EmpiricalDistribution) else np.sort(np.asarray(a, dtype=float))


def w1_distance(a: EmpiricalDistribution, b) -> float:
    """1-Wasserstein distance.  Equal-size empirical pairs use the sorted
    coupling; analytic targets use the quantiles at (i - 0.5) / n."""
    x = _as_samples(a)
    if isinstance(b, ConvolutionPower):
        b = b.samples
    if isinstance(b, EmpiricalDistribution):
        y = b.samples
        if x.size == y.size:
            return float(np.mean(np.abs(x - y)))
        return float(stats.wasserstein_distance(x, y))
    q = quantile(b, (np.arange(1, x.size + 1) - 0.5) / x.size)
    return float(np.mean(np.abs(x - q)))


def _ks_two_sample(x: np.ndarray, y: np.ndarray) -> float:
    grid = np.concatenate([x, y])
    fx = np.searchsorted(x, grid, side="right") / x.size
    fy = np.searchsorted(y, grid, side="right") / y.size
    return float(np.max(np.abs(fx - fy)))


def ks_distance(a: EmpiricalDistribution, target) -> float:
    """Sup gap between the empirical CDF and the target's (or another sample's)."""
    x = _as_samples(a)
    if isinstance(target, ConvolutionPower):
        target = target.samples
    if isinstance(target, EmpiricalDistribution):
        return _ks_two_sample(x, target.samples)
    n = x.size
    F = np.asarray(cdf(target, x))
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def default_bl_bank(*samples: np.ndarray, step: float = 0.05) -> list:
    """Ramp/tent bank on [-5, 5] widened to cover the samples' support, with
    the given theta step."""
    lo, hi = -5.0, 5.0
    for s in samples:
        if s is not None and len(s):
            lo = min(lo, float(np.min(s)) - 1.0)
            hi = max(hi, 5.0 + float(np.max(s)))
    return bl_bank(math.floor(lo / step) * step, math.ceil(hi / step) * step, step)


def bl_distance_lower_bound(a: EmpiricalDistribution, b, bank: Sequence[TestFunction] | None = None) -> float:
    """max over the bank of |int f da - int f db|.

    A lower bound on the bounded-Lipschitz distance, since the bank is a
    finite subset of {|f|_BL <= 1}.
    """
    x = _as_samples(a)
    if isinstance(b, ConvolutionPower):
        b = b.samples
    if bank is None:
        bank = default_bl_bank(x, b.samples if isinstance(b, EmpiricalDistribution) else None)
    if not bank:
        raise ValueError("empty test-function bank")
    if isinstance(b, EmpiricalDistribution):
        other = bank_integrals(bank, b.samples)
    else:
        other = bank_integrals(bank, None, lambda th: hinge_expectation(b, th), _mean_or_nan(b))
    return float(np.max(np.abs(bank_integrals(bank, x) - other)))


def _mean_or_nan(target) -> float:
    try:
        return mean(target)
    except UnsupportedTargetError:
        return math.nan


def cf_distance(a: EmpiricalDistribution, psi: Callable, t_grid) -> float:
    """max over the grid of |empirical CF(t) - exp(psi(t))|."""
    x = _as_samples(a)
    t = np.atleast_1d(np.asarray(t_grid, dtype=np.float64))
    emp = np.array([np.exp(1j * ti * x).mean() for ti in t])
    return float(np.max(np.abs(emp - np.exp(np.asarray(psi(t), dtype=complex)))))
