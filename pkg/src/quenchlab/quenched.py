"""Quenched measure of the normalized selected sum, for a fixed environment."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .environments import ParameterError, WeightVector
from .selectors import Selection, enumerate_selections, sample_sites, selection_size, site_shape

# rows of selections drawn per batch; fixed so results do not depend on threading
CHUNK = 8192


@dataclass(frozen=True)
class Normalization:
    """How the selected sum is scaled and centered.

    ``mode="m-power"`` divides by ``m ** exponent`` where ``exponent``
    defaults to ``1 / alpha`` (so ``alpha=inf`` means no scaling);
    ``mode="explicit"`` divides by ``divisor``; ``mode="none"`` leaves the sum alone.
    """

    alpha: float = 2.0
    mode: str = "m-power"
    divisor: float | None = None
    exponent: float | None = None
    center: bool = True

    def __post_init__(self):
        if not self.alpha > 0:
            raise ParameterError("alpha must be positive")
        if self.mode not in ("m-power", "explicit", "none"):
            raise ParameterError(f"unknown normalization mode {self.mode!r}")
        if self.mode == "explicit" and not (self.divisor and self.divisor > 0):
            raise ParameterError("explicit normalization needs a positive divisor")

    @property
    def power(self) -> float:
        if self.exponent is not None:
            return self.exponent
        return 0.0 if math.isinf(self.alpha) else 1.0 / self.alpha

    def divisor_for(self, m: int) -> float:
        if self.mode == "none":
            return 1.0
        if self.mode == "explicit":
            return float(self.divisor)
        return float(m) ** self.power


@dataclass
class EmpiricalDistribution:
    """Equally weighted samples, kept sorted."""

    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.sort(np.asarray(self.samples, dtype=np.float64).ravel())
        if self.samples.size < 1:
            raise ValueError("an empirical distribution needs at least one sample")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def mean(self) -> float:
        return float(self.samples.mean())

    def cdf(self, x):
        return np.searchsorted(self.samples, x, side="right") / self.samples.size


def _centered(w: WeightVector, norm: Normalization) -> np.ndarray:
    return w.values - w.centering if norm.center else w.values


def quenched_sums(w: WeightVector, sites: np.ndarray, norm: Normalization) -> np.ndarray:
    """Normalized sums for a ``(k, m)`` batch of selections (flat site indices)."""
    sites = np.asarray(sites)
    if sites.size and (sites.min() < 0 or sites.max() >= w.n):
        raise IndexError("selection refers to sites outside the environment")
    vals = _centered(w, norm)
    return vals[sites].sum(axis=-1) / norm.divisor_for(sites.shape[-1])


def quenched_sum(w: WeightVector, sigma: Selection, norm: Normalization) -> float:
    if tuple(sigma.shape) != tuple(w.shape):
        raise IndexError(f"selection laid out on {sigma.shape}, environment on {w.shape}")
    return float(quenched_sums(w, sigma.sites[None, :], norm)[0])


def draw_sites(scheme, n_sel: int, rng: np.random.Generator) -> np.ndarray:
    """``n_sel`` selections, drawn in fixed-size batches."""
    if n_sel < 1:
        raise ValueError("n_sel must be >= 1")
    blocks = []
    left = n_sel
    while left > 0:
        k = min(CHUNK, left)
        blocks.append(sample_sites(scheme, rng, k))
        left -= k
    return np.concatenate(blocks) if len(blocks) > 1 else blocks[0]


def sample_quenched_measure(
    w: WeightVector,
    scheme,
    norm: Normalization,
    n_sel: int,
    rng: np.random.Generator | None = None,
    sites: np.ndarray | None = None,
) -> EmpiricalDistribution:
    """Inner Monte Carlo over sigma with ``w`` held fixed.

    Pass ``sites`` to reuse a common batch of selections across environments.
    """
    if tuple(site_shape(scheme)) != tuple(w.shape):
        raise IndexError(f"scheme laid out on {site_shape(scheme)}, environment on {w.shape}")
    if sites is None:
        if rng is None:
            raise ValueError("need an rng or a batch of selections")
        if n_sel < 1:
            raise ValueError("n_sel must be >= 1")
        out = np.empty(n_sel)
        done = 0
        while done < n_sel:
            k = min(CHUNK, n_sel - done)
            out[done : done + k] = quenched_sums(w, sample_sites(scheme, rng, k), norm)
            done += k
        return EmpiricalDistribution(out)
    return EmpiricalDistribution(quenched_sums(w, sites, norm))


def exact_quenched_measure(w: WeightVector, scheme, norm: Normalization, max_steps: int = 12):
    """The quenched law by enumerating every configuration (all equally likely).

    Only for path grids with at most ``max_steps`` steps, or small ground sets.
    """
    if selection_size(scheme) - 1 > max_steps:
        raise ValueError(f"enumeration is limited to {max_steps} steps")
    return EmpiricalDistribution(quenched_sums(w, enumerate_selections(scheme), norm))


def integrate(dist: EmpiricalDistribution, f: Callable) -> float:
    return float(np.mean(f(dist.samples)))


# ---------------------------------------------------------------------------
# test functions


def hinge_means(samples: np.ndarray, thetas) -> np.ndarray:
    """Mean of max(x - theta, 0) over sorted ``samples``, for every theta."""
    x = np.asarray(samples)
    thetas = np.atleast_1d(np.asarray(thetas, dtype=np.float64))
    n = x.size
    tail = np.concatenate([np.cumsum(x[::-1])[::-1], [0.0]])  # tail[k] = sum x[k:]
    idx = np.searchsorted(x, thetas, side="right")
    return (tail[idx] - thetas * (n - idx)) / n


@dataclass(frozen=True)
class TestFunction:
    """f(x) = linear * x + sum_k coef_k * max(x - theta_k, 0).

    Every function in the bank has this form, so its integral against any
    law only needs the law's mean and hinge expectations.
    """

    __test__ = False  # not a pytest class

    name: str
    family: str  # "convex-lipschitz" or "bounded-lipschitz"
    hinges: tuple
    linear: float = 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        out = self.linear * x
        for coef, theta in self.hinges:
            out = out + coef * np.maximum(x - theta, 0.0)
        return out

    @property
    def lipschitz(self) -> float:
        # slope is piecewise constant; check every piece
        slopes = [self.linear]
        for _, theta in sorted(self.hinges, key=lambda h: h[1]):
            slopes.append(self.linear + sum(c for c, t in self.hinges if t <= theta))
        return max(abs(s) for s in slopes)

    def integrate_samples(self, samples: np.ndarray) -> float:
        """Integral against sorted samples, via hinge means."""
        if not self.hinges:
            return self.linear * float(np.mean(samples))
        coefs = np.array([c for c, _ in self.hinges])
        thetas = np.array([t for _, t in self.hinges])
        val = float(coefs @ hinge_means(samples, thetas))
        if self.linear:
            val += self.linear * float(np.mean(samples))
        return val


def _flatten_bank(bank) -> tuple:
    owner, coefs, thetas = [], [], []
    for k, f in enumerate(bank):
        for c, t in f.hinges:
            owner.append(k)
            coefs.append(c)
            thetas.append(t)
    linear = np.array([f.linear for f in bank], dtype=np.float64)
    return np.array(owner, dtype=np.int64), np.array(coefs, dtype=np.float64), np.array(thetas, dtype=np.float64), linear


def bank_integrals(bank, samples: np.ndarray, hinge_expect=None, mean=None) -> np.ndarray:
    """Integrals of every bank function at once.

    Against sorted ``samples`` by default; pass ``hinge_expect`` (a vectorized
    theta -> E max(X - theta, 0)) and ``mean`` to integrate against a law.
    """
    owner, coefs, thetas, linear = _flatten_bank(bank)
    if hinge_expect is None:
        hv = hinge_means(samples, thetas) if thetas.size else np.zeros(0)
        mean = float(np.mean(samples))
    else:
        hv = np.asarray(hinge_expect(thetas), dtype=np.float64) if thetas.size else np.zeros(0)
    out = np.zeros(len(bank))
    np.add.at(out, owner, coefs * hv)
    if np.any(linear):
        out += linear * mean
    return out


def hinge(theta: float) -> TestFunction:
    return TestFunction(f"hinge({theta:g})", "convex-lipschitz", ((1.0, float(theta)),))


def absolute() -> TestFunction:
    return TestFunction("abs", "convex-lipschitz", ((2.0, 0.0),), linear=-1.0)


def ramp(theta: float) -> TestFunction:
    """min(1, max(0, x - theta))."""
    theta = float(theta)
    return TestFunction(f"ramp({theta:g})", "bounded-lipschitz", ((1.0, theta), (-1.0, theta + 1.0)))


def tent(theta: float) -> TestFunction:
    """max(0, 1 - |x - theta|), a smoothed indicator of {theta}."""
    theta = float(theta)
    return TestFunction(
        f"tent({theta:g})",
        "bounded-lipschitz",
        ((1.0, theta - 1.0), (-2.0, theta), (1.0, theta + 1.0)),
    )


def test_function_bank(
    thetas=None, family: str | None = None
) -> list:
    """Hinges and |x| (convex 1-Lipschitz), ramps and tents (|f|_BL <= 1)."""
    if thetas is None:
        thetas = np.round(np.arange(-3.0, 3.0 + 1e-9, 0.5), 10)
    bank = [hinge(t) for t in thetas] + [absolute()]
    bank += [ramp(t) for t in thetas] + [tent(t) for t in thetas]
    if family is not None:
        bank = [f for f in bank if f.family == family]
    return bank


test_function_bank.__test__ = False


def bl_bank(lo: float = -5.0, hi: float = 5.0, step: float = 0.05) -> list:
    """Ramps and tents on a theta grid, for the bounded-Lipschitz lower bound."""
    thetas = np.round(np.arange(lo, hi + step / 2, step), 10)
    return [ramp(t) for t in thetas] + [tent(t) for t in thetas]
