"""Concentration-bound expressions and moment/exponent conditions for convergence."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .environments import (
    IidMoment,
    LayeredStable,
    ParameterError,
    WeightModel,
    layer_scales,
    sample_environment,
    stable_rvs,
)
from .quenched import EmpiricalDistribution, Normalization, quenched_sums
from .selectors import sample_sites, site_shape
from .targets import TargetLaw, bl_distance_lower_bound, w1_distance


@dataclass(frozen=True)
class BoundParams:
    """Inputs to the bound expressions.  C, c and K_alpha have no known
    values and default to 1."""

    C: float = 1.0
    c: float = 1.0
    K_alpha: float = 1.0
    L: float = 1.0
    m: float = 1.0
    n: float = 1.0
    R: float = 1.0
    K: float = 1.0
    p: float = 2.0
    alpha: float = math.inf
    levy_mass: float = 1.0

    def __post_init__(self):
        for name in ("C", "c", "K_alpha", "L", "m", "n", "R", "K", "p", "alpha", "levy_mass"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive")

    def m_power(self, k: float = 1.0) -> float:
        """m^(k / alpha), which is 1 when alpha is infinite."""
        return 1.0 if math.isinf(self.alpha) else self.m ** (k / self.alpha)


class Bound(NamedTuple):
    threshold: float
    tail: float  # clipped to [0, 1]
    tail_raw: float


def _clip(p: float) -> float:
    return min(1.0, max(0.0, p))


def lemma22_threshold_and_tail(case: int, params: BoundParams, s: float, t: float, D: float = 0.0) -> Bound:
    """Deviation threshold and tail probability for convex 1-Lipschitz f
    with truncation at R.  Case 1 covers moments of order 1 <= p; case 2
    needs unit variance and p >= 2."""
    P = params
    if not (s > 0 and t > 0) or D < 0:
        raise ParameterError("s and t must be positive, D nonnegative")
    gauss = P.C * math.exp(-P.c * P.m_power(2) * t**2 / (P.L**2 * P.R**2))
    if case == 1:
        if P.p < 1:
            raise ParameterError("case 1 needs p >= 1")
        trunc = P.L * P.K * P.n / (P.m_power() * P.R ** (P.p - 1))
        tail = trunc / s + gauss
    elif case == 2:
        if P.p < 2:
            raise ParameterError("case 2 needs p >= 2")
        trunc = P.L * math.sqrt(P.K * P.n) / (P.m_power() * math.sqrt(P.R ** (P.p - 2)))
        tail = P.L**2 * P.K * P.n / (P.m_power(2) * P.R ** (P.p - 2) * s**2) + gauss
    else:
        raise ParameterError("case must be 1 or 2")
    return Bound(D + trunc + s + t, _clip(tail), tail)


def lemma23_tail(kind: str, params: BoundParams, t: float, E: float = 0.0) -> Bound:
    """Tail for bounded-Lipschitz f under subgaussian (SGC) or subexponential
    (SEC) concentration.  The tail does not depend on t; the threshold is E + t."""
    P = params
    if not t > 0 or E < 0:
        raise ParameterError("t must be positive, E nonnegative")
    kind = kind.upper()
    if kind == "SGC":
        tail = P.C * math.exp(-P.c * P.m_power(2) / P.L**2)
    elif kind == "SEC":
        tail = P.C * math.exp(-P.c * P.m_power(1) / P.L)
    else:
        raise ParameterError("kind must be SGC or SEC")
    return Bound(E + t, _clip(tail), tail)


class StableBound(NamedTuple):
    threshold: float
    tail: float
    tail_raw: float
    valid: bool


def lemma26_tail_and_validity(
    params: BoundParams, t: float, alpha_prime: float | None = None, D: float = 0.0
) -> StableBound:
    """Tail K L^a levy / (m t^a) for stable environments, asserted only when
    t^a' >= L^a K_a' levy m^(-1/a)."""
    P = params
    a = P.alpha
    ap = a if alpha_prime is None else alpha_prime
    if not ap > 1.5:
        raise ParameterError("the stable concentration bound needs alpha' > 3/2")
    if math.isinf(a):
        raise ParameterError("the stable bound needs a finite rescaling exponent")
    if not t > 0:
        raise ParameterError("t must be positive")
    tail = P.K * P.L**a * P.levy_mass / (P.m * t**a)
    valid = t**ap >= P.L**a * P.K_alpha * P.levy_mass * P.m ** (-1.0 / a)
    return StableBound(D + t, _clip(tail), tail, bool(valid))


# ---------------------------------------------------------------------------
# convergence conditions


@dataclass(frozen=True)
class ScalingRegime:
    """Growth exponents in the system size N: n ~ N^eta, m ~ N^mu, L ~ N^lambda,
    R ~ N^rho, Levy mass ~ N^-tau."""

    alpha: float = 2.0
    p: float = math.inf
    K: float = 1.0
    eta: float = 1.0
    mu: float = 1.0
    lam: float = 0.0
    rho: float = 0.0
    tau: float = 0.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ParameterError("alpha must be positive")
        if self.mu > self.eta:
            raise ParameterError("need mu <= eta")


@dataclass
class ConditionReport:
    wip: bool
    almost_sure: bool
    reason: str
    wip_threshold: float | None = None
    as_threshold: float | None = None


def _exact(x) -> Fraction:
    return Fraction(x) if not isinstance(x, Fraction) else x


def _float(x: Fraction) -> float:
    # thresholds blow up as lambda -> 0 from below
    try:
        return float(x)
    except OverflowError:
        return math.inf


def convergence_conditions(regime: ScalingRegime, environment: str = "moment") -> ConditionReport:
    """Evaluate the conditions for weak convergence in probability and for
    summable deviation probabilities, with strict inequalities.

    ``environment`` selects the concentration input: ``moment`` (truncated
    independent weights), ``sgc``/``sec``, or ``stable``.
    """
    r = regime
    env = environment.lower()
    if env in ("sgc", "sec"):
        if math.isinf(r.alpha):
            ok = r.lam < 0
            why = f"need lambda < 0 = mu/alpha; lambda = {r.lam}"
        else:
            ok = _exact(r.mu) / _exact(r.alpha) > _exact(r.lam)
            why = f"need mu/alpha > lambda; mu/alpha = {r.mu / r.alpha:g}, lambda = {r.lam:g}"
        return ConditionReport(ok, ok, why)
    if env == "stable":
        if math.isinf(r.alpha):
            raise ParameterError("the stable conditions need a finite alpha")
        a, lam, tau, mu = map(_exact, (r.alpha, r.lam, r.tau, r.mu))
        wip = a * lam - tau - mu < 0
        summable = a * lam + tau - mu < -1
        why = (
            f"alpha*lambda - tau - mu = {float(a * lam - tau - mu):g} (< 0 for WIP); "
            f"alpha*lambda + tau - mu = {float(a * lam + tau - mu):g} (< -1 for summability)"
        )
        return ConditionReport(bool(wip), bool(summable), why)
    if env != "moment":
        raise ParameterError(f"unknown environment class {environment!r}")

    p = r.p
    lam, eta, mu = map(_exact, (r.lam, r.eta, r.mu))
    if math.isinf(r.alpha):
        if not lam < 0:
            return ConditionReport(False, False, "alpha = inf needs lambda < 0")
        wip_t = eta / -lam
        as_t = (eta + 1) / -lam
    else:
        a = _exact(r.alpha)
        if not lam < mu / a:
            return ConditionReport(False, False, f"need lambda < mu/alpha = {float(mu / a):g}")
        wip_t = a * eta / (mu - a * lam)
        as_t = a * (eta + 1) / (mu - a * lam)
    if math.isinf(p):
        wip = summable = True
    else:
        pe = _exact(p)
        wip = pe > wip_t
        summable = wip and pe > as_t
    why = f"WIP iff p > {_float(wip_t):g}; summable iff p > {_float(as_t):g}"
    return ConditionReport(bool(wip), bool(summable), why, _float(wip_t), _float(as_t))


# ---------------------------------------------------------------------------
# annealed distance D (or E)


def annealed_law(model: WeightModel, scheme, norm: Normalization, sites: np.ndarray, n_w: int, rng) -> EmpiricalDistribution:
    """Law over w of the normalized sum for one fixed selection ``sites``."""
    shape = site_shape(scheme)
    m = sites.size
    if isinstance(model, IidMoment):
        # only the selected coordinates matter for independent weights
        vals = model.law.sample(rng, (n_w, m))
        return EmpiricalDistribution(vals.sum(axis=1) / norm.divisor_for(m))
    if isinstance(model, LayeredStable):
        scale = layer_scales(shape[0], model.tau, shape[1])[sites]
        x = stable_rvs(model.alpha, model.beta, model.kappa, rng, (n_w, m))
        return EmpiricalDistribution((x * scale).sum(axis=1) / norm.divisor_for(m))
    sums = np.empty(n_w)
    for k in range(n_w):
        w = sample_environment(model, shape, rng)
        sums[k] = quenched_sums(w, sites[None, :], norm)[0]
    return EmpiricalDistribution(sums)


def estimate_D(
    scheme,
    model: WeightModel,
    norm: Normalization,
    target: TargetLaw,
    n_sigma: int,
    n_w: int,
    rng: np.random.Generator,
    metric: str = "w1",
) -> float:
    """Sampled lower-bound estimate of max over sigma of d(rho_sigma, target).

    ``metric="w1"`` estimates D; ``metric="bl"`` uses the ramp/tent bank and
    estimates E.  Both are lower bounds: only ``n_sigma`` selections are seen
    and the BL supremum is over a finite bank.
    """
    if n_sigma < 1 or n_w < 1:
        raise ValueError("n_sigma and n_w must be >= 1")
    dist = {"w1": w1_distance, "bl": bl_distance_lower_bound}.get(metric)
    if dist is None:
        raise ParameterError(f"unknown metric {metric!r}")
    best = 0.0
    for sigma in sample_sites(scheme, rng, n_sigma):
        rho = annealed_law(model, scheme, norm, sigma, n_w, rng)
        best = max(best, dist(rho, target))
    return best
