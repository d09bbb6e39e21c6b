import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy import integrate, stats

from quenchlab.environments import IidMoment, ParameterError
from quenchlab.quenched import Normalization
from quenchlab.selectors import UniformSubset, UpRightPath
from quenchlab.targets import Normal01
from quenchlab.theory import (
    BoundParams,
    ScalingRegime,
    convergence_conditions,
    estimate_D,
    lemma22_threshold_and_tail,
    lemma23_tail,
    lemma26_tail_and_validity,
)

INF = math.inf


# ---------------------------------------------------------------------------
# bound expressions


def test_lemma22_case1_direct():
    b = lemma22_threshold_and_tail(1, BoundParams(), s=1.0, t=1.0)
    assert b.threshold == 3.0
    assert b.tail_raw == pytest.approx(1 + math.exp(-1), rel=1e-15)
    assert b.tail == 1.0


def test_lemma22_limits():
    big_t = lemma22_threshold_and_tail(1, BoundParams(), s=1.0, t=50.0)
    assert big_t.tail_raw == pytest.approx(1.0, abs=1e-300)  # exponential term vanishes
    P = BoundParams(p=4.0, R=1e12, n=100, m=100, alpha=2.0)
    b = lemma22_threshold_and_tail(2, P, s=0.2, t=0.3, D=0.1)
    assert b.threshold == pytest.approx(0.6, abs=1e-9)


def test_lemma22_case2_formula():
    P = BoundParams(C=2.0, c=0.5, L=1.5, m=16, n=64, R=3.0, K=2.0, p=4.0, alpha=2.0)
    s, t = 0.4, 0.7
    b = lemma22_threshold_and_tail(2, P, s, t, D=0.05)
    trunc = 1.5 * math.sqrt(2.0 * 64) / (4.0 * math.sqrt(3.0**2))
    assert b.threshold == pytest.approx(0.05 + trunc + s + t, rel=1e-14)
    tail = 1.5**2 * 2.0 * 64 / (16 * 3.0**2 * s**2) + 2.0 * math.exp(-0.5 * 16 * t**2 / (1.5**2 * 9.0))
    assert b.tail_raw == pytest.approx(tail, rel=1e-14)


@given(st.floats(0.01, 1e6), st.floats(0.01, 1e6))
def test_lemma22_case2_threshold_decreasing_in_R(r1, r2):
    assume(r1 < r2)
    P1 = BoundParams(p=3.0, R=r1, n=50, m=10, alpha=2.0)
    P2 = BoundParams(p=3.0, R=r2, n=50, m=10, alpha=2.0)
    a = lemma22_threshold_and_tail(2, P1, 0.1, 0.1).threshold
    b = lemma22_threshold_and_tail(2, P2, 0.1, 0.1).threshold
    assert b <= a


@given(st.floats(0.01, 100), st.floats(0.01, 100), st.floats(0.01, 100), st.floats(0.01, 100))
def test_lemma22_case1_tail_decreasing(s1, s2, t1, t2):
    P = BoundParams(p=2.0, R=2.0, n=10, m=10, alpha=2.0)
    lo_s, hi_s = sorted((s1, s2))
    lo_t, hi_t = sorted((t1, t2))
    assert lemma22_threshold_and_tail(1, P, hi_s, lo_t).tail_raw <= lemma22_threshold_and_tail(1, P, lo_s, lo_t).tail_raw
    assert lemma22_threshold_and_tail(1, P, lo_s, hi_t).tail_raw <= lemma22_threshold_and_tail(1, P, lo_s, lo_t).tail_raw


def test_lemma22_errors():
    with pytest.raises(ParameterError):
        lemma22_threshold_and_tail(2, BoundParams(p=1.5), 1.0, 1.0)
    with pytest.raises(ParameterError):
        lemma22_threshold_and_tail(3, BoundParams(), 1.0, 1.0)
    with pytest.raises(ParameterError):
        lemma22_threshold_and_tail(1, BoundParams(), 0.0, 1.0)
    with pytest.raises(ParameterError):
        BoundParams(L=-1.0)


def test_lemma23_examples():
    assert lemma23_tail("SGC", BoundParams(), 1.0).tail == pytest.approx(math.exp(-1), rel=1e-15)
    assert lemma23_tail("SEC", BoundParams(C=0.7, L=1e12), 1.0).tail == pytest.approx(0.7)
    # m^(2/a)/L^2 == m^(1/a)/L when m^(1/a) == L
    P = BoundParams(m=16.0, alpha=2.0, L=4.0)
    assert lemma23_tail("SGC", P, 1.0).tail == pytest.approx(lemma23_tail("SEC", P, 1.0).tail, rel=1e-15)
    assert lemma23_tail("sgc", P, 0.5, E=0.25).threshold == 0.75
    with pytest.raises(ParameterError):
        lemma23_tail("XYZ", P, 1.0)


def test_lemma26_examples():
    P = BoundParams(alpha=1.8)
    b = lemma26_tail_and_validity(P, 2.0)
    assert b.tail_raw == pytest.approx(2**-1.8, rel=1e-15)
    assert b.valid
    assert not lemma26_tail_and_validity(P, 0.5).valid
    tiny = BoundParams(alpha=1.8, levy_mass=1e-300)
    for t in (1e-3, 1.0, 10.0):
        b = lemma26_tail_and_validity(tiny, t)
        assert b.valid and b.tail < 1e-250
    with pytest.raises(ParameterError):
        lemma26_tail_and_validity(P, 1.0, alpha_prime=1.4)
    with pytest.raises(ParameterError):
        lemma26_tail_and_validity(BoundParams(), 1.0)


# ---------------------------------------------------------------------------
# conditions


@pytest.mark.parametrize(
    "lam,wip_t,as_t",
    [(0.25, 8, 12), (0.0, 4, 6)],
)
def test_moment_thresholds(lam, wip_t, as_t):
    base = dict(alpha=2.0, eta=2.0, mu=1.0, lam=lam)
    rep = convergence_conditions(ScalingRegime(p=wip_t + 1e-9, **base))
    assert rep.wip_threshold == wip_t and rep.as_threshold == as_t
    # strict boundaries
    assert not convergence_conditions(ScalingRegime(p=wip_t, **base)).wip
    assert convergence_conditions(ScalingRegime(p=math.nextafter(wip_t, INF), **base)).wip
    at_as = convergence_conditions(ScalingRegime(p=as_t, **base))
    assert at_as.wip and not at_as.almost_sure
    assert convergence_conditions(ScalingRegime(p=math.nextafter(as_t, INF), **base)).almost_sure


def test_alpha_infinite_branch():
    rep = convergence_conditions(ScalingRegime(alpha=INF, eta=1.0, mu=0.0, lam=-0.5, p=3.0))
    assert (rep.wip_threshold, rep.as_threshold) == (2.0, 4.0)
    assert rep.wip and not rep.almost_sure
    bad = convergence_conditions(ScalingRegime(alpha=INF, eta=1.0, mu=0.0, lam=0.0, p=100.0))
    assert not bad.wip and not bad.almost_sure


def test_bounded_weights_always_pass_when_lambda_small():
    rep = convergence_conditions(ScalingRegime(alpha=2.0, p=INF, eta=2.0, mu=1.0, lam=0.25))
    assert rep.wip and rep.almost_sure
    assert not convergence_conditions(ScalingRegime(alpha=2.0, p=INF, eta=2.0, mu=1.0, lam=0.5)).wip


def test_concentration_classes():
    assert convergence_conditions(ScalingRegime(alpha=2.0, mu=1.0, lam=0.4), "sgc").wip
    assert not convergence_conditions(ScalingRegime(alpha=2.0, mu=1.0, lam=0.5), "sec").wip
    assert not convergence_conditions(ScalingRegime(alpha=INF, mu=1.0, lam=0.0), "sgc").wip


def test_stable_conditions_verbatim():
    # a*lam - tau - mu < 0 and a*lam + tau - mu < -1
    r = ScalingRegime(alpha=1.8, lam=0.25, tau=2.5, mu=1.0)
    rep = convergence_conditions(r, "stable")
    assert rep.wip  # 0.45 - 3.5 < 0
    assert not rep.almost_sure  # 0.45 + 1.5 = 1.95, not < -1
    r2 = ScalingRegime(alpha=1.8, lam=0.0, tau=0.5, mu=3.0, eta=3.0)
    assert convergence_conditions(r2, "stable").almost_sure  # 0.5 - 3 = -2.5
    with pytest.raises(ParameterError):
        convergence_conditions(ScalingRegime(alpha=INF), "stable")


def test_regime_validation():
    with pytest.raises(ParameterError):
        ScalingRegime(eta=1.0, mu=2.0)
    with pytest.raises(ParameterError):
        convergence_conditions(ScalingRegime(), "martian")


regimes = st.builds(
    dict,
    alpha=st.sampled_from([1.0, 1.5, 2.0, 3.0, INF]),
    eta=st.floats(0.5, 3),
    mu_frac=st.floats(0, 1),
    lam=st.floats(-1, 1),
    p=st.floats(1, 60),
)


@given(regimes, st.floats(0, 30))
def test_monotone_in_p(r, dp):
    mu = r["mu_frac"] * r["eta"]
    lo = convergence_conditions(ScalingRegime(alpha=r["alpha"], eta=r["eta"], mu=mu, lam=r["lam"], p=r["p"]))
    hi = convergence_conditions(ScalingRegime(alpha=r["alpha"], eta=r["eta"], mu=mu, lam=r["lam"], p=r["p"] + dp))
    assert hi.wip >= lo.wip and hi.almost_sure >= lo.almost_sure


@given(regimes, st.floats(0, 1))
def test_monotone_in_lambda(r, dl):
    mu = r["mu_frac"] * r["eta"]
    hi = convergence_conditions(ScalingRegime(alpha=r["alpha"], eta=r["eta"], mu=mu, lam=r["lam"], p=r["p"]))
    lo = convergence_conditions(ScalingRegime(alpha=r["alpha"], eta=r["eta"], mu=mu, lam=r["lam"] - dl, p=r["p"]))
    assert lo.wip >= hi.wip and lo.almost_sure >= hi.almost_sure


# ---------------------------------------------------------------------------
# estimate_D


def test_estimate_D_gaussian_weights_is_zero():
    rng = np.random.default_rng(0)
    d = estimate_D(UpRightPath(6, 6), IidMoment("normal"), Normalization(2.0), Normal01(), 5, 20_000, rng)
    assert d < 0.03


def test_estimate_D_rademacher_point():
    """m = 1, no scaling: D is W1(Rademacher, N(0,1)) = int |F_Rad - Phi|."""
    F = lambda x: stats.norm.cdf(x)
    oracle = (
        integrate.quad(F, -np.inf, -1)[0]
        + integrate.quad(lambda x: abs(0.5 - F(x)), -1, 1, points=[0])[0]
        + integrate.quad(lambda x: 1 - F(x), 1, np.inf)[0]
    )
    rng = np.random.default_rng(1)
    d = estimate_D(UniformSubset(10, 1), IidMoment("rademacher"), Normalization(INF), Normal01(), 3, 200_000, rng)
    assert d == pytest.approx(oracle, abs=0.01)


def test_estimate_D_bl_and_errors():
    rng = np.random.default_rng(2)
    e = estimate_D(UpRightPath(4, 4), IidMoment("normal"), Normalization(2.0), Normal01(), 2, 20_000, rng, metric="bl")
    assert e < 0.02
    with pytest.raises(ValueError):
        estimate_D(UpRightPath(4, 4), IidMoment(), Normalization(), Normal01(), 0, 10, rng)
    with pytest.raises(ParameterError):
        estimate_D(UpRightPath(4, 4), IidMoment(), Normalization(), Normal01(), 1, 10, rng, metric="tv")
