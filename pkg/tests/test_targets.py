import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from quenchlab.environments import ParameterError, stable_rvs
from quenchlab.quenched import EmpiricalDistribution, TestFunction, ramp
from quenchlab.quenched import test_function_bank as make_bank
from quenchlab.targets import (
    ConvolutionPower,
    GammaLaw,
    Normal01,
    StableFiniteN,
    UnsupportedTargetError,
    bl_distance_lower_bound,
    cdf,
    cf_distance,
    characteristic_exponent,
    convolution_oracle,
    hinge_expectation,
    ks_distance,
    mean,
    psi_finite_n,
    quantile,
    w1_distance,
)


def E(x):
    return EmpiricalDistribution(np.asarray(x, dtype=float))


def test_cdf_quantile_mean():
    assert cdf(Normal01(), 0.0) == 0.5
    xs = np.array([0.1, 1.0, 3.0])
    np.testing.assert_allclose(cdf(GammaLaw(1), xs), 1 - np.exp(-xs), rtol=1e-14)
    assert mean(GammaLaw(2)) == 2.0
    assert quantile(GammaLaw(3), 0.5) == pytest.approx(stats.gamma.median(3))
    with pytest.raises(ValueError):
        quantile(Normal01(), 1.0)
    conv = ConvolutionPower.build(E([0.0, 1.0]), 2, np.random.default_rng(0))
    with pytest.raises(UnsupportedTargetError):
        quantile(conv, 0.5)
    with pytest.raises(ParameterError):
        GammaLaw(0)


def test_convolution_oracle_examples():
    rng = np.random.default_rng(0)
    base = E(rng.standard_normal(100_000))
    one = convolution_oracle(base, 1, rng)
    assert len(one) == len(base)
    assert stats.ks_2samp(one.samples, base.samples).pvalue > 0.001
    assert np.all(convolution_oracle(E(np.ones(50)), 3, rng).samples == 3.0)
    two = convolution_oracle(base, 2, rng)
    assert stats.kstest(two.samples, stats.norm(scale=math.sqrt(2)).cdf).statistic < 0.01
    with pytest.raises(ValueError):
        convolution_oracle(base, 0, rng)


def test_psi_examples():
    assert psi_finite_n(0.0, 1.8, 2.0, 1.0, 0.0, 7) == 0
    for t in (-2.0, 0.5, 3.0):
        assert psi_finite_n(t, 1.8, 2.0, 1.0, 0.0, 1) == pytest.approx(-abs(t) ** 1.8, rel=1e-14)


def test_psi_against_arbitrary_precision():
    mpmath.mp.dps = 40
    s = mpmath.fsum(mpmath.mpf(k) ** mpmath.mpf("-3.6") for k in range(1, 11))
    oracle = -s / mpmath.mpf(10) ** mpmath.mpf("-2.6")
    assert psi_finite_n(1.0, 1.8, 2.0, 1.0, 0.0, 10).real == pytest.approx(float(oracle), rel=1e-14)


@pytest.mark.parametrize("alpha,tau,kappa,beta,n,t", [(1.7, 2.5, 1.3, 0.4, 64, 0.7), (1.95, 0.3, 0.5, -1.0, 5, -2.0)])
def test_psi_skewed_against_arbitrary_precision(alpha, tau, kappa, beta, n, t):
    mpmath.mp.dps = 40
    a = mpmath.mpf(alpha)
    s = mpmath.fsum(mpmath.mpf(k) ** (-a * tau) for k in range(1, n + 1))
    mag = -(mpmath.mpf(kappa) ** a) * s / mpmath.mpf(n) ** (1 - a * tau) * abs(mpmath.mpf(t)) ** a
    oracle = mag * (1 - 1j * beta * mpmath.sign(t) * mpmath.tan(mpmath.pi * a / 2))
    got = psi_finite_n(t, alpha, tau, kappa, beta, n)
    assert abs(got - complex(oracle)) <= 1e-12 * abs(complex(oracle))


@given(st.floats(0.01, 20), st.floats(1.51, 1.99), st.floats(0.1, 3), st.floats(-1, 1), st.integers(1, 50))
def test_psi_hermitian(t, alpha, tau, beta, n):
    a = psi_finite_n(t, alpha, tau, 1.0, beta, n)
    b = psi_finite_n(-t, alpha, tau, 1.0, beta, n)
    assert b == pytest.approx(a.conjugate(), rel=1e-12, abs=1e-300)


def test_psi_parameter_errors():
    with pytest.raises(ParameterError):
        psi_finite_n(1.0, 1.4, 2.0, 1.0, 0.0, 3)
    with pytest.raises(ParameterError):
        psi_finite_n(1.0, 1.8, 0.0, 1.0, 0.0, 3)


def test_stable_target_exponent_at_matched_n():
    tgt = StableFiniteN(1.8, 2.5, 1.0, 0.0, n=8)
    np.testing.assert_allclose(characteristic_exponent(tgt)([0.5, 1.0]), psi_finite_n(np.array([0.5, 1.0]), 1.8, 2.5, 1.0, 0.0, 8))
    # unnormalized sums: exponent 0 stretches t by n^(1/gamma)
    raw = StableFiniteN(1.8, 2.5, 1.0, 0.0, n=8, scale_exponent=0.0)
    inv_gamma = 1 / 1.8 - 2.5
    assert characteristic_exponent(raw)(1.0) == pytest.approx(psi_finite_n(8**inv_gamma, 1.8, 2.5, 1.0, 0.0, 8))


def test_w1_examples():
    assert w1_distance(E([1.0, 2.0]), E([2.0, 1.0])) == 0.0
    assert w1_distance(E([0.0]), E([1.0])) == 1.0
    assert w1_distance(E([0.0, 1.0]), E([1.0, 2.0])) == 1.0
    # unequal sizes: CDF gap integral
    assert w1_distance(E([0.0]), E([0.0, 2.0])) == pytest.approx(1.0)
    x = E(stats.norm.ppf((np.arange(1, 1001) - 0.5) / 1000))
    assert w1_distance(x, Normal01()) < 1e-12
    with pytest.raises(UnsupportedTargetError):
        w1_distance(x, StableFiniteN(n=3))


def test_ks_examples():
    n = 1000
    q = E(stats.norm.ppf((np.arange(1, n + 1) - 0.5) / n))
    assert ks_distance(q, Normal01()) <= 1 / (2 * n) + 1e-12
    assert ks_distance(E([0.0]), Normal01()) == 0.5
    draws = E(np.random.default_rng(3).standard_normal(100_000))
    assert ks_distance(draws, Normal01()) < 0.01
    assert ks_distance(draws, Normal01()) == pytest.approx(stats.kstest(draws.samples, "norm").statistic, abs=1e-15)


@given(
    st.lists(st.floats(-100, 100), min_size=1, max_size=30),
    st.lists(st.floats(-100, 100), min_size=1, max_size=30),
)
@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_two_sample_distances_symmetric(xs, ys):
    a, b = E(xs), E(ys)
    assert w1_distance(a, b) == pytest.approx(w1_distance(b, a), abs=1e-9)
    assert ks_distance(a, b) == ks_distance(b, a)
    assert w1_distance(a, b) >= 0 and ks_distance(a, b) >= 0
    if sorted(xs) == sorted(ys):
        assert w1_distance(a, b) == 0 and ks_distance(a, b) == 0
    ref = stats.ks_2samp(xs, ys, method="asymp").statistic
    assert ks_distance(a, b) == pytest.approx(ref, abs=1e-12)


@given(
    st.lists(st.floats(-8, 8), min_size=2, max_size=30),
    st.lists(st.floats(-8, 8), min_size=2, max_size=30),
)
def test_bank_gaps_bounded_by_w1(xs, ys):
    """Every bank function is 1-Lipschitz, so its integral gap is at most W1."""
    a, b = E(xs), E(ys)
    w = w1_distance(a, b)
    for f in make_bank():
        assert abs(f.integrate_samples(a.samples) - f.integrate_samples(b.samples)) <= w + 1e-9
    assert bl_distance_lower_bound(a, b) <= w + 1e-9


def test_bl_examples():
    a = E([0.3, -1.0, 2.0])
    assert bl_distance_lower_bound(a, a) == 0.0
    zero = TestFunction("zero", "bounded-lipschitz", ())
    assert bl_distance_lower_bound(E([0.0]), E([1.0]), bank=[zero]) == 0.0
    ramps = [ramp(t) for t in np.round(np.arange(-5, 5.01, 0.1), 10)]
    assert bl_distance_lower_bound(E([0.0]), E([1.0]), bank=ramps) >= 0.9
    with pytest.raises(ValueError):
        bl_distance_lower_bound(a, a, bank=[])


def test_bl_against_analytic_target():
    x = E(np.random.default_rng(5).standard_normal(200_000))
    assert bl_distance_lower_bound(x, Normal01()) < 0.01
    assert bl_distance_lower_bound(E(np.zeros(10)), Normal01()) > 0.1


def test_cf_examples():
    x = E(np.random.default_rng(0).standard_normal(100))
    assert cf_distance(x, lambda t: 0.0 * t, [0.0]) == pytest.approx(0.0, abs=1e-15)
    assert cf_distance(E([0.0]), lambda t: np.zeros_like(t, dtype=complex), [0.5, 1.0]) == 0.0


def test_cf_stable_draws():
    rng = np.random.default_rng(8)
    x = E(stable_rvs(1.8, 0.0, 1.0, rng, 10**6))
    psi = lambda t: psi_finite_n(t, 1.8, 1.0, 1.0, 0.0, 1)
    assert cf_distance(x, psi, [0.5, 1.0, 2.0]) < 0.01


def test_gaussian_and_gamma_exponents():
    rng = np.random.default_rng(1)
    g = E(rng.standard_gamma(3.0, 400_000))
    assert cf_distance(g, characteristic_exponent(GammaLaw(3)), [0.3, 1.0]) < 0.01
    z = E(rng.standard_normal(400_000))
    assert cf_distance(z, characteristic_exponent(Normal01()), [0.3, 1.0, 2.0]) < 0.01


@pytest.mark.parametrize("theta", [-2.0, 0.0, 1.5])
def test_normal_hinge_against_quadrature(theta):
    oracle = integrate.quad(lambda x: (x - theta) * stats.norm.pdf(x), theta, np.inf, epsabs=1e-13)[0]
    assert float(hinge_expectation(Normal01(), theta)) == pytest.approx(oracle, abs=1e-10)
