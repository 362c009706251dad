import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from cyberspread import _kernels
from cyberspread.gausscop import (CopulaSpec, copula_cdf, copula_cond, log_copula_cond,
                                  log_copula_grouped, log_cond_grouped, mvn_equicorr_cdf)
from oracles import bivariate_origin, equicorr_cdf_quad


@pytest.mark.parametrize("rho", [0.0, 0.25, 0.5, 0.75])
def test_bivariate_origin(rho):
    assert abs(mvn_equicorr_cdf([0.0, 0.0], rho) - bivariate_origin(rho)) <= 1e-6


@pytest.mark.parametrize("rho", [0.1, 0.45, 0.55, 0.9])
@pytest.mark.parametrize("d", [2, 3, 7, 15])
def test_cdf_against_quadrature(rho, d):
    rng = np.random.default_rng(d)
    for _ in range(5):
        z = rng.normal(0.5, 1.5, d)
        assert mvn_equicorr_cdf(z, rho) == pytest.approx(equicorr_cdf_quad(z, rho),
                                                           rel=1e-8, abs=1e-12)


def test_independence_is_product():
    u = np.array([0.2, 0.7, 0.9])
    assert copula_cdf(u, 0.0) == pytest.approx(np.prod(u))
    assert copula_cond(u, 1, 0.0) == pytest.approx(0.2 * 0.9)


def test_one_dimension_and_unit_margins():
    assert copula_cdf([0.3], 0.6) == pytest.approx(0.3)
    assert copula_cdf([0.3, 1.0, 1.0], 0.6) == pytest.approx(0.3)
    assert copula_cdf([0.3, 0.0], 0.6) == 0.0


def test_rho_validation():
    for bad in (-0.1, 1.0, 1.5):
        with pytest.raises(ValueError):
            CopulaSpec(bad)


def test_conditional_moments():
    mean, var, r = CopulaSpec(0.5).conditional(1.2)
    assert (mean, var, r) == pytest.approx((0.6, 0.75, 1.0 / 3.0))


@pytest.mark.parametrize("d", [2, 5, 20])
def test_cond_matches_finite_differences(d):
    rng = np.random.default_rng(100 + d)
    h = 1e-5
    worst = 0.0
    for _ in range(100):
        rho = rng.uniform(0.05, 0.9)
        u = rng.uniform(0.05, 0.95, d)
        k = rng.integers(d)
        up, dn = u.copy(), u.copy()
        up[k] += h
        dn[k] -= h
        fd = (copula_cdf(up, rho) - copula_cdf(dn, rho)) / (2 * h)
        worst = max(worst, abs(copula_cond(u, k, rho) - fd))
    assert worst <= 1e-5


def test_grouped_matches_single_calls():
    rng = np.random.default_rng(4)
    sizes = [1, 3, 6, 2]
    starts = np.cumsum([0] + sizes[:-1])
    u = rng.uniform(0.1, 0.99, sum(sizes))
    got = log_copula_grouped(np.log(u), starts, 0.6)
    want = [np.log(copula_cdf(u[s:s + n], 0.6)) for s, n in zip(starts, sizes)]
    assert np.allclose(got, want, rtol=1e-10, atol=1e-12)
    cond = log_cond_grouped(np.log(u), starts, 0.6)
    want = [log_copula_cond(u[s:s + n], i, 0.6) for s, n in zip(starts, sizes)
            for i in range(n)]
    assert np.allclose(cond, want, rtol=1e-9, atol=1e-11)


def test_far_tail_log_values():
    # deep in the lower tail the log value stays finite and ordered
    z = np.array([-30.0, -31.0, 2.0])
    v = np.log(mvn_equicorr_cdf(z, 0.3)) if mvn_equicorr_cdf(z, 0.3) > 0 else None
    lv = log_copula_grouped(special.log_ndtr(z), np.array([0]), 0.3)[0]
    assert np.isfinite(lv) and lv < special.log_ndtr(-30.0)
    if v is not None:
        assert lv == pytest.approx(v, rel=1e-8)


def test_kernel_special_functions():
    x = np.concatenate([np.linspace(-40, 10, 501), [-1e3, -200.0, 37.0]])
    got = np.array([_kernels.log_ndtr(v) for v in x])
    want = special.log_ndtr(x)
    assert np.allclose(got, want, rtol=1e-12, atol=1e-300)
    y = -np.logspace(-12, 4, 300)
    q = np.array([_kernels.ndtri_exp(v) for v in y])
    assert np.allclose(q, special.ndtri_exp(y), rtol=1e-10, atol=1e-10)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(0.01, 0.99), min_size=2, max_size=6), st.floats(0.0, 0.95))
def test_frechet_bounds(u, rho):
    u = np.array(u)
    c = copula_cdf(u, rho)
    assert max(u.sum() - (len(u) - 1), 0.0) - 1e-12 <= c <= u.min() + 1e-12
    # positive dependence: never below independence
    assert c >= np.prod(u) - 1e-12


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.01, 0.99), min_size=2, max_size=5), st.floats(0.0, 0.8),
       st.floats(0.01, 0.15))
def test_monotone_in_rho(u, rho, step):
    # orthant probabilities increase with the common correlation
    assert copula_cdf(u, rho + step) >= copula_cdf(u, rho) - 1e-12


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.02, 0.98), min_size=2, max_size=5), st.floats(0.0, 0.9),
       st.integers(0, 4))
def test_cond_is_probability(u, rho, k):
    k = k % len(u)
    c = copula_cond(u, k, rho)
    assert 0.0 <= c <= 1.0
