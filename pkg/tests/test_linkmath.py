import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ivnnt.linkmath import (
    DomainError,
    LinkKind,
    expit,
    g_transform,
    get_link,
    link_eval,
    logit,
    norm_cdf,
    norm_quantile,
)

mpmath.mp.dps = 40


def mp_phi(x):
    return float(mpmath.ncdf(x))


def mp_expit(x):
    return float(1 / (1 + mpmath.exp(-mpmath.mpf(x))))


def test_expit_values():
    assert expit(0.0) == 0.5
    assert abs(expit(logit(0.3)) - 0.3) < 1e-15
    assert abs(expit(40.0) - 1.0) < 1e-15
    assert expit(-800.0) == 0.0
    assert expit(800.0) == 1.0


@pytest.mark.parametrize("x", [-30.0, -5.5, -1e-3, 0.7, 12.0, 36.0])
def test_expit_mpmath(x):
    assert expit(x) == pytest.approx(mp_expit(x), rel=1e-15)


def test_expit_logit_roundtrip_extremes():
    p = np.concatenate([np.geomspace(1e-10, 0.5, 300), 1 - np.geomspace(1e-10, 0.5, 300)])
    assert np.max(np.abs(expit(logit(p)) - p)) < 1e-12


def test_logit():
    assert logit(0.5) == 0.0
    assert logit(0.75) == pytest.approx(math.log(3), abs=1e-15)
    for bad in (0.0, 1.0, -0.1, 1.5, float("nan")):
        with pytest.raises(DomainError):
            logit(bad)


def test_norm_cdf():
    assert norm_cdf(0.0) == 0.5
    assert norm_cdf(1.0) == pytest.approx(0.8413447461, abs=1e-10)
    assert norm_cdf(-1.0) == pytest.approx(1 - norm_cdf(1.0), abs=1e-15)


@pytest.mark.parametrize("x", [-37.0, -8.2, -2.0, -0.3, 0.9, 3.3, 7.0])
def test_norm_cdf_mpmath(x):
    ref = mp_phi(x)
    assert abs(norm_cdf(x) - ref) <= 1e-15 + 1e-14 * ref


def test_norm_quantile():
    assert norm_quantile(0.5) == 0.0
    assert norm_quantile(0.8413447461) == pytest.approx(1.0, abs=1e-8)
    for bad in (0.0, 1.0):
        with pytest.raises(DomainError):
            norm_quantile(bad)


@pytest.mark.parametrize("p", [1e-8, 1e-4, 0.025, 0.3, 0.975, 1 - 1e-8])
def test_norm_quantile_mpmath(p):
    # invert the high-precision CDF with mpmath's root finder
    ref = float(mpmath.findroot(lambda x: mpmath.ncdf(x) - p, norm_quantile(p)))
    assert norm_quantile(p) == pytest.approx(ref, rel=1e-9, abs=1e-12)


def test_quantile_roundtrip_grid():
    p = np.linspace(1e-8, 1 - 1e-8, 2001)
    assert np.max(np.abs(norm_cdf(norm_quantile(p)) - p)) < 1e-9


def test_g_transform():
    assert g_transform(0.5) == 2.0
    assert g_transform(-0.1) == math.inf
    assert g_transform(0.0) == math.inf
    assert g_transform(0.215) == pytest.approx(4.6512, abs=1e-4)
    assert math.isnan(g_transform(float("nan")))
    arr = g_transform(np.array([0.25, -1.0, 1.0]))
    assert arr.tolist() == [4.0, math.inf, 1.0]


@given(st.floats(1e-9, 1.0), st.floats(1e-9, 1.0))
def test_g_transform_non_increasing(p, q):
    lo, hi = min(p, q), max(p, q)
    assert g_transform(lo) >= g_transform(hi)


@given(st.floats(-1.0, 0.0))
def test_g_transform_nonpositive_is_inf(p):
    assert g_transform(p) == math.inf


def test_link_eval_dispatch():
    assert link_eval(LinkKind.LOGIT, "inverse", 0.0) == 0.5
    assert link_eval("probit", "forward", 0.5) == 0.0
    assert link_eval("logit", "inverse_derivative", 0.0) == 0.25
    with pytest.raises(ValueError):
        link_eval("logit", "sideways", 0.0)
    with pytest.raises(DomainError):
        link_eval("probit", "forward", 1.0)
    with pytest.raises(ValueError):
        LinkKind.parse("cloglog")


@pytest.mark.parametrize("kind", list(LinkKind))
def test_roundtrip_both_links(kind):
    link = get_link(kind)
    p = np.linspace(1e-6, 1 - 1e-6, 1000)
    assert np.max(np.abs(link.inverse(link.forward(p)) - p)) < 1e-9


@pytest.mark.parametrize("kind", list(LinkKind))
def test_inverse_derivative_matches_finite_difference(kind):
    link = get_link(kind)
    x = np.linspace(-8, 8, 161)
    h = 1e-5
    # both links are symmetric about 0; difference in the lower tail to avoid
    # cancellation against 1 when x is large
    xl = -np.abs(x)
    fd = (link.inverse(xl + h) - link.inverse(xl - h)) / (2 * h)
    an = link.inverse_derivative(x)
    assert np.max(np.abs(fd - an) / an) < 1e-6


@settings(max_examples=200)
@given(st.floats(-700, 700))
def test_expit_in_unit_interval(x):
    v = expit(x)
    assert 0.0 <= v <= 1.0
    assert expit(-x) == pytest.approx(1 - v, abs=1e-15)


def test_scalar_in_scalar_out():
    assert isinstance(expit(1.0), float)
    assert isinstance(norm_cdf(1.0), float)
    assert isinstance(expit(np.array([1.0])), np.ndarray)
