import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stacey.errors import InvalidVectorError, UnsupportedExponentError
from stacey.geometry import (
    INF,
    PNorm,
    dual_exponent,
    lp_norm,
    mirror_grad,
    scale_map,
    scale_map_eps,
    stationarity_measure,
)

finite_p = st.floats(min_value=2.0, max_value=16.0)
vectors = arrays(np.float64, st.integers(1, 12), elements=st.floats(-1e3, 1e3))


def test_pnorm_validation():
    assert PNorm("inf").is_inf
    assert PNorm(INF).dual == 1.0
    with pytest.raises(UnsupportedExponentError):
        PNorm(1.5)
    with pytest.raises(UnsupportedExponentError):
        PNorm(float("nan"))


@pytest.mark.parametrize("p, expected", [(2, 2.0), (INF, 1.0), ("inf", 1.0), (3, 1.5)])
def test_dual_exponent(p, expected):
    assert dual_exponent(p) == expected


def test_scale_exponent_range():
    assert PNorm(2).scale_exponent == 0.0
    assert PNorm(1e6).scale_exponent == pytest.approx(1.0, abs=1e-5)
    assert PNorm(INF).scale_exponent == 1.0


def test_lp_norm_examples():
    assert lp_norm([3, 4], 2) == 5.0
    assert lp_norm([1, -2, 3], INF) == 3.0
    assert lp_norm([1, 1, 1, 1], 1.5) == pytest.approx(4 ** (2 / 3), rel=1e-14)
    assert lp_norm([1, 1, 1, 1], 1.5) == pytest.approx(2.5198421, abs=1e-7)


def test_lp_norm_no_overflow():
    assert lp_norm([1e300, 1e300], 4) == pytest.approx(2 ** 0.25 * 1e300, rel=1e-12)


def test_lp_norm_rejects_nonfinite():
    with pytest.raises(InvalidVectorError):
        lp_norm([1.0, np.nan], 2)
    with pytest.raises(InvalidVectorError):
        scale_map([np.inf], 3)


def test_scale_map_examples():
    np.testing.assert_array_equal(scale_map([0.7, -1.3], 2), [0.7, -1.3])
    np.testing.assert_array_equal(scale_map([4, -9, 0], INF), [1, -1, 0])
    np.testing.assert_allclose(scale_map([4, -9], 3), [2, -3], rtol=1e-15)


def test_scale_map_eps_examples():
    np.testing.assert_allclose(scale_map_eps([4.0], 3, 0.0), [2.0], rtol=1e-15)
    np.testing.assert_allclose(scale_map_eps([4.0], 3, 1.0), [4 / 3], rtol=1e-15)
    for p in (2, 3, INF):
        for eps in (0.0, 1e-8, 1.0):
            np.testing.assert_array_equal(scale_map_eps([0.0, 0.0], p, eps), [0.0, 0.0])


def test_scale_map_eps_rejects_negative_eps():
    with pytest.raises(ValueError):
        scale_map_eps([1.0], 3, -1.0)


def test_mirror_grad_examples():
    np.testing.assert_array_equal(mirror_grad([5, -7], 2), [5, -7])
    np.testing.assert_allclose(mirror_grad([2, -3], 3), [4, -9], rtol=1e-15)
    np.testing.assert_array_equal(mirror_grad([0.0], 4), [0.0])
    with pytest.raises(UnsupportedExponentError):
        mirror_grad([1.0], INF)


def test_stationarity_examples():
    assert stationarity_measure([3, 4], 2) == 25.0
    assert stationarity_measure([1, -2, 3], INF) == 6.0
    assert stationarity_measure([8], 3) == pytest.approx(22.627417, abs=1e-6)
    assert stationarity_measure([8], 3) == pytest.approx(8 ** 1.5, rel=1e-14)


def test_underflow_floor():
    # below 1e-300 magnitudes are exact zeros
    np.testing.assert_array_equal(scale_map([1e-310], 3), [0.0])
    np.testing.assert_array_equal(scale_map_eps([1e-310], 3, 0.0), [0.0])


@settings(max_examples=200, deadline=None)
@given(p=finite_p, data=st.data())
def test_mirror_round_trip(p, data):
    n = data.draw(st.integers(1, 10))
    mags = data.draw(arrays(np.float64, n, elements=st.floats(1e-6, 1e3)))
    signs = data.draw(arrays(np.float64, n, elements=st.sampled_from([-1.0, 1.0])))
    z = mags * signs
    np.testing.assert_allclose(scale_map(mirror_grad(z, p), p), z, rtol=1e-9)


@settings(max_examples=100, deadline=None)
@given(p=finite_p, x=vectors)
def test_oddness(p, x):
    np.testing.assert_array_equal(scale_map(-x, p), -scale_map(x, p))
    np.testing.assert_array_equal(mirror_grad(-x, p), -mirror_grad(x, p))


@settings(max_examples=100, deadline=None)
@given(p=finite_p, a=st.floats(-1e3, 1e3), b=st.floats(-1e3, 1e3))
def test_monotone(p, a, b):
    if a == b:
        return
    lo, hi = min(a, b), max(a, b)
    s = scale_map([lo, hi], p)
    m = mirror_grad([lo, hi], p)
    assert s[0] <= s[1]
    assert m[0] <= m[1]
    # strictness: both maps are injective on distinct reals away from underflow
    if abs(hi - lo) > 1e-6 * max(1.0, abs(hi), abs(lo)):
        assert s[0] < s[1]


@settings(max_examples=200, deadline=None)
@given(p=st.one_of(finite_p, st.just(INF)), g=vectors)
def test_duality_identity(p, g):
    lhs = float(np.dot(g, scale_map(g, p)))
    rhs = stationarity_measure(g, p)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-300)


@settings(max_examples=100, deadline=None)
@given(q=st.one_of(st.floats(1.0, 20.0), st.just(INF)), v=vectors, alpha=st.floats(-100, 100),
       seed=st.integers(0, 2**32 - 1))
def test_lp_norm_permutation_and_homogeneity(q, v, alpha, seed):
    perm = np.random.default_rng(seed).permutation(v.size)
    assert lp_norm(v[perm], q) == pytest.approx(lp_norm(v, q), rel=1e-12)
    assert lp_norm(alpha * v, q) == pytest.approx(abs(alpha) * lp_norm(v, q), rel=1e-12, abs=1e-300)


def test_degenerate_reductions():
    x = np.array([0.3, -2.0, 0.0, 5.5])
    np.testing.assert_array_equal(scale_map(x, 2), x)
    np.testing.assert_array_equal(mirror_grad(x, 2), x)
    np.testing.assert_array_equal(scale_map(x, INF), np.sign(x))


def test_large_p_is_not_infinity():
    # a huge finite p is still a power map, distinct from the sign branch
    s = scale_map([0.5], 1e6)
    assert 0.49 < s[0] < 1.0
    assert scale_map([0.5], INF)[0] == 1.0
    assert math.isclose(dual_exponent(1e6), 1e6 / (1e6 - 1))
