import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stablefield import FilterSpec
from stablefield.vkernel import (
    VKernel,
    bound_directional,
    bound_symmetric,
    bound_theta,
    v_eval,
    v_tail_majorant,
    v_vec,
)

finite = st.one_of(
    st.just(0.0),
    st.floats(1e-100, 1e6).flatmap(lambda v: st.sampled_from([v, -v])),
)
alphas = st.floats(0.05, 2.0)


def test_diagonal_alpha_one():
    assert v_eval(1, 1, 1.0) == pytest.approx(2**-0.5, rel=1e-15)


def test_zero_factor():
    for a in (0.3, 1.0, 1.7, 2.0):
        assert v_eval(3.0, 0.0, a) == 0.0
        assert v_eval(0.0, 0.0, a) == 0.0


def test_gaussian_case_is_product():
    assert v_eval(3, 4, 2.0) == pytest.approx(12.0, rel=1e-15)


def test_homogeneity_example():
    assert v_eval(2, 2, 1.3) == pytest.approx(2**1.3 * v_eval(1, 1, 1.3), rel=1e-14)


def test_no_overflow_extremes():
    for a in (0.5, 1.5, 2.0):
        for s in (1e150, 1e-150, 1e-300):
            v = v_eval(s, 0.5 * s, a)
            assert math.isfinite(v)
            ref = s**a * v_eval(1.0, 0.5, a) if s**a > 0 else 0.0
            assert v == pytest.approx(ref, rel=1e-12, abs=1e-300)


def test_vectorised_matches_scalar():
    rng = np.random.default_rng(1)
    x = rng.normal(size=200) * 10.0 ** rng.uniform(-120, 120, 200)
    y = rng.normal(size=200) * 10.0 ** rng.uniform(-120, 120, 200)
    for a in (0.4, 1.0, 1.5, 2.0):
        vec = v_vec(x, y, a)
        ref = np.array([v_eval(u, w, a) for u, w in zip(x, y)])
        np.testing.assert_allclose(vec, ref, rtol=1e-13, atol=0)


def test_kernel_object():
    assert VKernel(1.5)(2.0, 3.0) == v_eval(2.0, 3.0, 1.5)


@given(finite, finite, alphas)
def test_symmetry(x, y, a):
    assert v_eval(x, y, a) == pytest.approx(v_eval(y, x, a), rel=1e-12, abs=1e-300)


@given(finite, finite, alphas, st.sampled_from([1e-8, -1e-3, 0.5, -7.0, 1e4, 1e8]))
def test_homogeneity(x, y, a, lam):
    lhs = v_eval(lam * x, lam * y, a)
    rhs = abs(lam) ** a * v_eval(x, y, a)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-300)


@settings(max_examples=300)
@given(finite, finite, alphas)
def test_symmetric_bound(x, y, a):
    v = abs(v_eval(x, y, a))
    assert v <= float(bound_symmetric(x, y, a)) * (1 + 1e-12) + 1e-300


def test_symmetric_bound_equality_on_diagonal():
    for a in (0.5, 1.0, 1.5, 2.0):
        for x in (0.3, 2.0, -5.0):
            assert abs(v_eval(x, -x, a)) == pytest.approx(float(bound_symmetric(x, -x, a)), rel=1e-14)
            if a < 2:
                assert abs(v_eval(x, 2 * x, a)) < float(bound_symmetric(x, 2 * x, a)) * (1 - 1e-6)


@given(finite, finite, st.floats(1.0, 2.0))
def test_directional_bound_alpha_ge_one(x, y, a):
    assert abs(v_eval(x, y, a)) <= float(bound_directional(x, y, a)) * (1 + 1e-12) + 1e-300


@given(finite, finite, st.floats(0.05, 1.0))
def test_directional_bound_alpha_lt_one(x, y, a):
    if abs(x) < abs(y):
        x, y = y, x
    assert abs(v_eval(x, y, a)) <= float(bound_directional(x, y, a)) * (1 + 1e-12) + 1e-300


@given(finite, finite, st.floats(0.05, 1.0))
def test_directional_bound_alpha_lt_one_any_order(x, y, a):
    # |V| / bound = (|x| / r)^(2 - alpha), so the ordering is not needed
    assert abs(v_eval(x, y, a)) <= float(bound_directional(x, y, a)) * (1 + 1e-12) + 1e-300


@settings(max_examples=300)
@given(finite, finite, alphas, st.floats(0.0, 1.0))
def test_theta_bound(x, y, a, t):
    assert abs(v_eval(x, y, a)) <= float(bound_theta(x, y, a, t)) * (1 + 1e-12) + 1e-300


def test_continuity_at_origin():
    for a in (0.2, 1.0, 1.9):
        vals = [abs(v_eval(e * 0.7, -e * 1.3, a)) for e in 10.0 ** -np.arange(1, 12)]
        assert all(b < a_ for a_, b in zip(vals, vals[1:]))
        assert vals[-1] < 2.0 * 1e-11**a


def test_majorant_zero_beyond_override_support():
    spec = FilterSpec.from_entries(1.5, [(0, 0, 1.0), (1, 2, -0.5)])
    assert v_tail_majorant(spec, (5, 5), (1, 1)) == 0.0


def test_majorant_dominates_tail_gaussian():
    spec = FilterSpec.parametric(2.0, 2.0, 2.0)
    # reference tail outside 100x100, summed to 4000x4000 plus analytic remainder
    i = np.arange(4000, dtype=float)
    a = (1 + i) ** -4.0
    full = a.sum() + 1.0 / (3 * 4000.5**3)
    inner = a[:100].sum()
    tail = full * full - inner * inner
    bound = v_tail_majorant(spec, (100, 100), (0, 0))
    assert tail <= bound
    assert bound < 50 * tail


def test_majorant_small_alpha_monotone():
    spec = FilterSpec.parametric(0.8, 1.5, 1.5)
    bounds = [v_tail_majorant(spec, (n, n), (5, 5)) for n in (200, 400, 800, 1600)]
    assert all(math.isfinite(b) and b > 0 for b in bounds)
    assert all(b < a for a, b in zip(bounds, bounds[1:]))
