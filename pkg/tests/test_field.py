import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import zeta

from stablefield import (
    AlphaOutOfRange,
    BetaTooSmall,
    FilterSpec,
    InvalidSpec,
    InvalidWeights,
    LimitUnavailable,
    RationalWeights,
    TableWeights,
    alpha_norm,
    coefficient,
    validate_params,
    weight_limits,
)
from stablefield.field import CallableWeights, check_weight_bounds, weights_from_json


def test_validate_accepts():
    p = validate_params(2.0, 0.6, 0.7)
    assert (p.alpha, p.beta1, p.beta2) == (2.0, 0.6, 0.7)


def test_validate_rejects_beta1():
    with pytest.raises(BetaTooSmall) as exc:
        validate_params(1.5, 0.5, 3.0)
    assert "beta1" in str(exc.value)


def test_validate_rejects_beta2():
    with pytest.raises(BetaTooSmall) as exc:
        validate_params(1.5, 3.0, 0.6)
    assert "beta2" in str(exc.value)


@pytest.mark.parametrize("alpha", [2.5, 0.0, -1.0, math.nan, math.inf])
def test_validate_rejects_alpha(alpha):
    with pytest.raises((AlphaOutOfRange, ValueError)):
        validate_params(alpha, 2, 2)


def test_coefficient_examples():
    assert coefficient(FilterSpec.parametric(1.5, 1, 1), 1, 3) == pytest.approx(0.125, rel=1e-15)
    assert coefficient(FilterSpec.parametric(1.5, 2, 3), 0, 0) == 1.0
    w = CallableWeights(lambda i, j: 1 + 1 / (1 + i), 1.0, 2.0)
    spec = FilterSpec(validate_params(1.5, 1, 1), w)
    assert coefficient(spec, 1, 0) == pytest.approx(0.75, rel=1e-15)


def test_coefficient_override():
    spec = FilterSpec.from_entries(1.0, [(0, 0, 1.0), (1, 1, 2.0)])
    assert coefficient(spec, 1, 1) == 2.0
    assert coefficient(spec, 0, 1) == 0.0
    assert coefficient(spec, 7, 9) == 0.0
    with pytest.raises(ValueError):
        coefficient(spec, -1, 0)


@settings(max_examples=50)
@given(
    st.floats(0.5, 2.0),
    st.floats(0.0, 3.0),
    st.floats(0.0, 3.0),
    st.floats(-0.9, 0.9),
    st.floats(-0.9, 0.9),
)
def test_parametric_coefficient_bounds(alpha, d1, d2, a, b):
    b1 = 1 / alpha + 0.05 + d1
    b2 = 1 / alpha + 0.05 + d2
    try:
        w = RationalWeights(a, b)
    except InvalidWeights:
        return
    spec = FilterSpec.parametric(alpha, b1, b2, w)
    rng = np.random.default_rng(0)
    i = rng.integers(0, 10_000, 200)
    j = rng.integers(0, 10_000, 200)
    c = np.abs(spec.coefficients(i, j))
    env = (1.0 + i) ** -b1 * (1.0 + j) ** -b2
    assert np.all(c > 0)
    assert np.all(c <= w.upper * env)
    assert np.all(c >= w.lower * env)


def test_coefficient_is_pure():
    spec = FilterSpec.parametric(1.3, 1.7, 2.2, RationalWeights(0.3, -0.4))
    a = [coefficient(spec, 5, 11) for _ in range(5)]
    assert len({x.hex() for x in a}) == 1


def test_weight_limits_rational():
    spec = FilterSpec.parametric(1.5, 2, 2, RationalWeights(0.5, -0.25))
    assert weight_limits(spec, "row", 3) == pytest.approx(1 + 0.5 / 4)
    assert weight_limits(spec, "col", 1) == pytest.approx(1 - 0.25 / 2)


def test_weight_limits_constant():
    spec = FilterSpec.parametric(1.5, 2, 2)
    assert weight_limits(spec, "col", 17) == 1.0


def test_weight_limits_extrapolated():
    w = CallableWeights(lambda i, j: 1 + (-1.0) ** i / ((1 + i) * (1 + j)), 0.4, 2.0)
    spec = FilterSpec(validate_params(1.5, 2, 2), w)
    assert weight_limits(spec, "row", 0) == pytest.approx(1.0, abs=1e-8)


def test_weight_limits_unavailable():
    w = CallableWeights(lambda i, j: 1.5 + 0.5 * np.sin(j), 0.9, 2.1)
    spec = FilterSpec(validate_params(1.5, 2, 2), w)
    with pytest.raises(LimitUnavailable):
        weight_limits(spec, "row", 0)


def test_rational_weights_reject():
    with pytest.raises(InvalidWeights):
        RationalWeights(1.0, 0.0)
    with pytest.raises(InvalidWeights):
        # w(0, 0) = 1 - 0.5 - 0.5 = 0
        RationalWeights(-0.5, -0.5)
    with pytest.raises(InvalidWeights):
        # w(0, 8) = 1 - 0.9 - 0.1 = 0
        RationalWeights(-0.9, -0.9)
    with pytest.raises(InvalidWeights):
        RationalWeights(-0.5, -1.0 + 1e-16)


def test_rational_weights_sign_change_allowed():
    w = RationalWeights(-0.9, -0.75)
    assert w.eval(0, 0) < 0 < w.eval(5, 5)
    check_weight_bounds(w)


def test_table_weights():
    w = TableWeights([[2.0, -1.0], [0.5, 1.5]], [1.2, 0.8], [1.1, 0.9])
    assert w.eval(0, 1) == -1.0
    assert w.eval(0, 5) == 1.2
    assert w.eval(7, 1) == 0.9
    assert w.eval(7, 7) == 1.0
    assert w.row_limit(1) == 0.8
    assert w.row_limit(4) == 1.0
    with pytest.raises(InvalidWeights):
        TableWeights([[0.0]], [1.0], [1.0])
    with pytest.raises(InvalidWeights):
        TableWeights([[1.0]], [1.0, 2.0], [1.0])


def test_alpha_norm_examples():
    v, e = alpha_norm(FilterSpec.parametric(2.0, 2, 2), 1e-10)
    assert abs(v - zeta(4) ** 2) <= max(e, 1e-12)
    v, e = alpha_norm(FilterSpec.parametric(1.0, 2, 2), 1e-10)
    assert abs(v - zeta(2) ** 2) <= max(e, 1e-12)
    v, _ = alpha_norm(FilterSpec.from_entries(1.0, [(0, 0, 1.0), (1, 1, 2.0)]))
    assert v == 3.0


def test_alpha_norm_soundness():
    rng = np.random.default_rng(3)
    for _ in range(20):
        # tails decay like I^(1 - alpha beta); keep alpha beta >= 2.5 so 1e-8 is reachable
        a = rng.uniform(0.6, 2.0)
        b1 = rng.uniform(2.5, 4.0) / a
        b2 = rng.uniform(2.5, 4.0) / a
        w = RationalWeights(*rng.uniform(-0.6, 0.6, 2))
        spec = FilterSpec.parametric(a, b1, b2, w)
        v, e = alpha_norm(spec, 1e-6)
        v2, e2 = alpha_norm(spec, 1e-8)
        assert e <= 1e-6
        assert abs(v - v2) <= e + e2


def test_alpha_norm_bad_tol():
    with pytest.raises(ValueError):
        alpha_norm(FilterSpec.parametric(1.5, 2, 2), 0.0)


def test_json_round_trip():
    specs = [
        FilterSpec.parametric(1.5, 2, 3),
        FilterSpec.parametric(1.2, 1.1, 2.5, RationalWeights(0.2, -0.3)),
        FilterSpec.parametric(1.8, 2, 2, TableWeights([[1.5]], [1.2], [0.8])),
        FilterSpec.from_entries(0.9, [(0, 0, 1.0), (2, 1, -0.5)]),
    ]
    for s in specs:
        doc = json.loads(s.dumps())
        back = FilterSpec.from_json(doc)
        assert back.dumps() == s.dumps()


def test_json_bad_documents():
    with pytest.raises(InvalidSpec):
        FilterSpec.from_json({"beta1": 2})
    with pytest.raises(InvalidWeights):
        weights_from_json({"kind": "wavelet"})


def test_override_must_be_finite():
    with pytest.raises(InvalidSpec):
        FilterSpec.from_override(1.5, [[1.0, math.nan]])
    with pytest.raises(InvalidSpec):
        FilterSpec.from_entries(1.5, [(-1, 0, 1.0)])


def test_transpose_swaps_axes():
    spec = FilterSpec.parametric(1.4, 1.5, 2.5, RationalWeights(0.3, -0.2))
    t = spec.transposed()
    assert (t.beta1, t.beta2) == (2.5, 1.5)
    for i, j in [(0, 0), (3, 7), (10, 2)]:
        assert coefficient(t, i, j) == pytest.approx(coefficient(spec, j, i), rel=1e-15)
