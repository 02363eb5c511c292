import math
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy.special import beta as beta_fn
from scipy.special import zeta

from stablefield import (
    Direction,
    FilterSpec,
    RationalWeights,
    Regime,
    SimConfig,
    Uncovered,
    adjudicate_case6b,
    classify,
    ecf_check,
    params_from_text,
    rate_eval,
    rho,
    simulate_pairs,
    tail_rho_estimate,
    validate_params,
    verify,
)
from stablefield.constants import (
    beta_integral_1d,
    constant_eval,
    signed_power_series,
    v_integral_2d,
)
from stablefield.covariance import Lag
from stablefield.vkernel import bound_directional, bound_symmetric, v_vec

DOUBLINGS = [2**k for k in range(4, 11)]


def signed_mag(rng, n, lo=-6, hi=6):
    return rng.choice([-1.0, 1.0], n) * 10.0 ** rng.uniform(lo, hi, n)


def test_vkernel_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    n = 100_000
    x, y = signed_mag(rng, n), signed_mag(rng, n)
    a = rng.uniform(0.05, 2.0, n)
    lam = signed_mag(rng, n, -3, 3)

    v = v_vec(x, y, a)
    assert np.all(np.abs(v - v_vec(y, x, a)) <= 1e-12 * np.abs(v))

    hv = v_vec(lam * x, lam * y, a)
    assert np.all(np.abs(hv - np.abs(lam) ** a * v) <= 1e-10 * np.abs(hv))

    av = np.abs(v)
    assert np.all(av <= bound_symmetric(x, y, a) * (1 + 1e-12))
    assert np.all(av <= bound_directional(x, y, a) * (1 + 1e-12))

    # continuity at 0: |V(e x, e y)| = e^alpha |V(x, y)| -> 0 and V vanishes on the axes
    for e in (1e-4, 1e-8, 1e-12):
        small = np.abs(v_vec(e * x[:1000], e * y[:1000], a[:1000]))
        assert np.all(small <= e ** a[:1000] * av[:1000] * (1 + 1e-10))
    assert np.all(v_vec(x, np.zeros(n), a) == 0.0)
    near = np.abs(v_vec(x[:1000], 1e-10 * y[:1000], a[:1000]))
    assert np.all(near <= np.abs(x[:1000]) ** (a[:1000] - 1) * 1e-10 * np.abs(y[:1000]) * (1 + 1e-12))
    assert time.perf_counter() - t0 < 5.0


def test_gaussian_brute_force():
    t0 = time.perf_counter()
    rng = np.random.default_rng(31)
    for _ in range(50):
        t = rng.normal(size=(rng.integers(1, 7), rng.integers(1, 7)))
        spec = FilterSpec.from_override(2.0, t)
        pad = np.zeros((t.shape[0] + 14, t.shape[1] + 14))
        pad[: t.shape[0], : t.shape[1]] = t
        for _ in range(4):
            k = tuple(int(v) for v in rng.integers(-7, 8, 2))
            lag = Lag.of(k)
            km, kp = lag.kminus, lag.kplus
            ref = math.fsum(
                pad[i + km[0], j + km[1]] * pad[i + kp[0], j + kp[1]]
                for i in range(t.shape[0])
                for j in range(t.shape[1])
            )
            assert abs(rho(spec, k).value - ref) <= 1e-10
    assert time.perf_counter() - t0 < 10.0


def test_constant_anchors():
    t0 = time.perf_counter()
    v, err = signed_power_series(FilterSpec.parametric(2.0, 2, 2))
    assert abs(v - zeta(2) ** 2) <= max(1e-8, 10 * err)
    v, err = beta_integral_1d(0.5, 1)
    assert abs(v - math.pi) <= max(1e-8, 10 * err)
    v, err = v_integral_2d("pospos", 2.0, 0.75, 0.75)
    assert abs(v - beta_fn(0.25, 0.5) ** 2) <= max(1e-8, 10 * err)
    assert time.perf_counter() - t0 < 30.0


def test_truncation_honesty():
    t0 = time.perf_counter()
    rng = np.random.default_rng(77)
    tol = 1e-3
    for _ in range(20):
        a = rng.uniform(0.5, 2.0)
        b1, b2 = rng.uniform(2.5, 4.5, 2) / a
        wa, wb = rng.uniform(-0.4, 0.4, 2)
        spec = FilterSpec.parametric(a, b1, b2, RationalWeights(wa, wb))
        k = tuple(int(v) for v in rng.integers(-20, 21, 2))
        coarse = rho(spec, k, tol)
        fine = rho(spec, k, tol / 100)
        assert abs(coarse.value - fine.value) <= coarse.error_bound, (a, b1, b2, k)
    assert time.perf_counter() - t0 < 120.0


def test_classifier_partition():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    dirs = [Direction.to_zero(), Direction.to_const(1.3), Direction.to_infinity()]
    count = 0
    while count < 10_000:
        a = rng.uniform(0.05, 2.0)
        b1, b2 = 1 / a + rng.exponential(1.5, 2) + 1e-6
        walls = [1.0] + ([1 / (a - 1)] if a > 1 else [])
        margins = [abs(b - w) for b in (b1, b2) for w in walls] + [abs(1 / b1 + 1 / b2 - a)]
        if min(margins) < 1e-6:
            continue
        count += 1
        p = validate_params(a, b1, b2)
        assert isinstance(classify(p, "pos"), Regime)
        d = dirs[count % 3]
        r = classify(p, "neg", d)
        assert isinstance(r, Regime)
        t = classify(validate_params(a, b2, b1), "neg", d.mirrored())
        assert t.case_id == r.case_id
        if not (r.subcase == "b" and r.case_id in (4, 6)):
            assert (r.rate.a, r.rate.b) == pytest.approx((t.rate.b, t.rate.a))
        else:
            n = 4096.0
            m = (d.c * n**-b1) ** (-1 / b2)
            assert rate_eval(r.rate, n, m) / rate_eval(t.rate, m, n) == pytest.approx(d.c ** (2 - a), rel=1e-9)
        q = classify(validate_params(a, b2, b1), "pos")
        assert q.case_id == classify(p, "pos").case_id

    # boundaries given exactly
    pos_eq = {("1/(alpha-1)", "3"): 5, ("1/(alpha-1)", "1"): 4, ("1/(alpha-1)", "1/(alpha-1)"): 6}
    for (b1, b2), case in pos_eq.items():
        assert classify(params_from_text("3/2", b1, b2), "pos").case_id == case
    d = Direction.to_zero()
    neg_eq = {("1/(alpha-1)", "0.9"): 3, ("3", "1/(alpha-1)"): 7, ("1/(alpha-1)", "3/2"): 8,
              ("1/(alpha-1)", "1/(alpha-1)"): 9}
    for (b1, b2), case in neg_eq.items():
        assert classify(params_from_text("3/2", b1, b2), "neg", d).case_id == case
    for a, b in ((Fraction(3, 2), Fraction(4, 3)), (Fraction(1, 2), Fraction(4)), (Fraction(6, 5), Fraction(5, 3))):
        assert 1 / b + 1 / b == a
        for dd in (Direction.to_zero(), Direction.to_const(1), Direction.to_infinity()):
            assert isinstance(classify(validate_params(a, b, b), "neg", dd), Uncovered)
    assert time.perf_counter() - t0 < 5.0


def test_positive_quadrant_convergence():
    t0 = time.perf_counter()
    cases = [((1.5, 3, 3), 1, zeta(1.5) ** 2), ((2.0, 0.75, 0.75), 2, beta_fn(0.25, 0.5) ** 2)]
    lines = []
    for (a, b1, b2), case, ref in cases:
        spec = FilterSpec.parametric(a, b1, b2)
        regime, rep = verify(spec, "pos", n_values=DOUBLINGS, gap_target=0.1)
        assert regime.case_id == case
        assert rep.predicted == pytest.approx(ref, rel=1e-6)
        gaps = [r["rel_gap"] for r in rep.rows]
        lines.append((regime.label, gaps[-1], rep.verdict))
        print(f"{regime.label}: final rel_gap {gaps[-1]:.4f}, verdict {rep.verdict}")
    assert time.perf_counter() - t0 < 300.0
    missed = [f"{label} final rel_gap {gap:.4f}" for label, gap, verdict in lines if verdict != "Converging"]
    assert not missed, "not within 0.10 by n = 1024: " + ", ".join(missed)


def test_negative_quadrant_trichotomy():
    t0 = time.perf_counter()
    spec = FilterSpec.parametric(1.5, 3, 3)
    results = []
    for d in (Direction.to_zero(), Direction.to_const(1.0), Direction.to_infinity()):
        regime, rep = verify(spec, "neg", d, n_values=DOUBLINGS, gap_target=0.15)
        assert regime.case_id == 4
        exact = constant_eval(regime.constant, spec, 1e-8)[0]
        assert rep.predicted == pytest.approx(exact, rel=1e-3)
        gap = rep.rows[-1]["rel_gap"]
        print(f"{regime.label}: predicted {rep.predicted:.6f}, final rel_gap {gap:.4f}, verdict {rep.verdict}")
        results.append((regime.label, gap, rep.verdict))

    adj = adjudicate_case6b(FilterSpec.parametric(1.2, 4, 4), 2.0, n_values=DOUBLINGS)
    print(f"{adj['regime']} at c=2: displayed form gap {adj['gap_printed']:.3f}, "
          f"analogue gap {adj['gap_analogue']:.3f}, matches {adj['matches']}")
    assert adj["matches"] == "c_outside"
    assert time.perf_counter() - t0 < 600.0
    missed = [f"{label} final rel_gap {gap:.4f}" for label, gap, verdict in results if verdict != "Converging"]
    assert not missed, "not within 0.15 by n = 1024: " + ", ".join(missed)


def test_simulation_validation():
    t0 = time.perf_counter()
    k = (2, 1)
    for a in (1.0, 1.5, 2.0):
        spec = FilterSpec.parametric(a, 2, 2)
        s = simulate_pairs(SimConfig(spec, seed=42, sample_count=100_000), k)
        rep = ecf_check(s, spec, k, confidence=0.99)
        assert rep["pass"], (a, rep["max_abs_dev"], rep["band"])

    spec = FilterSpec.parametric(1.5, 2, 2)
    exact = rho(spec, k, 1e-7).value
    s = simulate_pairs(SimConfig(spec, seed=7, sample_count=1_000_000), k)
    est = tail_rho_estimate(s, spec, k)
    print(f"tail rho {est:.5f} vs exact {exact:.5f}")
    assert abs(est - exact) <= 0.15 * abs(exact)
    assert time.perf_counter() - t0 < 300.0
