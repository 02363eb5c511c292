import math

import pytest

from stablefield import (
    ConstantEvaluationFailed,
    Direction,
    FilterSpec,
    classify,
    convergence_report,
    lag_sequence,
    verify,
)
from stablefield.verify import CSV_COLUMNS, CSV_HEADER, verdict_of


def test_const_direction_equal_betas():
    p = FilterSpec.parametric(1.5, 3, 3).params
    seq = lag_sequence(p, Direction.to_const(1.0), [16, 32, 64])
    assert seq.entries == ((16, 16), (32, 32), (64, 64))
    assert seq.h == (1.0, 1.0, 1.0)
    assert seq.lags() == [(16, -16), (32, -32), (64, -64)]
    assert seq.direction_ok()


def test_to_zero_sequence():
    p = FilterSpec.parametric(1.5, 3, 1.5).params
    ns = [2**k for k in range(4, 11)]
    seq = lag_sequence(p, Direction.to_zero(), ns)
    for (n, m), h in zip(seq.entries, seq.h):
        assert m == round(n**2 * math.log(n))
        assert h == pytest.approx(math.log(n) ** -1.5, rel=0.05)
    assert seq.direction_ok()


def test_to_infinity_sequence():
    p = FilterSpec.parametric(1.5, 2, 2).params
    ns = [2**k for k in range(4, 11)]
    seq = lag_sequence(p, Direction.to_infinity(), ns)
    for (n, m), h in zip(seq.entries, seq.h):
        assert m == max(2, round(n / math.log(n)))
        assert h == pytest.approx(math.log(n) ** 2, rel=0.1)
    assert seq.direction_ok()


def test_const_sequence_realised_band():
    p = FilterSpec.parametric(1.5, 2.5, 3.5).params
    seq = lag_sequence(p, Direction.to_const(2.0), [2**k for k in range(4, 11)])
    assert seq.direction_ok(0.1)
    for h in seq.h[-3:]:
        assert abs(h - 2.0) <= 0.2


def test_positive_quadrant_shapes():
    p = FilterSpec.parametric(1.5, 3, 3).params
    assert lag_sequence(p, None, [4, 9], "pos").entries == ((4, 4), (9, 9))
    assert lag_sequence(p, None, [4, 9], "pos", "square").entries == ((4, 16), (9, 81))
    assert lag_sequence(p, None, [4, 10], "pos", "sqrt").entries == ((4, 2), (10, 4))
    assert lag_sequence(p, None, [4], "pos").lags() == [(4, 4)]


def test_sequence_validation():
    p = FilterSpec.parametric(1.5, 3, 3).params
    with pytest.raises(ValueError):
        lag_sequence(p, None, [8, 4], "pos")
    with pytest.raises(ValueError):
        lag_sequence(p, None, [1, 4], "pos")
    with pytest.raises(ValueError):
        lag_sequence(p, None, [4, 8], "pos", "spiral")


def test_verdict_rules():
    assert verdict_of([0.4, 0.2, 0.1, 0.05], 0.1) == "Converging"
    assert verdict_of([0.4, 0.2, 0.1, 0.15], 0.2) == "Inconclusive"
    assert verdict_of([0.4, 0.3, 0.2, 0.12], 0.1) == "Inconclusive"
    assert verdict_of([0.1, 0.2, 0.3, 0.4], 0.1) == "Diverging"
    assert verdict_of([0.1, 0.05], 0.1) == "Inconclusive"


def test_report_converging_case():
    spec = FilterSpec.parametric(1.5, 3, 3)
    d = Direction.to_const(1.0)
    reg = classify(spec.params, "neg", d)
    seq = lag_sequence(spec.params, d, [2**k for k in range(4, 11)])
    rep = convergence_report(spec, reg, seq, 1e-4, 0.1)
    assert rep.verdict == "Converging"
    for r in rep.rows:
        assert r["rel_gap"] == pytest.approx(abs(r["ratio"] - r["predicted"]) / abs(r["predicted"]))
    # bounded ratio along the sequence
    assert max(r["ratio"] for r in rep.rows) < 2 * rep.predicted
    text = rep.to_csv().splitlines()
    assert text[0] == CSV_HEADER
    assert text[1].split(",") == list(CSV_COLUMNS)
    assert len(text) == 2 + len(rep.rows)
    doc = rep.to_json()
    assert doc["verdict"] == "Converging" and doc["rows"] == len(rep.rows)


def test_verify_uncovered():
    reg, rep = verify(FilterSpec.parametric(1.5, 3, 1), "neg", Direction.to_zero())
    assert rep is None and reg.label == "uncovered"


def test_override_rejected():
    spec = FilterSpec.parametric(1.5, 3, 3)
    reg = classify(spec.params, "pos")
    seq = lag_sequence(spec.params, None, [16, 32], "pos")
    with pytest.raises(ConstantEvaluationFailed):
        convergence_report(FilterSpec.from_entries(1.5, [(0, 0, 1.0)]), reg, seq)


def test_budget_stops_early(monkeypatch):
    monkeypatch.setenv("STABLEFIELD_MAX_TERMS", "200000")
    spec = FilterSpec.parametric(1.5, 3, 3)
    reg, rep = verify(spec, "pos", n_values=[16, 64, 256, 1024], tol=1e-6)
    assert rep.verdict == "Inconclusive"
    assert rep.note.startswith("stopped early")
    assert len(rep.rows) < 4


def test_threads_do_not_change_rows():
    spec = FilterSpec.parametric(1.5, 3, 3)
    _, a = verify(spec, "pos", n_values=[16, 32, 64, 128], threads=1)
    _, b = verify(spec, "pos", n_values=[16, 32, 64, 128], threads=3)
    assert a.rows == b.rows
