"""Numerical verification of the decay regimes along lag sequences."""

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .constants import cmixed_value, constant_eval
from .covariance import rho
from .errors import ConstantEvaluationFailed, ToleranceUnreachable, UnboundedRegion
from .regimes import Direction, Regime, classify, rate_eval

CSV_HEADER = "# stablefield-cov v1"
CSV_COLUMNS = ("n", "m", "rho", "rho_error", "rate", "ratio", "predicted", "rel_gap")

DEFAULT_N = tuple(2**k for k in range(4, 11))


@dataclass(frozen=True)
class LagSequence:
    """Pairs (n, m) with the realised h_n = m^-beta2 / n^-beta1.

    ``quadrant="pos"`` sequences are evaluated at lag (n, m), ``"neg"`` ones
    at (n, -m).
    """

    entries: tuple
    direction: object
    h: tuple
    quadrant: str = "neg"
    shape: str = "direction"

    def lags(self):
        sgn = 1 if self.quadrant == "pos" else -1
        return [(n, sgn * m) for n, m in self.entries]

    def direction_ok(self, band=0.1):
        """Check the last third of h_n against the declared direction."""
        if self.direction is None:
            return True
        h = np.asarray(self.h)
        tail = h[len(h) - max(1, len(h) // 3):]
        if self.direction.kind == "const":
            c = self.direction.c
            return bool(np.all(np.abs(tail - c) <= band * c))
        if self.direction.kind == "zero":
            return bool(np.all(np.diff(h) < 0) and tail[-1] < h[0])
        return bool(np.all(np.diff(h) > 0) and tail[-1] > h[0])


def lag_sequence(params, direction=None, n_values=DEFAULT_N, quadrant="neg", shape="diagonal"):
    """Build a lag sequence.

    Negative quadrant: m_n = round(c^(-1/b2) n^(b1/b2)) for ToConst(c),
    round(n^(b1/b2) ln n) for ToZero and max(2, round(n^(b1/b2)/ln n)) for
    ToInfinity.  Positive quadrant: ``shape`` is ``"diagonal"`` (m = n),
    ``"square"`` (m = n^2) or ``"sqrt"`` (m = ceil(sqrt n)).
    """
    n_values = [int(n) for n in n_values]
    if any(n < 2 for n in n_values) or any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise ValueError("n_values must be increasing and >= 2")
    b1, b2 = params.beta1, params.beta2
    out = []
    if quadrant == "pos":
        for n in n_values:
            if shape == "diagonal":
                m = n
            elif shape == "square":
                m = n * n
            elif shape == "sqrt":
                m = math.isqrt(n - 1) + 1
            else:
                raise ValueError(f"unknown sequence shape {shape!r}")
            out.append((n, m))
        direction = None
    elif quadrant == "neg":
        if direction is None:
            direction = Direction.to_const(1.0)
        shape = "direction"
        e = b1 / b2
        for n in n_values:
            if direction.kind == "const":
                m = round(direction.c ** (-1.0 / b2) * n**e)
            elif direction.kind == "zero":
                m = round(n**e * math.log(n))
            else:
                m = max(2, round(n**e / math.log(n)))
            out.append((n, max(1, int(m))))
    else:
        raise ValueError("quadrant must be 'pos' or 'neg'")
    h = tuple(m**-b2 / n**-b1 for n, m in out)
    return LagSequence(tuple(out), direction, h, quadrant, shape)


@dataclass
class ConvergenceReport:
    rows: list
    verdict: str
    trend: float
    predicted: float
    predicted_error: float
    gap_target: float
    label: str = ""
    note: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def rel_gaps(self):
        return [r["rel_gap"] for r in self.rows]

    def to_csv(self):
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([r["n"], r["m"]] + [repr(float(r[c])) for c in CSV_COLUMNS[2:]])
        return buf.getvalue()

    def to_json(self):
        return {
            "regime": self.label,
            "verdict": self.verdict,
            "trend": self.trend,
            "predicted": self.predicted,
            "predicted_error": self.predicted_error,
            "gap_target": self.gap_target,
            "final_rel_gap": self.rows[-1]["rel_gap"] if self.rows else None,
            "rows": len(self.rows),
            "note": self.note,
            **self.extra,
        }


def _trend(rows):
    # slope of log rel_gap per doubling of n over the last four rows
    pts = [(math.log2(r["n"]), math.log(r["rel_gap"])) for r in rows[-4:] if r["rel_gap"] > 0]
    if len(pts) < 2:
        return math.nan
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])


def verdict_of(gaps, gap_target):
    """Converging iff the gap falls strictly over the last three doublings and ends within target."""
    if len(gaps) < 4:
        return "Inconclusive"
    last = gaps[-4:]
    falling = all(b < a for a, b in zip(last, last[1:]))
    if falling and last[-1] <= gap_target:
        return "Converging"
    if all(b > a for a, b in zip(last, last[1:])) and last[-1] > gap_target:
        return "Diverging"
    return "Inconclusive"


def _row(spec, lag, n, m, rate_fn, predicted, tol):
    rate = rate_eval(rate_fn, n, m)
    scale = rate * max(abs(predicted), 1e-300)
    r = rho(spec, lag, tol * scale)
    ratio = r.value / rate
    gap = abs(ratio - predicted) / abs(predicted) if predicted != 0 else abs(ratio)
    return {
        "n": n,
        "m": m,
        "rho": r.value,
        "rho_error": r.error_bound,
        "rate": rate,
        "ratio": ratio,
        "predicted": predicted,
        "rel_gap": gap,
    }


def convergence_report(spec, regime, seq, tol=1e-4, gap_target=None, threads=1, predicted=None):
    """Compare rho / rate with the regime's limiting constant along ``seq``.

    ``tol`` is relative: rho is computed to tol * rate * |constant| and the
    constant to tol * |constant|.  Rows whose truncation exceeds the term
    budget end the sequence and the verdict becomes Inconclusive.
    """
    if spec.is_override:
        raise ConstantEvaluationFailed("regimes are undefined for finite override filters")
    if not isinstance(regime, Regime):
        raise ValueError("convergence_report needs a covered regime")
    if gap_target is None:
        gap_target = 0.1 if regime.has_logs else 0.05
    if predicted is None:
        c0, _ = constant_eval(regime.constant, spec, 1e-6)
        predicted, perr = constant_eval(regime.constant, spec, tol * max(abs(c0), 1e-12))
    else:
        predicted, perr = float(predicted), 0.0
    lags = seq.lags()
    jobs = [(lag, n, m) for lag, (n, m) in zip(lags, seq.entries)]

    def run(job):
        lag, n, m = job
        try:
            return _row(spec, lag, n, m, regime.rate, predicted, tol)
        except (ToleranceUnreachable, UnboundedRegion) as exc:
            return exc

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            results = list(ex.map(run, jobs))
    else:
        results = []
        for job in jobs:
            res = run(job)
            results.append(res)
            if isinstance(res, Exception):
                break
    rows = []
    note = ""
    for res in results:
        if isinstance(res, Exception):
            note = f"stopped early: {res}"
            break
        rows.append(res)
    verdict = verdict_of([r["rel_gap"] for r in rows], gap_target)
    if note and verdict == "Diverging":
        verdict = "Inconclusive"
    return ConvergenceReport(
        rows=rows,
        verdict=verdict,
        trend=_trend(rows),
        predicted=predicted,
        predicted_error=perr,
        gap_target=gap_target,
        label=regime.label,
        note=note,
    )


def verify(spec, quadrant="pos", direction=None, n_values=DEFAULT_N, shape="diagonal", tol=1e-4,
           gap_target=None, threads=1):
    """Classify ``spec`` and run :func:`convergence_report`; returns (regime, report or None)."""
    regime = classify(spec.params, quadrant, direction)
    if not isinstance(regime, Regime):
        return regime, None
    seq = lag_sequence(spec.params, direction, n_values, quadrant, shape)
    return regime, convergence_report(spec, regime, seq, tol, gap_target, threads)


def adjudicate_case6b(spec, c, n_values=DEFAULT_N, tol=1e-4, band=0.15, ctol=1e-3):
    """Decide which closed form describes the ToConst(c) limit in the (mid, mid) regime.

    Candidates: the displayed (1/c) sum V(P, c^2 Q) and the analogue of the
    large-beta case, (1/c) sum V(P, c Q), both on the rate
    n^(-beta1(alpha-1)) m^-beta2.  Returns a dict naming the candidate whose
    final relative gap lies within ``band`` (or None) and both reports.
    The candidates differ by a factor of order c^(alpha-1), so they are
    evaluated only to the relative accuracy ``ctol``.
    """
    d = Direction.to_const(c)
    regime = classify(spec.params, "neg", d)
    if not isinstance(regime, Regime) or regime.case_id != 6 or regime.subcase != "b":
        raise ValueError(f"parameters do not fall in the (mid, mid) ToConst regime (got {regime.label})")
    sp = spec.transposed() if regime.constant.transpose else spec
    cc = regime.constant.arg("c")
    printed = _rough_cmixed(sp, cc, "c_squared", ctol)
    analogue = _rough_cmixed(sp, cc, "c_outside", ctol)
    seq = lag_sequence(spec.params, d, n_values, "neg")
    rep_p = convergence_report(spec, regime, seq, tol, band, predicted=printed)
    rep_a = convergence_report(spec, regime, seq, tol, band, predicted=analogue)
    gp = rep_p.rows[-1]["rel_gap"] if rep_p.rows else math.inf
    ga = rep_a.rows[-1]["rel_gap"] if rep_a.rows else math.inf
    winner = None
    if min(gp, ga) <= band:
        winner = "c_squared" if gp < ga else "c_outside"
    return {
        "regime": regime.label,
        "c": c,
        "printed": printed,
        "analogue": analogue,
        "final_ratio": rep_a.rows[-1]["ratio"] if rep_a.rows else None,
        "gap_printed": gp,
        "gap_analogue": ga,
        "matches": winner,
        "reports": (rep_p, rep_a),
    }


def _rough_cmixed(spec, c, form, rel):
    v = cmixed_value(spec, c, form, 0.1)[0]
    return cmixed_value(spec, c, form, rel * abs(v))[0]
