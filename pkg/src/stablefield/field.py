"""Filter model: stability parameters, weight families and the coefficient field

    c[i, j] = w(i, j) * (1 + i)**-beta1 * (1 + j)**-beta2,   i, j >= 0.
"""

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import (
    AlphaOutOfRange,
    BetaTooSmall,
    InvalidSpec,
    InvalidWeights,
    LimitUnavailable,
)

_MARGIN = 1e-9


# --------------------------------------------------------------------------
# parameters
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class StabilityParams:
    """alpha in (0, 2] and filter decay exponents beta1, beta2 > 1/alpha.

    The ``*_q`` fields hold exact rationals when the caller supplied them;
    the regime classifier uses them to decide boundary equalities exactly.
    """

    alpha: float
    beta1: float
    beta2: float
    alpha_q: Optional[Fraction] = field(default=None, compare=False, repr=False)
    beta1_q: Optional[Fraction] = field(default=None, compare=False, repr=False)
    beta2_q: Optional[Fraction] = field(default=None, compare=False, repr=False)

    @property
    def exact(self):
        return None not in (self.alpha_q, self.beta1_q, self.beta2_q)

    def transposed(self):
        return StabilityParams(
            self.alpha, self.beta2, self.beta1, self.alpha_q, self.beta2_q, self.beta1_q
        )


def _as_exact(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int) and not isinstance(x, bool):
        return Fraction(x)
    return None


def validate_params(alpha, beta1, beta2):
    """Check ``0 < alpha <= 2`` and ``beta_k > 1/alpha``.

    Ints and :class:`fractions.Fraction` inputs are kept exactly alongside the
    float values.
    """
    vals = []
    for name, v in (("alpha", alpha), ("beta1", beta1), ("beta2", beta2)):
        try:
            f = float(v)
        except (TypeError, ValueError):
            raise InvalidSpec(f"{name} must be a real number, got {v!r}") from None
        if not math.isfinite(f):
            raise InvalidSpec(f"{name} must be finite, got {v!r}")
        vals.append(f)
    a, b1, b2 = vals
    aq, b1q, b2q = _as_exact(alpha), _as_exact(beta1), _as_exact(beta2)

    if aq is not None:
        bad_alpha = not (0 < aq <= 2)
    else:
        bad_alpha = not (0.0 < a <= 2.0)
    if bad_alpha:
        raise AlphaOutOfRange(f"alpha={alpha!r} is outside (0, 2]")

    for name, b, bq in (("beta1", b1, b1q), ("beta2", b2, b2q)):
        if aq is not None and bq is not None:
            ok = bq * aq > 1
        else:
            ok = b * a > 1.0
        if not ok:
            raise BetaTooSmall(name, b, 1.0 / a)
    return StabilityParams(a, b1, b2, aq, b1q, b2q)


# --------------------------------------------------------------------------
# weight families
# --------------------------------------------------------------------------


class WeightField:
    """Weights w(i, j) with limits w(i, inf), w(inf, j) and bounds d < |w| < e.

    ``hull_start`` is ``(I0, J0)`` when the family guarantees, for I >= I0,
    that w(i, j) with i >= I lies between w(I, j) and w(inf, j) (and the
    analogous statement in j, and that row/column limits lie between their
    value at I and 1).  Tail brackets rely on it; ``None`` means only the
    crude d/e bounds are available.
    """

    kind = "abstract"
    lower = 1.0
    upper = 1.0
    hull_start = None

    def eval(self, i, j):
        raise NotImplementedError

    def row_limit(self, i):
        raise LimitUnavailable(f"{self.kind} weights provide no row limit rule")

    def col_limit(self, j):
        raise LimitUnavailable(f"{self.kind} weights provide no column limit rule")

    def block(self, i0, i1, j0, j1):
        i = np.arange(i0, i1)[:, None]
        j = np.arange(j0, j1)[None, :]
        return np.broadcast_to(self.eval(i, j), (i1 - i0, j1 - j0))

    def separable_terms(self):
        """``[(coef, ei, ej), ...]`` with w = sum coef (1+i)**-ei (1+j)**-ej, or None."""
        return None

    def transposed(self):
        return _TransposedWeights(self)

    def to_json(self):
        raise InvalidSpec(f"{self.kind} weights are not serialisable")


class ConstantWeights(WeightField):
    """w == 1."""

    kind = "constant"
    lower = 1.0 - _MARGIN
    upper = 1.0 + _MARGIN
    hull_start = (0, 0)

    def eval(self, i, j):
        i, j = np.broadcast_arrays(np.asarray(i), np.asarray(j))
        return np.ones(i.shape)

    def row_limit(self, i):
        return np.ones(np.shape(i)) if np.ndim(i) else 1.0

    def col_limit(self, j):
        return np.ones(np.shape(j)) if np.ndim(j) else 1.0

    def block(self, i0, i1, j0, j1):
        return None

    def separable_terms(self):
        return [(1.0, 0, 0)]

    def transposed(self):
        return self

    def to_json(self):
        return {"kind": "constant"}

    def __eq__(self, other):
        return isinstance(other, ConstantWeights)

    def __hash__(self):
        return hash("constant")


class RationalWeights(WeightField):
    """w(i, j) = 1 + a/(1+i) + b/(1+j) with |a|, |b| < 1.

    Monotone in each index, so limits and tail hulls are exact.  When
    1 + a + b <= 0 the weight changes sign in a finite corner; lattice zeros
    are rejected.
    """

    kind = "rational"
    hull_start = (0, 0)

    def __init__(self, a=0.0, b=0.0):
        a = float(a)
        b = float(b)
        if not (abs(a) < 1 and abs(b) < 1):
            raise InvalidWeights(f"rational weights need |a|, |b| < 1 (got a={a}, b={b})")
        self.a = a
        self.b = b
        hi = 1.0 + max(a, 0.0) + max(b, 0.0)
        lo = self._min_abs()
        if lo <= 0.0:
            raise InvalidWeights(f"rational weights a={a}, b={b} vanish on the lattice")
        self.lower = lo * (1.0 - _MARGIN)
        self.upper = hi * (1.0 + _MARGIN)

    def _min_abs(self):
        a, b = self.a, self.b
        corner = min(1.0 + a + b, 1.0 + a, 1.0 + b, 1.0)
        if corner > 0:
            return corner
        # outside a K x K box the weight stays above `outside`
        ra = 1.0 + min(a, 0.0)
        rb = 1.0 + min(b, 0.0)
        K = 2.0 * max(abs(a) / rb, abs(b) / ra) + 2
        if K > 4096:
            raise InvalidWeights(f"rational weights a={a}, b={b} come too close to zero")
        K = int(math.ceil(K))
        i = np.arange(K)[:, None]
        j = np.arange(K)[None, :]
        w = 1.0 + a / (1.0 + i) + b / (1.0 + j)
        inside = np.abs(w).min()
        outside = min(rb - abs(a) / (1.0 + K), ra - abs(b) / (1.0 + K))
        if np.any(np.abs(w) < 1e-12):
            return 0.0
        return float(min(inside, outside))

    def eval(self, i, j):
        i = np.asarray(i, dtype=float)
        j = np.asarray(j, dtype=float)
        return 1.0 + self.a / (1.0 + i) + self.b / (1.0 + j)

    def row_limit(self, i):
        return 1.0 + self.a / (1.0 + np.asarray(i, dtype=float))

    def col_limit(self, j):
        return 1.0 + self.b / (1.0 + np.asarray(j, dtype=float))

    def block(self, i0, i1, j0, j1):
        u = self.a / (1.0 + np.arange(i0, i1, dtype=float))
        v = self.b / (1.0 + np.arange(j0, j1, dtype=float))
        return 1.0 + u[:, None] + v[None, :]

    def separable_terms(self):
        terms = [(1.0, 0, 0)]
        if self.a:
            terms.append((self.a, 1, 0))
        if self.b:
            terms.append((self.b, 0, 1))
        return terms

    def transposed(self):
        return RationalWeights(self.b, self.a)

    def to_json(self):
        return {"kind": "rational", "a": self.a, "b": self.b}

    def __eq__(self, other):
        return isinstance(other, RationalWeights) and (self.a, self.b) == (other.a, other.b)

    def __hash__(self):
        return hash(("rational", self.a, self.b))


class TableWeights(WeightField):
    """Explicit T1 x T2 table with explicit limit rows.

    Outside the table the weight equals its limits exactly:
    w(i, j) = row_limits[i] for i < T1 <= j, col_limits[j] for j < T2 <= i,
    and 1 when both indices are past the table.
    """

    kind = "table"

    def __init__(self, table, row_limits, col_limits):
        t = np.array(table, dtype=float, ndmin=2)
        r = np.array(row_limits, dtype=float).ravel()
        c = np.array(col_limits, dtype=float).ravel()
        if t.ndim != 2 or r.shape[0] != t.shape[0] or c.shape[0] != t.shape[1]:
            raise InvalidWeights("table of shape (T1, T2) needs T1 row limits and T2 column limits")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(r)) and np.all(np.isfinite(c))):
            raise InvalidWeights("table weights must be finite")
        if np.any(t == 0.0):
            raise InvalidWeights("table weights must be nonzero")
        if np.any(r <= 0.0) or np.any(c <= 0.0):
            raise InvalidWeights("row and column limits must be positive")
        self.table = t
        self.row_limits = r
        self.col_limits = c
        allv = np.abs(np.concatenate([t.ravel(), r, c, [1.0]]))
        self.lower = float(allv.min()) * (1.0 - _MARGIN)
        self.upper = float(allv.max()) * (1.0 + _MARGIN)
        self.hull_start = t.shape

    @property
    def shape(self):
        return self.table.shape

    def eval(self, i, j):
        i, j = np.broadcast_arrays(np.asarray(i, dtype=np.int64), np.asarray(j, dtype=np.int64))
        T1, T2 = self.table.shape
        out = np.ones(i.shape)
        ii = np.minimum(i, T1 - 1)
        jj = np.minimum(j, T2 - 1)
        in_i = i < T1
        in_j = j < T2
        both = in_i & in_j
        out[both] = self.table[ii[both], jj[both]]
        m = in_i & ~in_j
        out[m] = self.row_limits[ii[m]]
        m = ~in_i & in_j
        out[m] = self.col_limits[jj[m]]
        return out

    def row_limit(self, i):
        i = np.asarray(i, dtype=np.int64)
        T1 = self.table.shape[0]
        out = np.where(i < T1, self.row_limits[np.minimum(i, T1 - 1)], 1.0)
        return out if out.ndim else float(out)

    def col_limit(self, j):
        j = np.asarray(j, dtype=np.int64)
        T2 = self.table.shape[1]
        out = np.where(j < T2, self.col_limits[np.minimum(j, T2 - 1)], 1.0)
        return out if out.ndim else float(out)

    def transposed(self):
        return TableWeights(self.table.T, self.col_limits, self.row_limits)

    def to_json(self):
        return {
            "kind": "table",
            "table": self.table.tolist(),
            "row_limits": self.row_limits.tolist(),
            "col_limits": self.col_limits.tolist(),
        }

    def __eq__(self, other):
        return (
            isinstance(other, TableWeights)
            and np.array_equal(self.table, other.table)
            and np.array_equal(self.row_limits, other.row_limits)
            and np.array_equal(self.col_limits, other.col_limits)
        )

    def __hash__(self):
        return hash(("table", self.table.tobytes()))


class CallableWeights(WeightField):
    """Arbitrary vectorised ``fn(i, j)`` with declared bounds.

    Limits are taken from ``row_limit_fn``/``col_limit_fn`` when given,
    otherwise extrapolated numerically (see :func:`weight_limits`).
    """

    kind = "callable"

    def __init__(self, fn, lower, upper, row_limit_fn=None, col_limit_fn=None):
        if not (0 < lower <= upper):
            raise InvalidWeights("need 0 < lower <= upper")
        self.fn = fn
        self.lower = float(lower)
        self.upper = float(upper)
        self._row = row_limit_fn
        self._col = col_limit_fn

    def eval(self, i, j):
        i, j = np.broadcast_arrays(np.asarray(i, dtype=float), np.asarray(j, dtype=float))
        return np.asarray(self.fn(i, j), dtype=float) * np.ones(i.shape)

    def row_limit(self, i):
        if self._row is None:
            raise LimitUnavailable("no row limit rule")
        return self._row(i)

    def col_limit(self, j):
        if self._col is None:
            raise LimitUnavailable("no column limit rule")
        return self._col(j)

    def transposed(self):
        return CallableWeights(
            lambda i, j: self.fn(j, i), self.lower, self.upper, self._col, self._row
        )


class _TransposedWeights(WeightField):
    def __init__(self, base):
        self.base = base
        self.kind = base.kind
        self.lower = base.lower
        self.upper = base.upper
        hs = base.hull_start
        self.hull_start = None if hs is None else (hs[1], hs[0])

    def eval(self, i, j):
        return self.base.eval(j, i)

    def row_limit(self, i):
        return self.base.col_limit(i)

    def col_limit(self, j):
        return self.base.row_limit(j)

    def transposed(self):
        return self.base


def weights_from_json(doc):
    kind = doc.get("kind", "constant")
    if kind == "constant":
        return ConstantWeights()
    if kind == "rational":
        return RationalWeights(doc.get("a", 0.0), doc.get("b", 0.0))
    if kind == "table":
        return TableWeights(doc["table"], doc["row_limits"], doc["col_limits"])
    raise InvalidWeights(f"unknown weight kind {kind!r}")


def check_weight_bounds(weights, n=64, seed=0):
    """Spot-check the declared d < |w| < e on a random grid of lattice points."""
    rng = np.random.default_rng(seed)
    i = np.concatenate([np.arange(8), rng.integers(0, 10**6, n)])
    j = np.concatenate([np.arange(8), rng.integers(0, 10**6, n)])
    w = np.abs(weights.eval(i[:, None], j[None, :]))
    if np.any(w == 0):
        raise InvalidWeights("weight vanishes on the sample grid")
    if not (np.all(w > weights.lower) and np.all(w < weights.upper)):
        raise InvalidWeights("declared weight bounds d < |w| < e violated on the sample grid")


# --------------------------------------------------------------------------
# filter
# --------------------------------------------------------------------------


class FilterSpec:
    """Coefficient field of the linear random field.

    ``override`` replaces the parametric form with an explicit finite table
    (zero outside); such specs are for oracle testing and carry no regime.
    """

    def __init__(self, params, weights=None, override=None):
        self.params = params
        self.weights = ConstantWeights() if weights is None else weights
        if override is not None:
            override = np.array(override, dtype=float, ndmin=2)
            if override.ndim != 2 or not np.all(np.isfinite(override)):
                raise InvalidSpec("override must be a finite 2-D table")
            nz = np.nonzero(override)
            if nz[0].size:
                override = override[: nz[0].max() + 1, : nz[1].max() + 1].copy()
            else:
                override = np.zeros((0, 0))
            override.setflags(write=False)
        self.override = override

    # convenience constructors -------------------------------------------

    @classmethod
    def parametric(cls, alpha, beta1, beta2, weights=None):
        return cls(validate_params(alpha, beta1, beta2), weights)

    @classmethod
    def from_override(cls, alpha, table):
        """Finite filter; beta values are irrelevant and set to a valid placeholder."""
        a = float(alpha)
        if not (0 < a <= 2):
            raise AlphaOutOfRange(f"alpha={alpha!r} is outside (0, 2]")
        b = 1.0 / a + 1.0
        return cls(StabilityParams(a, b, b, _as_exact(alpha)), None, table)

    @classmethod
    def from_entries(cls, alpha, entries):
        """Finite filter from ``[(i, j, c), ...]``."""
        entries = list(entries)
        if not entries:
            return cls.from_override(alpha, np.zeros((0, 0)))
        S1 = max(int(e[0]) for e in entries) + 1
        S2 = max(int(e[1]) for e in entries) + 1
        t = np.zeros((S1, S2))
        for i, j, c in entries:
            if i < 0 or j < 0:
                raise InvalidSpec("override indices must be nonnegative")
            t[int(i), int(j)] += float(c)
        return cls.from_override(alpha, t)

    # properties -----------------------------------------------------------

    @property
    def alpha(self):
        return self.params.alpha

    @property
    def beta1(self):
        return self.params.beta1

    @property
    def beta2(self):
        return self.params.beta2

    @property
    def is_override(self):
        return self.override is not None

    @property
    def support(self):
        """(S1, S2): override coefficients vanish for i >= S1 or j >= S2."""
        if self.override is None:
            return None
        return self.override.shape

    # coefficients -----------------------------------------------------------

    def coefficients(self, i, j):
        """Vectorised c[i, j] (broadcasting)."""
        i, j = np.broadcast_arrays(np.asarray(i, dtype=np.int64), np.asarray(j, dtype=np.int64))
        if self.override is not None:
            S1, S2 = self.override.shape
            out = np.zeros(i.shape)
            m = (i < S1) & (j < S2) & (i >= 0) & (j >= 0)
            out[m] = self.override[i[m], j[m]]
            return out
        p = self.params
        base = (1.0 + i) ** -p.beta1 * (1.0 + j) ** -p.beta2
        return self.weights.eval(i, j) * base

    def block(self, i0, i1, j0, j1):
        """Dense c over [i0, i1) x [j0, j1)."""
        if self.override is not None:
            out = np.zeros((i1 - i0, j1 - j0))
            S1, S2 = self.override.shape
            a0, a1 = max(i0, 0), min(i1, S1)
            b0, b1 = max(j0, 0), min(j1, S2)
            if a0 < a1 and b0 < b1:
                out[a0 - i0 : a1 - i0, b0 - j0 : b1 - j0] = self.override[a0:a1, b0:b1]
            return out
        p = self.params
        r = (1.0 + np.arange(i0, i1, dtype=float)) ** -p.beta1
        s = (1.0 + np.arange(j0, j1, dtype=float)) ** -p.beta2
        c = np.outer(r, s)
        w = self.weights.block(i0, i1, j0, j1)
        if w is not None:
            c *= w
        return c

    def transposed(self):
        """Relabel i <-> j (beta1 <-> beta2, row <-> column weights)."""
        if self.override is not None:
            return FilterSpec(self.params.transposed(), None, self.override.T.copy())
        return FilterSpec(self.params.transposed(), self.weights.transposed())

    # serialisation ------------------------------------------------------

    def to_json(self):
        doc = {
            "alpha": self.params.alpha,
            "beta1": self.params.beta1,
            "beta2": self.params.beta2,
            "weights": self.weights.to_json(),
        }
        if self.override is not None:
            S1, S2 = self.override.shape
            doc["override"] = [
                [i, j, float(self.override[i, j])]
                for i in range(S1)
                for j in range(S2)
                if self.override[i, j] != 0.0
            ]
        return doc

    @classmethod
    def from_json(cls, doc):
        if isinstance(doc, (str, bytes)):
            doc = json.loads(doc)
        if "alpha" not in doc:
            raise InvalidSpec("filter document needs 'alpha'")
        if doc.get("override") is not None:
            return cls.from_entries(doc["alpha"], doc["override"])
        params = validate_params(doc["alpha"], doc["beta1"], doc["beta2"])
        return cls(params, weights_from_json(doc.get("weights", {"kind": "constant"})))

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True)

    def __repr__(self):
        p = self.params
        tag = f"override{self.override.shape}" if self.is_override else self.weights.kind
        return f"FilterSpec(alpha={p.alpha}, beta1={p.beta1}, beta2={p.beta2}, {tag})"


def coefficient(spec, i, j):
    """c[i, j] of the filter (0 outside an override's support)."""
    if i < 0 or j < 0:
        raise ValueError("coefficient indices must be nonnegative")
    return float(spec.coefficients(i, j))


# --------------------------------------------------------------------------
# weight limits
# --------------------------------------------------------------------------


def weight_limits(spec, axis, index, tol=1e-9, max_doublings=20):
    """w(index, inf) for ``axis="row"`` or w(inf, index) for ``axis="col"``.

    Families with a closed-form rule answer exactly.  Otherwise the weight is
    sampled at 2**k along the free index and Aitken-extrapolated; if the last
    two extrapolants differ by more than ``tol`` (relative) the limit is
    declared unavailable.
    """
    axis = str(axis).lower()
    if axis not in ("row", "col"):
        raise ValueError("axis must be 'row' or 'col'")
    if index < 0:
        raise ValueError("index must be nonnegative")
    w = spec.weights
    try:
        return float(w.row_limit(index) if axis == "row" else w.col_limit(index))
    except LimitUnavailable:
        pass
    free = 2.0 ** np.arange(max_doublings + 1)
    fixed = np.full_like(free, float(index))
    vals = w.eval(fixed, free) if axis == "row" else w.eval(free, fixed)
    ext = _aitken(np.asarray(vals, dtype=float))
    if ext.size < 2:
        raise LimitUnavailable("not enough samples to extrapolate")
    last, prev = ext[-1], ext[-2]
    if not np.isfinite(last) or abs(last - prev) > tol * max(abs(last), 1e-300):
        raise LimitUnavailable(
            f"{axis} limit at index {index} did not stabilise "
            f"(last extrapolants {prev!r}, {last!r})"
        )
    return float(last)


def _aitken(x):
    d1 = x[1:-1] - x[:-2]
    d2 = x[2:] - 2 * x[1:-1] + x[:-2]
    out = x[2:].copy()
    nz = d2 != 0
    out[nz] = x[2:][nz] - (x[2:][nz] - x[1:-1][nz]) ** 2 / d2[nz]
    # geometric-error assumption breaks when d1 already vanishes
    out[(d1 == 0) & ~nz] = x[2:][(d1 == 0) & ~nz]
    return out


def alpha_norm(spec, tol=1e-10):
    """A = sum |c[i, j]|**alpha with a certified error bound.

    Returns (value, error_bound).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = spec.alpha
    if spec.is_override:
        t = np.abs(spec.override) ** a
        v = math.fsum(t.ravel().tolist())
        return v, float(4 * np.finfo(float).eps * v)
    from .series import weight_series_2d

    v, err, _ = weight_series_2d(
        spec.weights, spec.beta1 * a, spec.beta2 * a, p=a, tol=tol, absolute=True
    )
    return v, err
