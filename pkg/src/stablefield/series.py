"""Power series with certified truncation brackets.

Tails of sum (1+i)**-s are closed-form Hurwitz zeta values; weighted tails are
bracketed using the monotone-hull property of the weight families (see
:class:`stablefield.field.WeightField`).
"""

import math

import numpy as np
from scipy import special

from ._accel import max_terms
from .errors import ToleranceUnreachable, UnboundedRegion

EPS = np.finfo(float).eps
_CHUNK = 1 << 20


def hurwitz(s, q):
    """sum_{i>=0} (i + q)**-s for s > 1, q > 0."""
    if s <= 1.0:
        raise UnboundedRegion(f"series with exponent {s} <= 1 diverges")
    return float(special.zeta(s, q))


def power_tail(N, s):
    """sum_{i>=N} (1+i)**-s."""
    return hurwitz(s, N + 1.0)


def pair_sum(i0, i1, a, b, p, q):
    """sum_{i0 <= i < i1} (1+i+a)**-p (1+i+b)**-q, summed explicitly."""
    total = 0.0
    for c0 in range(int(i0), int(i1), _CHUNK):
        i = np.arange(c0, min(c0 + _CHUNK, int(i1)), dtype=float) + 1.0
        total += math.fsum(((i + a) ** -p * (i + b) ** -q).tolist())
    return total


def pair_tail(I, a, b, p, q, window=None):
    """Upper bound on sum_{i>=I} (1+i+a)**-p (1+i+b)**-q, with a, b >= 0.

    An explicit window absorbs the region where the two shifts differ a lot;
    beyond it the ratio (1+i+hi)/(1+i+lo) sits in [1, r] and the sum is
    compared with a single Hurwitz zeta.
    """
    s = p + q
    if s <= 1.0:
        raise UnboundedRegion(f"tail with total exponent {s} <= 1 diverges")
    lo, hi = (a, b) if a <= b else (b, a)
    e_hi = q if b >= a else p
    if window is None:
        window = int(min(max(8 * (hi - lo), 64), 1 << 20))
    head = pair_sum(I, I + window, a, b, p, q) if window > 0 else 0.0
    I2 = I + window
    r = (1.0 + I2 + hi) / (1.0 + I2 + lo)
    C = max(1.0, r ** -e_hi)
    return head + C * hurwitz(s, 1.0 + I2 + lo)


def sgnpow(x, p):
    """|x|**p * sign(x)."""
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.abs(x) ** p


def _f(x, p, absolute):
    return np.abs(x) ** p if absolute else sgnpow(x, p)


# --------------------------------------------------------------------------
# 1-D weighted series
# --------------------------------------------------------------------------


def limit_series_1d(limit, s, p=1.0, tol=1e-10, hull_start=0, cap=None, absolute=False, shift=0.0):
    """sum_i f(g(i)) (1+i+shift)**-s with f = signed (or absolute) p-th power.

    ``limit`` is a vectorised row/column limit g with g(i) -> 1 monotonically
    for i >= ``hull_start``; ``None`` means g == 1.  When ``hull_start`` is
    None only ``cap`` (|g| <= cap) is known and the tail is bracketed by
    +-cap**p.  Returns (value, error_bound).
    """
    if s <= 1.0:
        raise UnboundedRegion(f"series with exponent {s} <= 1 diverges")
    if limit is None:
        return hurwitz(s, 1.0 + shift), 1e-15 * hurwitz(s, 1.0 + shift)
    budget = max_terms()
    N = max(1024, 0 if hull_start is None else int(hull_start))
    head = 0.0
    head_abs = 0.0
    done = 0
    while True:
        if N > done:
            for c0 in range(done, N, _CHUNK):
                i = np.arange(c0, min(c0 + _CHUNK, N))
                t = _f(limit(i), p, absolute) * (1.0 + i + shift) ** -s
                head += math.fsum(t.tolist())
                head_abs += float(np.abs(t).sum())
            done = N
        z = hurwitz(s, 1.0 + N + shift)
        if hull_start is None:
            lo, hi = -(cap**p), cap**p
            if absolute:
                lo = 0.0
        else:
            fN = float(_f(limit(N), p, absolute))
            lo, hi = min(fN, 1.0), max(fN, 1.0)
        mid = 0.5 * (lo + hi) * z
        width = 0.5 * (hi - lo) * z
        err = width + 4 * EPS * (head_abs + abs(mid)) + 1e-15 * abs(mid)
        if err <= tol:
            return head + mid, err
        if 4 * N > budget:
            raise ToleranceUnreachable(
                f"1-D series needs more than {budget} terms for tol={tol:g}"
            )
        N *= 4


# --------------------------------------------------------------------------
# 2-D weighted series
# --------------------------------------------------------------------------


def weight_series_2d(weights, s1, s2, p=1.0, tol=1e-10, absolute=False, offset=(0, 0)):
    """sum_{i,j} f(w(i+a, j+b)) (1+i+a)**-s1 (1+j+b)**-s2, f the signed/absolute power.

    ``offset=(a, b)`` shifts the summation origin.  Returns
    (value, error_bound, terms_used).
    """
    if s1 <= 1.0 or s2 <= 1.0:
        raise UnboundedRegion("double series exponents must exceed 1")
    a, b = int(offset[0]), int(offset[1])
    if weights.kind == "constant":
        v = hurwitz(s1, 1.0 + a) * hurwitz(s2, 1.0 + b)
        return v, 1e-15 * v, 0
    budget = max_terms()
    hs = weights.hull_start
    I0, J0 = (0, 0) if hs is None else hs
    I = max(64, I0 - a)
    J = max(64, J0 - b)
    acc = _BoxAccumulator(weights, s1, s2, p, absolute, a, b)
    while True:
        acc.extend(I, J)
        lo, hi, wI, wJ = _tail_bracket(weights, I, J, s1, s2, p, absolute, a, b)
        mid = 0.5 * (lo + hi)
        err = 0.5 * (hi - lo) + 4 * EPS * (acc.abs_total + abs(mid)) + 1e-15 * abs(mid)
        if err <= tol:
            return acc.total + mid, err, I * J
        if wI >= wJ:
            I *= 2
        else:
            J *= 2
        if I * J > budget:
            raise ToleranceUnreachable(
                f"double series needs more than {budget} terms for tol={tol:g}"
            )


class _BoxAccumulator:
    def __init__(self, weights, s1, s2, p, absolute, a=0, b=0):
        self.w = weights
        self.s1, self.s2, self.p, self.absolute = s1, s2, p, absolute
        self.a, self.b = a, b
        self.I = 0
        self.J = 0
        self.parts = []
        self.abs_total = 0.0

    def _add(self, i0, i1, j0, j1):
        if i1 <= i0 or j1 <= j0:
            return
        a, b = self.a, self.b
        step = max(1, _CHUNK // max(1, j1 - j0))
        for u in range(i0, i1, step):
            v = min(u + step, i1)
            W = self.w.block(u + a, v + a, j0 + b, j1 + b)
            r = (1.0 + a + np.arange(u, v, dtype=float)) ** -self.s1
            c = (1.0 + b + np.arange(j0, j1, dtype=float)) ** -self.s2
            t = _f(W, self.p, self.absolute) * np.outer(r, c)
            self.parts.append(math.fsum(t.sum(axis=1).tolist()))
            self.abs_total += float(np.abs(t).sum())

    def extend(self, I, J):
        if self.I == 0:
            self._add(0, I, 0, J)
        else:
            self._add(self.I, I, 0, self.J)
            self._add(0, I, self.J, J)
        self.I, self.J = max(I, self.I), max(J, self.J)

    @property
    def total(self):
        return math.fsum(self.parts)


def _tail_bracket(weights, I, J, s1, s2, p, absolute, a=0, b=0):
    """Bracket of the complement of [0,I) x [0,J) (shifted by (a, b)) and per-axis widths."""
    zi = hurwitz(s1, I + a + 1.0)
    zj = hurwitz(s2, J + b + 1.0)
    ri = (1.0 + a + np.arange(I, dtype=float)) ** -s1
    cj = (1.0 + b + np.arange(J, dtype=float)) ** -s2
    if weights.hull_start is None:
        e = weights.upper**p
        lo_f = 0.0 if absolute else -e
        hi_f = e
        full = zi * (cj.sum() + zj) + ri.sum() * zj
        return lo_f * full, hi_f * full, (hi_f - lo_f) * zi, (hi_f - lo_f) * zj
    j = np.arange(J) + b
    i = np.arange(I) + a
    Ia, Jb = I + a, J + b
    # i >= I, j < J: between w(I, j) and w(inf, j)
    a1 = _f(weights.eval(Ia, j), p, absolute)
    b1 = _f(weights.col_limit(j), p, absolute)
    lo1 = zi * float(np.dot(np.minimum(a1, b1), cj))
    hi1 = zi * float(np.dot(np.maximum(a1, b1), cj))
    # i < I, j >= J
    a2 = _f(weights.eval(i, Jb), p, absolute)
    b2 = _f(weights.row_limit(i), p, absolute)
    lo2 = zj * float(np.dot(np.minimum(a2, b2), ri))
    hi2 = zj * float(np.dot(np.maximum(a2, b2), ri))
    # corner
    corners = _f(
        np.array(
            [
                float(weights.eval(Ia, Jb)),
                float(weights.row_limit(Ia)),
                float(weights.col_limit(Jb)),
                1.0,
            ]
        ),
        p,
        absolute,
    )
    lo3 = zi * zj * corners.min()
    hi3 = zi * zj * corners.max()
    wI = (hi1 - lo1) + 0.5 * (hi3 - lo3)
    wJ = (hi2 - lo2) + 0.5 * (hi3 - lo3)
    return lo1 + lo2 + lo3, hi1 + hi2 + hi3, wI, wJ


def pair_series(a, b, p, q, tol=1e-12, order=8):
    """sum_{i>=0} (1+i+a)**-p (1+i+b)**-q with a two-sided tail bracket.

    Requires a, b >= 0 and p + q > 1.  Beyond N the factor
    (1 + D/(1+i+lo))**-e is expanded binomially to ``order`` terms; the
    Lagrange remainder is bounded by the next term.  Returns
    (value, error_bound).
    """
    s = p + q
    if s <= 1.0:
        raise UnboundedRegion(f"series with total exponent {s} <= 1 diverges")
    lo, hi = (a, b) if a <= b else (b, a)
    e = q if b >= a else p
    D = float(hi - lo)
    K = max(int(order), int(math.ceil(abs(e))) + 1)
    coef = [1.0]
    for k in range(1, K + 1):
        coef.append(coef[-1] * (-e - k + 1) / k)
    budget = max_terms()
    N = int(max(4096, 16 * D))
    head = 0.0
    done = 0
    while True:
        if N > done:
            head += pair_sum(done, N, a, b, p, q)
            done = N
        t0 = 1.0 + N + lo
        tail = math.fsum(coef[k] * D**k * hurwitz(s + k, t0) for k in range(K))
        rem = abs(coef[K]) * D**K * hurwitz(s + K, t0)
        err = rem + 4 * EPS * (head + abs(tail)) + 1e-15 * abs(tail)
        if err <= tol:
            return head + tail, err
        if 4 * N > budget:
            raise ToleranceUnreachable(f"1-D series needs more than {budget} terms for tol={tol:g}")
        N *= 4
