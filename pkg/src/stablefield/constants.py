"""Limiting constants of the decay regimes.

Every evaluator returns ``(value, error_bound)``.  Series parts carry
certified truncation brackets; quadrature parts carry Gauss-Kronrod error
estimates.
"""

import math

import numpy as np
from scipy import special

from .errors import (
    ConstantEvaluationFailed,
    LimitUnavailable,
    NonIntegrable,
    StableFieldError,
    ToleranceUnreachable,
    WeightLimitUnavailable,
)
from ._accel import max_terms
from .field import weight_limits
from .kernels import v_array, vseries_rows
from .quadrature import halfline
from .series import EPS, hurwitz, limit_series_1d, sgnpow, weight_series_2d
from .vkernel import THETAS, theta_constant


# --------------------------------------------------------------------------
# building blocks
# --------------------------------------------------------------------------


def signed_power_series(spec, tol=1e-10):
    """sum_{i,j} w(i,j)^<alpha-1> (1+i)^(-beta1(alpha-1)) (1+j)^(-beta2(alpha-1))."""
    a = spec.alpha
    s1, s2 = spec.beta1 * (a - 1.0), spec.beta2 * (a - 1.0)
    if a <= 1.0 or s1 <= 1.0 or s2 <= 1.0:
        raise NonIntegrable("signed power series needs alpha > 1 and beta_i > 1/(alpha-1)")
    v, err, _ = weight_series_2d(spec.weights, s1, s2, p=a - 1.0, tol=tol)
    return float(v), float(err)


def beta_integral_1d(p, q, tol=1e-12):
    """int_0^inf u^-p (1+u)^-q du = B(1-p, p+q-1), by quadrature with a closed-form check."""
    if not (p < 1.0 and p + q > 1.0):
        raise NonIntegrable(f"u^-{p} (1+u)^-{q} is not integrable on (0, inf)")
    f = lambda u: u**-p * (1.0 + u) ** -q
    v, err = halfline(f, p, p + q, 0.1 * tol, rtol=1e-15)
    closed = float(special.beta(1.0 - p, p + q - 1.0))
    return v, max(err, abs(v - closed))


def _check_2d(kind, alpha, beta1, beta2):
    a = alpha
    for b in (beta1, beta2):
        if b * a <= 1.0:
            raise NonIntegrable("beta*alpha must exceed 1 for integrability at infinity")
        if b * (a - 1.0) >= 1.0:
            raise NonIntegrable("beta*(alpha-1) must stay below 1 for integrability at 0")
    if kind == "negneg" and 1.0 / beta1 + 1.0 / beta2 <= a:
        raise NonIntegrable("joint singularity at the origin needs 1/beta1 + 1/beta2 > alpha")


def v_integral_2d(kind, alpha, beta1, beta2, tol=1e-8):
    """Improper double integrals of V over (0, inf)^2.

    ``kind="pospos"``: V(t^-b1 s^-b2, (t+1)^-b1 (s+1)^-b2) dt ds;
    ``kind="negneg"``: V((1+u)^-b1 v^-b2, u^-b1 (1+v)^-b2) du dv.

    The inner integral is split at the curve where the two arguments of V
    cross, so each piece has a single power-law behaviour at its ends.
    """
    kind = str(kind).lower().replace("_", "")
    if kind not in ("pospos", "negneg"):
        raise ValueError("kind must be 'pospos' or 'negneg'")
    a, b1, b2 = float(alpha), float(beta1), float(beta2)
    _check_2d(kind, a, b1, b2)
    rtol_in = 1e-3 * tol
    p_in = b1 * (a - 1.0)
    q_in = b1 * a

    if kind == "pospos":

        def inner(s):
            x0 = s**-b2
            y0 = (s + 1.0) ** -b2
            f = lambda t: v_array(t**-b1 * x0, (t + 1.0) ** -b1 * y0, a)
            # x = y where ((t+1)/t)^b1 = ((s+1)/s)^b2
            ratio = ((s + 1.0) / s) ** (b2 / b1)
            tstar = 1.0 / (ratio - 1.0) if ratio > 1.0 else math.inf
            return halfline(f, p_in, q_in, 1e-300, breaks=(tstar,), rtol=rtol_in)[0]

        p_out = b2 * (a - 1.0)
    else:

        def inner(v):
            x0 = v**-b2
            y0 = (1.0 + v) ** -b2
            f = lambda u: v_array((1.0 + u) ** -b1 * x0, u**-b1 * y0, a)
            ratio = ((1.0 + v) / v) ** (b2 / b1)
            ustar = 1.0 / (ratio - 1.0) if ratio > 1.0 else math.inf
            return halfline(f, p_in, q_in, 1e-300, breaks=(ustar,), rtol=rtol_in)[0]

        p_out = b2 * (a - min(1.0, 1.0 / b1))
    q_out = b2 * a
    g = lambda s: np.array([inner(float(x)) for x in np.atleast_1d(s)])
    v, err = halfline(g, p_out, q_out, 0.5 * tol, rtol=0.0)
    return v, err + 2 * rtol_in * abs(v)


# --------------------------------------------------------------------------
# weight-limit series
# --------------------------------------------------------------------------


def _limit_fn(spec, axis):
    w = spec.weights

    def f(idx):
        try:
            return w.row_limit(idx) if axis == "row" else w.col_limit(idx)
        except LimitUnavailable:
            idx = np.atleast_1d(idx)
            try:
                return np.array([weight_limits(spec, axis, int(k)) for k in idx])
            except LimitUnavailable as exc:
                raise WeightLimitUnavailable(str(exc)) from None

    return f


def _hull(spec, axis):
    hs = spec.weights.hull_start
    if hs is None:
        return None
    return hs[0] if axis == "row" else hs[1]


def limit_series(spec, axis, power, s, tol=1e-12, absolute=False, shift=0.0):
    """sum_k f(w_lim(k)) (1+k+shift)^-s over row limits w(k, inf) or column limits w(inf, k)."""
    if spec.weights.kind == "constant":
        z = hurwitz(s, 1.0 + shift)
        return z, 1e-15 * z
    return limit_series_1d(
        _limit_fn(spec, axis),
        s,
        p=power,
        tol=tol,
        hull_start=_hull(spec, axis),
        cap=spec.weights.upper,
        absolute=absolute,
        shift=shift,
    )


def _product(x, ex, y, ey):
    return x * y, abs(x) * ey + abs(y) * ex + ex * ey + 2 * EPS * abs(x * y)


def v_power_integral(beta, alpha, tol=1e-12):
    """K = int_0^inf V(s^-beta, 1) ds, so that int V(v^-beta, Q) dv = K Q^<alpha - 1/beta>."""
    if beta <= 1.0 or beta * (alpha - 1.0) >= 1.0:
        raise NonIntegrable("V(s^-beta, 1) is integrable only for 1 < beta < 1/(alpha-1)")
    f = lambda s: v_array(s**-beta, 1.0, alpha)
    return halfline(f, beta * (alpha - 1.0), beta, 0.1 * tol, breaks=(1.0,), rtol=1e-14)


# --------------------------------------------------------------------------
# mixed series sum_{i,j} V(lam P_j, mu Q_i)
# --------------------------------------------------------------------------


def _far_tail(spec, axis, power, s, start, tol):
    """sum_{k >= start} lim(k)^power (1+k)^-s, summed from ``start`` to avoid cancellation."""
    if spec.weights.kind == "constant":
        z = hurwitz(s, 1.0 + start)
        return z, 1e-15 * z
    f = _limit_fn(spec, axis)
    h = _hull(spec, axis)
    return limit_series_1d(
        lambda k: f(np.asarray(k) + start),
        s,
        p=power,
        tol=tol,
        hull_start=None if h is None else max(0, h - start),
        cap=spec.weights.upper,
        shift=float(start),
    )


def _taylor_bracket(lead, T1, T3, T5, d, g, h):
    """Bracket of sum over a tail of V(x, y) = lead * (x + g x^3/y^2 + [0, h x^5/y^4])."""
    base = lead * (T1 + g * T3 / d**2)
    extra = lead * h * T5 / d**4
    lo = math.fsum(np.minimum(base, base + extra).tolist())
    hi = math.fsum(np.maximum(base, base + extra).tolist())
    return lo, hi


def cmixed_series(spec, lam, mu, tol=1e-8, ratio=0.1, max_cells=None):
    """sum_{i,j} V(lam w(inf,j)(1+j)^-b2, mu w(i,inf)(1+i)^-b1) with a certified bracket.

    Row i < I is summed explicitly up to the column where lam P_j <= r mu Q_i;
    beyond it (and symmetrically for rows i >= I on the first J* columns)
    the kernel is expanded as x sgn(y)|y|^(alpha-1) (1 + (x/y)^2)^((alpha-2)/2)
    and the factor bracketed by its second-order Taylor polynomial.  The far
    corner uses the separable theta-bound.  Limits must be positive.
    """
    a = spec.alpha
    b1, b2 = spec.beta1, spec.beta2
    if b1 <= 1.0 or b2 <= 1.0:
        raise NonIntegrable("mixed series needs beta1, beta2 > 1")
    if 1.0 / b1 + 1.0 / b2 >= a:
        raise NonIntegrable("mixed series corner needs 1/beta1 + 1/beta2 < alpha")
    w = spec.weights
    e_lim, d_lim = w.upper, w.lower
    P = _limit_fn(spec, "col")
    Q = _limit_fn(spec, "row")
    g = 0.5 * a - 1.0
    h = 0.5 * g * (g - 1.0)
    ks = (1, 3, 5)
    st = 1e-3 * tol

    if max_cells is None:
        max_cells = float(max_terms())
    I = 64
    r = ratio
    while True:
        ii = np.arange(I)
        Qi = mu * np.asarray(Q(ii), dtype=float) * (1.0 + ii) ** -b1
        Ji = np.ceil((lam * e_lim / (r * Qi)) ** (1.0 / b2)).astype(np.int64)
        Jstar = (r * lam * d_lim / (mu * e_lim * (1.0 + I) ** -b1)) ** (1.0 / b2) - 1.0
        Jstar = max(int(math.floor(Jstar)), 0)
        ncol = max(int(Ji.max()), Jstar)
        if ncol * float(I) > max_cells:
            raise ToleranceUnreachable(
                f"mixed series needs more than {max_cells:.3g} explicit terms for tol={tol:g}"
            )
        jj = np.arange(ncol)
        Pj = lam * np.asarray(P(jj), dtype=float) * (1.0 + jj) ** -b2
        rows = vseries_rows(Pj, Qi, Ji, a)
        explicit = math.fsum(rows.tolist())
        scale = float(np.abs(rows).sum())

        # column tails sum_{j >= J_i} (lam P_j)^k
        far_c = [_far_tail(spec, "col", k, k * b2, ncol, st) for k in ks]
        T = []
        for n, k in enumerate(ks):
            rev = np.concatenate([np.cumsum((Pj**k)[::-1])[::-1], [0.0]])
            T.append(rev[Ji] + lam**k * far_c[n][0])
        ec = [lam**k * far_c[n][1] for n, k in enumerate(ks)]
        yp = sgnpow(Qi, a - 1.0)
        rlo, rhi = _taylor_bracket(yp, T[0], T[1], T[2], Qi, g, h)
        tail_err = float(np.sum(np.abs(yp) * (ec[0] + abs(g) * ec[1] / Qi**2 + h * ec[2] / Qi**4)))

        # rows i >= I on columns j < J*
        far_r = [_far_tail(spec, "row", k, k * b1, I, st) for k in ks]
        Pc = Pj[:Jstar]
        xp = sgnpow(Pc, a - 1.0)
        R = [mu**k * far_r[n][0] for n, k in enumerate(ks)]
        clo, chi = _taylor_bracket(xp, R[0], R[1], R[2], Pc, g, h) if Jstar else (0.0, 0.0)
        if Jstar:
            er = [mu**k * far_r[n][1] for n, k in enumerate(ks)]
            tail_err += float(np.sum(np.abs(xp) * (er[0] + abs(g) * er[1] / Pc**2 + h * er[2] / Pc**4)))

        corner = _corner_bound(a, b1, b2, lam * e_lim, mu * e_lim, I, Jstar)
        taylor = 0.5 * ((rhi - rlo) + (chi - clo))
        err = taylor + corner + tail_err + 4 * EPS * scale
        if err <= tol:
            return explicit + 0.5 * (rlo + rhi + clo + chi), err
        # spend effort where the bracket is widest
        if taylor > corner:
            r *= 0.5
        else:
            I *= 2


def _corner_bound(a, b1, b2, ex, ey, I, J):
    """sum_{i >= I, j >= J} |V(x_j, y_i)| with |x_j| <= ex (1+j)^-b2, |y_i| <= ey (1+i)^-b1."""
    best = math.inf
    for t in THETAS:
        u = 1.0 + t * (a - 2.0)
        v = a - u
        if b2 * u <= 1.0 or b1 * v <= 1.0:
            continue
        val = theta_constant(t, a) * ex**u * ey**v * hurwitz(b2 * u, 1.0 + J) * hurwitz(b1 * v, 1.0 + I)
        best = min(best, float(val))
    if not math.isfinite(best):
        # fall back to a finer theta scan inside the admissible window
        for u in np.linspace(1.0 / b2, a - 1.0 / b1, 34)[1:-1]:
            t = (1.0 - u) / (2.0 - a) if a < 2.0 else 0.5
            if not 0.0 <= t <= 1.0:
                continue
            v = a - u
            val = theta_constant(t, a) * ex**u * ey**v * hurwitz(b2 * u, 1.0 + J) * hurwitz(b1 * v, 1.0 + I)
            best = min(best, float(val))
    return best


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------


def _check_frame(desc, spec):
    p = spec.params
    if not (
        math.isclose(p.alpha, desc.alpha, rel_tol=1e-12)
        and math.isclose(p.beta1, desc.beta1, rel_tol=1e-12)
        and math.isclose(p.beta2, desc.beta2, rel_tol=1e-12)
    ):
        raise ConstantEvaluationFailed("constant descriptor does not match the filter parameters")


def constant_eval(desc, spec, tol=1e-8):
    """Evaluate a regime's limiting constant for ``spec``; returns (value, error_bound)."""
    v, err = _constant_eval(desc, spec, tol)
    return float(v), float(err)


def _constant_eval(desc, spec, tol):
    if spec.is_override:
        raise ConstantEvaluationFailed("limiting constants are undefined for finite override filters")
    _check_frame(desc, spec)
    if desc.transpose:
        spec = spec.transposed()
    a, b1, b2 = spec.alpha, spec.beta1, spec.beta2
    r = desc.recipe
    try:
        if r == "UnitConstant":
            return 1.0, 0.0
        if r == "SignedPowerSeries":
            return signed_power_series(spec, tol)
        if r == "VIntegral2DPos":
            return v_integral_2d("pospos", a, b1, b2, tol)
        if r == "VIntegral2DNeg":
            return v_integral_2d("negneg", a, b1, b2, tol)
        if r == "Beta1DOnly":
            return beta_integral_1d(desc.arg("p"), desc.arg("q"), tol)
        if r == "SeriesTimesBeta1D":
            B, eb = beta_integral_1d(desc.arg("p"), desc.arg("q"), 0.1 * tol)
            S, es = limit_series(spec, "row", desc.arg("power"), desc.arg("s"), 0.1 * tol / max(B, 1.0))
            return _product(S, es, B, eb)
        if r == "ColSeries":
            return limit_series(spec, "col", desc.arg("power"), desc.arg("s"), tol)
        if r == "RowSeries":
            return limit_series(spec, "row", desc.arg("power"), desc.arg("s"), tol)
        if r == "DoubleWeightSeries":
            R, er = limit_series(spec, "row", desc.arg("pi"), desc.arg("si"), 0.01 * tol)
            C, ec = limit_series(spec, "col", desc.arg("pj"), desc.arg("sj"), 0.01 * tol)
            return _product(R, er, C, ec)
        if r == "SeriesVIntegralMix":
            axis = desc.arg("axis")
            if axis == "row":
                K, ek = v_power_integral(b2, a, 0.1 * tol)
                pw = a - 1.0 / b2
                S, es = limit_series(spec, "row", pw, b1 * pw, 0.1 * tol / max(K, 1.0))
            else:
                K, ek = v_power_integral(b1, a, 0.1 * tol)
                pw = a - 1.0 / b1
                S, es = limit_series(spec, "col", pw, b2 * pw, 0.1 * tol / max(K, 1.0))
            return _product(K, ek, S, es)
        if r == "CMixedSeries":
            return cmixed_value(spec, desc.arg("c"), desc.arg("form"), tol)
    except (NonIntegrable, ToleranceUnreachable, WeightLimitUnavailable):
        raise
    except StableFieldError as exc:
        raise ConstantEvaluationFailed(str(exc)) from exc
    raise ConstantEvaluationFailed(f"unknown recipe {r!r}")


CMIXED_FORMS = {
    # prefactor, scale on the column argument, scale on the row argument
    "c_outside": lambda c: (1.0 / c, 1.0, c),
    "c_inside": lambda c: (c, 1.0 / c, 1.0),
    "c_squared": lambda c: (1.0 / c, 1.0, c * c),
}


def cmixed_value(spec, c, form, tol=1e-8):
    """pref * sum V(lam w(inf,j)(1+j)^-b2, mu w(i,inf)(1+i)^-b1) for the printed c-forms."""
    if form not in CMIXED_FORMS:
        raise ConstantEvaluationFailed(f"unknown mixed-series form {form!r}")
    pref, lam, mu = CMIXED_FORMS[form](float(c))
    v, e = cmixed_series(spec, lam, mu, tol / abs(pref))
    return pref * v, abs(pref) * e
