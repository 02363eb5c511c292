"""Adaptive Gauss-Kronrod quadrature for power-law singular integrands on half-lines."""

import heapq
import math

import numpy as np

from .errors import NonIntegrable

# Kronrod 15-point nodes/weights with the embedded 7-point Gauss rule
_XK = np.array(
    [
        0.991455371120812639206854697526329,
        0.949107912342758524526189684047851,
        0.864864423359769072789712788640926,
        0.741531185599394439863864773280788,
        0.586087235467691130294144845693013,
        0.405845151377397166906606412076961,
        0.207784955007898467600689403773245,
        0.000000000000000000000000000000000,
    ]
)
_WK = np.array(
    [
        0.022935322010529224963732008058970,
        0.063092092629978553290700663189204,
        0.104790010322250183839876322541518,
        0.140653259715525918745189590510238,
        0.169004726639267902826583426598550,
        0.190350578064785409913256402421014,
        0.204432940075298892414161999234649,
        0.209482141084727828012999174891714,
    ]
)
_WG = np.array(
    [
        0.129484966168869693270611432679082,
        0.279705391489276667901467771423780,
        0.381830050505118944950369775488975,
        0.417959183673469387755102040816327,
    ]
)
_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
_WKF = np.concatenate([_WK[:-1], _WK[::-1]])
# gauss nodes are the odd-indexed kronrod nodes (1, 3, 5, 7 from each side)
_GIDX = np.array([1, 3, 5, 7, 9, 11, 13])
_WGF = np.concatenate([_WG[:-1], _WG[::-1]])


def _finite(y):
    # node values at under/overflowing abscissae carry no mass
    y = np.asarray(y, dtype=float)
    return np.where(np.isfinite(y), y, 0.0)


def gk15(f, a, b):
    """One G7/K15 panel on [a, b]: (kronrod value, |K - G|)."""
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    y = np.asarray(f(c + h * _NODES), dtype=float)
    k = h * float(np.dot(_WKF, y))
    g = h * float(np.dot(_WGF, y[_GIDX]))
    return k, abs(k - g)


def adaptive(f, a, b, tol, rtol=0.0, max_panels=20000):
    """Globally adaptive G7/K15 on [a, b] until the summed |K - G| <= max(tol, rtol*|I|).

    Returns (value, error_estimate).  ``f`` must accept numpy arrays.
    """
    if a == b:
        return 0.0, 0.0
    k, e = gk15(f, a, b)
    heap = [(-e, a, b, k)]
    total_err = e
    total = k
    n = 1
    while total_err > max(tol, rtol * abs(total)) and n < max_panels:
        ne, lo, hi, kv = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not (lo < mid < hi):
            heapq.heappush(heap, (ne, lo, hi, kv))
            break
        k1, e1 = gk15(f, lo, mid)
        k2, e2 = gk15(f, mid, hi)
        total_err += e1 + e2 + ne
        total += k1 + k2 - kv
        heapq.heappush(heap, (-e1, lo, mid, k1))
        heapq.heappush(heap, (-e2, mid, hi, k2))
        n += 1
    value = math.fsum(item[3] for item in heap)
    err = math.fsum(-item[0] for item in heap)
    return value, err


def left_singular(f, b, p, tol, rtol=0.0):
    """Integral over (0, b] of f with f(u) ~ u**-p at 0 (p < 1).

    Substitutes u = b z**(1/(1-p)), which removes the power singularity.
    """
    if p >= 1.0:
        raise NonIntegrable(f"endpoint exponent {p} >= 1 at the origin")
    p = max(p, 0.0)
    r = 1.0 / (1.0 - p)

    def g(z):
        u = b * z**r
        with np.errstate(all="ignore"):
            return _finite(f(u) * (b * r) * z ** (r - 1.0))

    return adaptive(g, 0.0, 1.0, tol, rtol)


def right_tail(f, b, q, tol, rtol=0.0):
    """Integral over [b, inf) of f with f(u) ~ u**-q at infinity (q > 1).

    Substitutes u = b z**(-1/(q-1)).
    """
    if q <= 1.0:
        raise NonIntegrable(f"decay exponent {q} <= 1 at infinity")
    r = 1.0 / (q - 1.0)

    def g(z):
        zz = np.maximum(z, 1e-300)
        with np.errstate(all="ignore"):
            u = b * zz**-r
            return _finite(f(u) * (b * r) * zz ** (-r - 1.0))

    return adaptive(g, 0.0, 1.0, tol, rtol)


def log_interval(f, a, b, tol, rtol=0.0):
    """Integral over [a, b] (0 < a < b) in the variable z = ln u."""
    la, lb = math.log(a), math.log(b)

    def g(z):
        u = np.exp(z)
        return f(u) * u

    return adaptive(g, la, lb, tol, rtol)


def halfline(f, p, q, tol, breaks=(), rtol=0.0):
    """Integral of f over (0, inf) where f ~ u**-p at 0 and u**-q at infinity.

    ``breaks`` are interior points where the integrand changes behaviour;
    the interval is always split at 1 as well.  Returns (value, error_estimate).
    """
    pts = sorted({float(x) for x in breaks if 0 < x < math.inf} | {1.0})
    n = len(pts) + 1
    t = tol / n
    parts = [left_singular(f, pts[0], p, t, rtol)]
    for a, b in zip(pts[:-1], pts[1:]):
        parts.append(log_interval(f, a, b, t, rtol))
    parts.append(right_tail(f, pts[-1], q, t, rtol))
    return math.fsum(v for v, _ in parts), math.fsum(e for _, e in parts)
