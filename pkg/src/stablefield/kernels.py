"""Hot inner loops: V-kernel block sums, direction binning and stable variates.

The summation kernels reduce one row of a block with Neumaier compensation and
return per-row results; callers merge rows with ``math.fsum`` in row order.
Row results do not depend on how rows are spread over threads, so the merged
value is identical for any worker count.

Each kernel exists twice: a numba version (``_nb_*``) and a numpy version
(``_np_*``).  The public names dispatch on :func:`stablefield._accel.backend`.
"""

import math

import numpy as np

from ._accel import HAS_NUMBA, njit, prange

_BIG = 1e100
_SMALL = 1e-100


# --------------------------------------------------------------------------
# numba versions
# --------------------------------------------------------------------------


@njit(cache=True, inline="always")
def _v_scalar(x, y, alpha):
    ax = abs(x)
    ay = abs(y)
    s = ax if ax > ay else ay
    if s == 0.0:
        return 0.0
    if _SMALL < s < _BIG:
        return x * y * (x * x + y * y) ** (0.5 * alpha - 1.0)
    xs = x / s
    ys = y / s
    return s**alpha * xs * ys * (xs * xs + ys * ys) ** (0.5 * alpha - 1.0)


@njit(cache=True)
def _nb_v_rows(X, Y, alpha):
    nrow, ncol = X.shape
    out = np.zeros(nrow)
    out_abs = np.zeros(nrow)
    for r in prange(nrow):
        s = 0.0
        comp = 0.0
        sa = 0.0
        for c in range(ncol):
            t = _v_scalar(X[r, c], Y[r, c], alpha)
            u = s + t
            if abs(s) >= abs(t):
                comp += (s - u) + t
            else:
                comp += (t - u) + s
            s = u
            sa += abs(t)
        out[r] = s + comp
        out_abs[r] = sa
    return out, out_abs


@njit(cache=True)
def _nb_mass_rows(X, Y, alpha):
    # columns: x^2 r^(a-2), y^2 r^(a-2), r^a with r = sqrt(x^2 + y^2)
    nrow, ncol = X.shape
    out = np.zeros((nrow, 3))
    for r in prange(nrow):
        acc = np.zeros(3)
        comp = np.zeros(3)
        for c in range(ncol):
            x = X[r, c]
            y = Y[r, c]
            ax = abs(x)
            ay = abs(y)
            s = ax if ax > ay else ay
            if s == 0.0:
                continue
            xs = ax / s
            ys = ay / s
            q = xs * xs + ys * ys
            sa = s**alpha
            g = q ** (0.5 * alpha - 1.0)
            terms = (sa * xs * xs * g, sa * ys * ys * g, sa * q * g)
            for k in range(3):
                t = terms[k]
                u = acc[k] + t
                if abs(acc[k]) >= abs(t):
                    comp[k] += (acc[k] - u) + t
                else:
                    comp[k] += (t - u) + acc[k]
                acc[k] = u
        for k in range(3):
            out[r, k] = acc[k] + comp[k]
    return out


@njit(cache=True)
def _nb_cf_rows(X, Y, theta, alpha):
    # sum_c |theta1 x + theta2 y|^alpha for every theta row
    nrow, ncol = X.shape
    ng = theta.shape[0]
    out = np.zeros((nrow, ng))
    for r in prange(nrow):
        for g in range(ng):
            t1 = theta[g, 0]
            t2 = theta[g, 1]
            s = 0.0
            comp = 0.0
            for c in range(ncol):
                z = abs(t1 * X[r, c] + t2 * Y[r, c])
                t = z**alpha if z > 0.0 else 0.0
                u = s + t
                if abs(s) >= abs(t):
                    comp += (s - u) + t
                else:
                    comp += (t - u) + s
                s = u
            out[r, g] = s + comp
    return out


@njit(cache=True)
def _nb_vseries_rows(P, Q, jlim, alpha):
    # row i: sum_{j < jlim[i]} V(P[j], Q[i])
    nrow = Q.shape[0]
    out = np.zeros(nrow)
    for i in prange(nrow):
        q = Q[i]
        s = 0.0
        comp = 0.0
        for j in range(jlim[i]):
            t = _v_scalar(P[j], q, alpha)
            u = s + t
            if abs(s) >= abs(t):
                comp += (s - u) + t
            else:
                comp += (t - u) + s
            s = u
        out[i] = s + comp
    return out


@njit(cache=True)
def _nb_bin_mass(X, Y, alpha, K, mass, sx, sy):
    # accumulate |v|^alpha and mass-weighted unit vectors per direction bin on [0, pi)
    for r in range(X.shape[0]):
        for c in range(X.shape[1]):
            x = X[r, c]
            y = Y[r, c]
            n = math.hypot(x, y)
            if n == 0.0:
                continue
            if y < 0.0 or (y == 0.0 and x < 0.0):
                x = -x
                y = -y
            phi = math.atan2(y, x)
            b = int(phi / math.pi * K)
            if b >= K:
                b = K - 1
            m = n**alpha
            mass[b] += m
            sx[b] += m * x / n
            sy[b] += m * y / n


@njit(cache=True)
def _nb_cms(V, W, alpha):
    # Chambers-Mallows-Stuck transform for symmetric stable variates
    out = np.empty(V.shape[0])
    ia = 1.0 / alpha
    for i in prange(V.shape[0]):
        v = V[i]
        out[i] = math.sin(alpha * v) / math.cos(v) ** ia * (math.cos((1.0 - alpha) * v) / W[i]) ** ((1.0 - alpha) * ia)
    return out


# --------------------------------------------------------------------------
# numpy versions
# --------------------------------------------------------------------------


def v_array(x, y, alpha):
    """Vectorised V(x, y) with the same rescaling rule as the compiled kernel."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    s = np.maximum(np.abs(x), np.abs(y))
    out = np.zeros(s.shape)
    nz = s > 0
    if not np.any(nz):
        return out
    with np.errstate(over="ignore", under="ignore"):
        sn = s[nz]
        xs = x[nz] / sn
        ys = y[nz] / sn
        out[nz] = sn**alpha * xs * ys * (xs * xs + ys * ys) ** (0.5 * alpha - 1.0)
    return out


def _np_v_rows(X, Y, alpha):
    V = v_array(X, Y, alpha)
    return V.sum(axis=1), np.abs(V).sum(axis=1)


def _np_mass_rows(X, Y, alpha):
    ax = np.abs(X)
    ay = np.abs(Y)
    s = np.maximum(ax, ay)
    nz = s > 0
    safe = np.where(nz, s, 1.0)
    xs = ax / safe
    ys = ay / safe
    q = np.where(nz, xs * xs + ys * ys, 1.0)
    g = np.where(nz, safe**alpha * q ** (0.5 * alpha - 1.0), 0.0)
    return np.stack(
        [(g * xs * xs).sum(axis=1), (g * ys * ys).sum(axis=1), (g * q).sum(axis=1)],
        axis=1,
    )


def _np_cf_rows(X, Y, theta, alpha):
    out = np.empty((X.shape[0], theta.shape[0]))
    for g, (t1, t2) in enumerate(theta):
        out[:, g] = (np.abs(t1 * X + t2 * Y) ** alpha).sum(axis=1)
    return out


def _np_vseries_rows(P, Q, jlim, alpha):
    out = np.empty(Q.shape[0])
    for i in range(Q.shape[0]):
        out[i] = v_array(P[: jlim[i]], Q[i], alpha).sum()
    return out


def _np_bin_mass(X, Y, alpha, K, mass, sx, sy):
    x = X.ravel()
    y = Y.ravel()
    n = np.hypot(x, y)
    keep = n > 0
    x, y, n = x[keep], y[keep], n[keep]
    flip = (y < 0) | ((y == 0) & (x < 0))
    x = np.where(flip, -x, x)
    y = np.where(flip, -y, y)
    b = np.minimum((np.arctan2(y, x) / np.pi * K).astype(np.int64), K - 1)
    m = n**alpha
    mass += np.bincount(b, m, K)
    sx += np.bincount(b, m * x / n, K)
    sy += np.bincount(b, m * y / n, K)


def _np_cms(V, W, alpha):
    return np.sin(alpha * V) / np.cos(V) ** (1.0 / alpha) * (np.cos((1.0 - alpha) * V) / W) ** ((1.0 - alpha) / alpha)


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------


def v_rows(X, Y, alpha, use_numba=None):
    """Per-row sums of V(X, Y) and of |V(X, Y)| over a 2-D block."""
    X = np.ascontiguousarray(X, dtype=float)
    Y = np.ascontiguousarray(Y, dtype=float)
    if _use(use_numba):
        return _nb_v_rows(X, Y, float(alpha))
    return _np_v_rows(X, Y, float(alpha))


def mass_rows(X, Y, alpha, use_numba=None):
    """Per-row spectral-mass sums (three columns, see module docstring)."""
    X = np.ascontiguousarray(X, dtype=float)
    Y = np.ascontiguousarray(Y, dtype=float)
    if _use(use_numba):
        return _nb_mass_rows(X, Y, float(alpha))
    return _np_mass_rows(X, Y, float(alpha))


def cf_rows(X, Y, theta, alpha, use_numba=None):
    X = np.ascontiguousarray(X, dtype=float)
    Y = np.ascontiguousarray(Y, dtype=float)
    theta = np.ascontiguousarray(np.atleast_2d(theta), dtype=float)
    if _use(use_numba):
        return _nb_cf_rows(X, Y, theta, float(alpha))
    return _np_cf_rows(X, Y, theta, float(alpha))


def vseries_rows(P, Q, jlim, alpha, use_numba=None):
    P = np.ascontiguousarray(P, dtype=float)
    Q = np.ascontiguousarray(Q, dtype=float)
    jlim = np.ascontiguousarray(np.minimum(jlim, P.shape[0]), dtype=np.int64)
    if _use(use_numba):
        return _nb_vseries_rows(P, Q, jlim, float(alpha))
    return _np_vseries_rows(P, Q, jlim, float(alpha))


def bin_mass(X, Y, alpha, mass, sx, sy, use_numba=None):
    """Add the alpha-masses of the vectors (X, Y) to direction bins on [0, pi), in place."""
    X = np.ascontiguousarray(X, dtype=float)
    Y = np.ascontiguousarray(Y, dtype=float)
    K = mass.shape[0]
    if _use(use_numba):
        _nb_bin_mass(X, Y, float(alpha), K, mass, sx, sy)
    else:
        _np_bin_mass(X, Y, float(alpha), K, mass, sx, sy)


def cms(V, W, alpha, use_numba=None):
    """Symmetric alpha-stable variates from V ~ U(-pi/2, pi/2) and W ~ Exp(1)."""
    V = np.ascontiguousarray(V, dtype=float)
    W = np.ascontiguousarray(W, dtype=float)
    if _use(use_numba):
        return _nb_cms(V, W, float(alpha))
    return _np_cms(V, W, float(alpha))


def _use(use_numba):
    if use_numba is None:
        return HAS_NUMBA
    return bool(use_numba) and HAS_NUMBA


def merge(rows):
    """Correctly rounded sum of row results, independent of thread layout."""
    return math.fsum(np.asarray(rows, dtype=float).ravel().tolist())
