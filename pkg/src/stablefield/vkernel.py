"""The kernel V(x, y) = x y (x^2 + y^2)^((alpha-2)/2) and tail majorants built on it."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import UnboundedRegion
from .kernels import v_array
from .series import pair_sum, pair_tail

_BIG = 1e100
_SMALL = 1e-100

# theta grid for the separable bound |V| <= K_t |x|^(1+t(a-2)) |y|^(1+(1-t)(a-2))
THETAS = np.linspace(0.0, 1.0, 17)


@dataclass(frozen=True)
class VKernel:
    alpha: float

    def __call__(self, x, y):
        return v_eval(x, y, self.alpha)


def v_eval(x, y, alpha):
    """V(x, y); rescales by max(|x|, |y|) outside [1e-100, 1e100]."""
    x = float(x)
    y = float(y)
    s = max(abs(x), abs(y))
    if s == 0.0:
        return 0.0
    if _SMALL < s < _BIG:
        return x * y * (x * x + y * y) ** (0.5 * alpha - 1.0)
    xs = x / s
    ys = y / s
    return s**alpha * xs * ys * (xs * xs + ys * ys) ** (0.5 * alpha - 1.0)


def v_vec(x, y, alpha):
    """Vectorised :func:`v_eval`."""
    return v_array(x, y, alpha)


def bound_symmetric(x, y, alpha):
    """2^((alpha-2)/2) |x y|^(alpha/2); tight iff |x| = |y|."""
    h = 0.5 * alpha
    return 2.0 ** (h - 1.0) * np.abs(np.asarray(x, dtype=float)) ** h * np.abs(np.asarray(y, dtype=float)) ** h


def bound_directional(x, y, alpha):
    """|x|^(alpha-1) |y|.

    |V| / bound = (|x| / |(x, y)|)^(2-alpha) <= 1, so it holds for every alpha
    in (0, 2]; for alpha < 1 it blows up as x -> 0 and is useless for tails.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.abs(x) ** (alpha - 1.0) * np.abs(y)
    return np.where(y == 0, 0.0, out)


def theta_constant(theta, alpha):
    """K_t = (t^t (1-t)^(1-t))^((2-alpha)/2), with 0^0 = 1."""
    t = np.asarray(theta, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = np.where(t > 0, t * np.log(np.where(t > 0, t, 1.0)), 0.0) + np.where(
            t < 1, (1 - t) * np.log(np.where(t < 1, 1 - t, 1.0)), 0.0
        )
    return np.exp(ent * (1.0 - 0.5 * alpha))


def bound_theta(x, y, alpha, theta):
    """K_t |x|^(1+t(alpha-2)) |y|^(1+(1-t)(alpha-2))."""
    u = 1.0 + theta * (alpha - 2.0)
    v = 1.0 + (1.0 - theta) * (alpha - 2.0)
    x = np.abs(np.asarray(x, dtype=float))
    y = np.abs(np.asarray(y, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = theta_constant(theta, alpha) * x**u * y**v
    return np.where((x == 0) | (y == 0), 0.0, out)


# --------------------------------------------------------------------------
# majorants over the complement of a box
# --------------------------------------------------------------------------


class TailMajorant:
    """Certified bounds on sum |V(c[j+k-], c[j+k+])| over complements of boxes.

    Uses |c[i,j]| <= e (1+i)^-b1 (1+j)^-b2 (and >= d ... for negative
    exponents) together with the separable theta-bound, minimised over a grid
    of theta separately on each of the three pieces of the complement.
    """

    def __init__(self, spec, kminus, kplus, thetas=THETAS):
        self.spec = spec
        self.km = tuple(int(v) for v in kminus)
        self.kp = tuple(int(v) for v in kplus)
        a = spec.alpha
        self.alpha = a
        self.thetas = np.asarray(thetas, dtype=float)
        self.u = 1.0 + self.thetas * (a - 2.0)
        self.v = 1.0 + (1.0 - self.thetas) * (a - 2.0)
        w = spec.weights
        d, e = w.lower, w.upper
        mu = np.where(self.u >= 0, e**self.u, d**self.u)
        mv = np.where(self.v >= 0, e**self.v, d**self.v)
        self.const = theta_constant(self.thetas, a) * mu * mv
        b1, b2 = spec.beta1, spec.beta2
        if b1 * a <= 1.0 or b2 * a <= 1.0:
            raise UnboundedRegion("tail exponents do not exceed 1")
        self._cache = {}

    def _axis(self, axis, start, stop):
        """Per-theta sums over [start, stop) (stop=None means infinity) on one axis."""
        key = (axis, start, stop)
        if key in self._cache:
            return self._cache[key]
        beta = self.spec.beta1 if axis == 0 else self.spec.beta2
        a = self.km[axis]
        b = self.kp[axis]
        base = None
        lo = start
        if stop is not None and start == 0:
            prev = [k[2] for k in self._cache if k[0] == axis and k[1] == 0 and k[2] is not None and k[2] < stop]
            if prev:
                lo = max(prev)
                base = self._cache[(axis, 0, lo)]
        out = np.empty(self.thetas.size)
        for t in range(self.thetas.size):
            p = beta * self.u[t]
            q = beta * self.v[t]
            if stop is None:
                out[t] = pair_tail(start, a, b, p, q)
            else:
                out[t] = pair_sum(lo, stop, a, b, p, q)
        if base is not None:
            out += base
        self._cache[key] = out
        return out

    def pieces(self, I, J):
        """Bounds on (i >= I, j < J), (i < I, j >= J) and (i >= I, j >= J)."""
        if self.spec.is_override:
            return 0.0, 0.0, 0.0
        Ai = self._axis(0, I, None)
        Ah = self._axis(0, 0, I)
        Bj = self._axis(1, J, None)
        Bh = self._axis(1, 0, J)
        c = self.const
        return (
            float(np.min(c * Ai * Bh)),
            float(np.min(c * Ah * Bj)),
            float(np.min(c * Ai * Bj)),
        )

    def bound(self, I, J):
        return math.fsum(self.pieces(I, J))


def v_tail_majorant(spec, region, lag):
    """Upper bound on the sum of |V(c[j+k-], c[j+k+])| over j outside ``region``.

    ``region`` is the box size (I, J): the sum runs over the complement of
    [0, I) x [0, J).  ``lag`` is a :class:`stablefield.covariance.Lag` or a
    pair (k1, k2).
    """
    k1, k2 = (lag.k1, lag.k2) if hasattr(lag, "k1") else (int(lag[0]), int(lag[1]))
    km = (max(-k1, 0), max(-k2, 0))
    kp = (max(k1, 0), max(k2, 0))
    I, J = int(region[0]), int(region[1])
    if spec.is_override:
        S1, S2 = spec.support
        if I >= S1 - max(km[0], kp[0]) and J >= S2 - max(km[1], kp[1]):
            return 0.0
        # finite support: sum the complement explicitly
        tot = 0.0
        for (i0, i1, j0, j1) in ((I, S1, 0, S2), (0, min(I, S1), J, S2)):
            if i1 > i0 and j1 > j0:
                X = spec.block(i0 + km[0], i1 + km[0], j0 + km[1], j1 + km[1])
                Y = spec.block(i0 + kp[0], i1 + kp[0], j0 + kp[1], j1 + kp[1])
                tot += float(np.abs(v_array(X, Y, spec.alpha)).sum())
        return tot * (1 + 1e-12)
    return TailMajorant(spec, km, kp).bound(I, J)
