"""Spectral covariance, spectral masses and the exact joint ch.f. of (X_0, X_k).

For a lag k with negative/positive parts k-, k+ (componentwise), every
innovation site contributes to the pair (X_0, X_k) through the coefficient
pair (c[j+k-], c[j+k+]) with j in Z+^2, or through a single coefficient on one
of the two edge sets {p in Z+^2 : not p >= k-} and {p : not p >= k+}.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._accel import max_terms
from .errors import DegenerateMarginal, InvalidSpec, ToleranceUnreachable
from .kernels import cf_rows, mass_rows, merge, v_rows
from .series import EPS, hurwitz, pair_series, weight_series_2d
from .vkernel import TailMajorant

_BLOCK = 1 << 21


@dataclass(frozen=True)
class Lag:
    k1: int
    k2: int

    @classmethod
    def of(cls, k):
        if isinstance(k, Lag):
            return k
        if isinstance(k, str):
            parts = k.replace(" ", "").split(",")
            if len(parts) != 2:
                raise InvalidSpec(f"lag must look like 'k1,k2', got {k!r}")
            return cls(int(parts[0]), int(parts[1]))
        k1, k2 = k
        return cls(int(k1), int(k2))

    @property
    def kminus(self):
        return (max(-self.k1, 0), max(-self.k2, 0))

    @property
    def kplus(self):
        return (max(self.k1, 0), max(self.k2, 0))


@dataclass(frozen=True)
class CovResult:
    value: float
    error_bound: float
    terms_used: int

    def to_json(self):
        return {"value": self.value, "error_bound": self.error_bound, "terms_used": self.terms_used}


@dataclass(frozen=True)
class SpectralMasses:
    mass_s1sq: float
    mass_s2sq: float
    total_mass: float
    err_s1sq: float
    err_s2sq: float
    err_total: float

    def to_json(self):
        return {
            "mass_s1sq": self.mass_s1sq,
            "mass_s2sq": self.mass_s2sq,
            "total_mass": self.total_mass,
            "err_s1sq": self.err_s1sq,
            "err_s2sq": self.err_s2sq,
            "err_total": self.err_total,
        }


# --------------------------------------------------------------------------
# box sums
# --------------------------------------------------------------------------


def _pair_blocks(spec, km, kp, I, J):
    """Yield (X, Y) row blocks of c[j+k-], c[j+k+] over [0, I) x [0, J)."""
    step = max(1, _BLOCK // max(J, 1))
    for i0 in range(0, I, step):
        i1 = min(i0 + step, I)
        X = spec.block(i0 + km[0], i1 + km[0], km[1], J + km[1])
        Y = spec.block(i0 + kp[0], i1 + kp[0], kp[1], J + kp[1])
        yield X, Y


def _v_box(spec, km, kp, I, J, use_numba=None):
    rows = []
    abs_rows = []
    for X, Y in _pair_blocks(spec, km, kp, I, J):
        s, a = v_rows(X, Y, spec.alpha, use_numba)
        rows.append(s)
        abs_rows.append(a)
    if not rows:
        return 0.0, 0.0
    return merge(np.concatenate(rows)), float(np.concatenate(abs_rows).sum())


def _choose_box(maj, tol, start=(32, 32)):
    I, J = start
    budget = max_terms()
    b = maj.bound(I, J)
    while b > tol:
        cand = [(maj.bound(2 * I, J), 2 * I, J), (maj.bound(I, 2 * J), I, 2 * J)]
        cand.sort(key=lambda t: (t[0], t[1] * t[2]))
        b, I, J = cand[0]
        if I * J > budget:
            raise ToleranceUnreachable(
                f"truncation box {I}x{J} exceeds the term budget {budget} "
                f"(tail bound {b:.3g} > tol {tol:.3g}); raise STABLEFIELD_MAX_TERMS or loosen tol"
            )
    return I, J, b


# --------------------------------------------------------------------------
# spectral covariance
# --------------------------------------------------------------------------


def rho(spec, k, tol=1e-10, use_numba=None):
    """Spectral covariance sum_{j in Z+^2} V(c[j+k-], c[j+k+]) with certified error."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    lag = Lag.of(k)
    km, kp = lag.kminus, lag.kplus
    if spec.is_override:
        return _rho_override(spec, km, kp, use_numba)
    if spec.alpha == 2.0 and spec.weights.separable_terms() is not None:
        return _rho_separable(spec, km, kp, tol)
    maj = TailMajorant(spec, km, kp)
    I, J, tail = _choose_box(maj, 0.5 * tol)
    value, abs_total = _v_box(spec, km, kp, I, J, use_numba)
    err = tail + 4 * EPS * abs_total
    if err > tol:
        raise ToleranceUnreachable(f"rounding floor {err:.3g} exceeds tol {tol:.3g}")
    return CovResult(value, err, I * J)


def _override_extent(spec, km, kp):
    S1, S2 = spec.support
    if S1 == 0:
        raise InvalidSpec("override filter has empty support")
    I = max(0, S1 - max(km[0], kp[0]))
    J = max(0, S2 - max(km[1], kp[1]))
    return I, J


def _rho_override(spec, km, kp, use_numba=None):
    I, J = _override_extent(spec, km, kp)
    if I == 0 or J == 0:
        return CovResult(0.0, 0.0, 0)
    value, abs_total = _v_box(spec, km, kp, I, J, use_numba)
    return CovResult(value, 4 * EPS * abs_total, I * J)


def _rho_separable(spec, km, kp, tol):
    # alpha = 2: V(x, y) = x y and the weights split into power products
    terms = spec.weights.separable_terms()
    b1, b2 = spec.beta1, spec.beta2
    tol1 = max(tol * 1e-3, 1e-300)
    for _ in range(6):
        pieces = []
        for c, ei, ej in terms:
            for c2, fi, fj in terms:
                x, ex = pair_series(km[0], kp[0], b1 + ei, b1 + fi, tol1)
                y, ey = pair_series(km[1], kp[1], b2 + ej, b2 + fj, tol1)
                coef = c * c2
                pieces.append((coef * x * y, abs(coef) * (abs(x) * ey + abs(y) * ex + ex * ey)))
        value = math.fsum(p[0] for p in pieces)
        err = math.fsum(p[1] for p in pieces) + 4 * EPS * sum(abs(p[0]) for p in pieces)
        if err <= tol:
            return CovResult(value, err, 0)
        tol1 *= max(1e-6, 0.5 * tol / err)
    raise ToleranceUnreachable(f"separable sum could not reach tol={tol:g}")


# --------------------------------------------------------------------------
# spectral masses
# --------------------------------------------------------------------------


class _AlphaTails:
    """Bounds on sum |c[j+a]|^alpha over complements of [0,I) x [0,J)."""

    def __init__(self, spec, shift):
        self.spec = spec
        self.a = shift
        al = spec.alpha
        self.s1 = spec.beta1 * al
        self.s2 = spec.beta2 * al
        self.e = spec.weights.upper**al
        self.f1 = hurwitz(self.s1, 1.0 + shift[0])
        self.f2 = hurwitz(self.s2, 1.0 + shift[1])

    def bound(self, I, J):
        t1 = hurwitz(self.s1, 1.0 + I + self.a[0])
        t2 = hurwitz(self.s2, 1.0 + J + self.a[1])
        return self.e * (t1 * self.f2 + max(self.f1 - t1, 0.0) * t2)


def _mass_box(spec, km, kp, tol, w=(1.0, 1.0)):
    """Box (I, J) whose complement carries at most tol of w1 sum |x|^a + w2 sum |y|^a, plus the two tails."""
    tm = _AlphaTails(spec, km)
    tp = _AlphaTails(spec, kp)
    w1, w2 = w
    I = J = 32
    budget = max_terms()
    while True:
        bm, bp = tm.bound(I, J), tp.bound(I, J)
        if w1 * bm + w2 * bp <= tol:
            return I, J, bm, bp
        c1 = w1 * tm.bound(2 * I, J) + w2 * tp.bound(2 * I, J)
        c2 = w1 * tm.bound(I, 2 * J) + w2 * tp.bound(I, 2 * J)
        if c1 <= c2:
            I *= 2
        else:
            J *= 2
        if I * J > budget:
            raise ToleranceUnreachable(
                f"mass truncation box {I}x{J} exceeds the term budget {budget}"
            )


def _edge_sum(spec, shift, tol):
    """sum of |c_p|^alpha over p in Z+^2 with not (p >= shift)."""
    if shift == (0, 0):
        return 0.0, 0.0
    al = spec.alpha
    if spec.is_override:
        S1, S2 = spec.support
        t = np.abs(spec.override) ** al
        t[shift[0] :, shift[1] :] = 0.0
        v = math.fsum(t.ravel().tolist())
        return v, 4 * EPS * v
    from .field import alpha_norm

    A, ea = alpha_norm(spec, 0.25 * tol)
    T, et, _ = weight_series_2d(
        spec.weights, spec.beta1 * al, spec.beta2 * al, p=al, tol=0.25 * tol, absolute=True, offset=shift
    )
    return A - T, ea + et + 4 * EPS * A


def spectral_masses(spec, k, tol=1e-10, use_numba=None):
    """Masses of s1^2, s2^2 and 1 under the spectral measure of (X_0, X_k)."""
    lag = Lag.of(k)
    km, kp = lag.kminus, lag.kplus
    if spec.is_override:
        S1, S2 = spec.support
        if S1 == 0:
            raise InvalidSpec("override filter has empty support")
        I, J, bm, bp = S1, S2, 0.0, 0.0
    else:
        I, J, bm, bp = _mass_box(spec, km, kp, 0.5 * tol)
    acc = []
    for X, Y in _pair_blocks(spec, km, kp, I, J):
        acc.append(mass_rows(X, Y, spec.alpha, use_numba))
    M = np.concatenate(acc, axis=0) if acc else np.zeros((0, 3))
    q = [merge(M[:, c]) for c in range(3)]
    rnd = [4 * EPS * abs(v) for v in q]
    em, eem = _edge_sum(spec, km, 0.25 * tol)
    ep, eep = _edge_sum(spec, kp, 0.25 * tol)
    return SpectralMasses(
        mass_s1sq=em + q[0],
        mass_s2sq=ep + q[1],
        total_mass=em + ep + q[2],
        err_s1sq=eem + bm + rnd[0],
        err_s2sq=eep + bp + rnd[1],
        err_total=eem + eep + bm + bp + rnd[2],
    )


def scc(spec, k, tol=1e-10, use_numba=None):
    """Spectral correlation coefficient rho / sqrt(mass_s1sq * mass_s2sq), clipped to [-1, 1]."""
    r = rho(spec, k, tol, use_numba)
    m = spectral_masses(spec, k, tol, use_numba)
    if m.mass_s1sq <= m.err_s1sq or m.mass_s2sq <= m.err_s2sq:
        raise DegenerateMarginal("a marginal spectral mass vanishes")
    v = r.value / math.sqrt(m.mass_s1sq * m.mass_s2sq)
    return float(min(1.0, max(-1.0, v)))


# --------------------------------------------------------------------------
# exact characteristic function
# --------------------------------------------------------------------------


def exact_cf(spec, k, thetas, tol=1e-8, use_numba=None):
    """Joint ch.f. E exp(i(t1 X_0 + t2 X_k)) on a grid of (t1, t2).

    ``tol`` bounds the absolute error of the exponent at every grid point.
    Returns (values, error_bounds) as arrays.
    """
    lag = Lag.of(k)
    km, kp = lag.kminus, lag.kplus
    th = np.atleast_2d(np.asarray(thetas, dtype=float))
    al = spec.alpha
    a1 = np.abs(th[:, 0]) ** al
    a2 = np.abs(th[:, 1]) ** al
    # the dropped tail lies in [0, cst (a1 bm + a2 bp)]; its midpoint is added
    cst = 2.0 ** max(0.0, al - 1.0)
    if spec.is_override:
        S1, S2 = spec.support
        if S1 == 0:
            raise InvalidSpec("override filter has empty support")
        I, J, bm, bp = S1, S2, 0.0, 0.0
    else:
        w = (cst * float(a1.max(initial=0.0)), cst * float(a2.max(initial=0.0)))
        if w[0] + w[1] == 0.0:
            I, J, bm, bp = 1, 1, 0.0, 0.0
        else:
            I, J, bm, bp = _mass_box(spec, km, kp, tol, w)
    acc = []
    for X, Y in _pair_blocks(spec, km, kp, I, J):
        acc.append(cf_rows(X, Y, th, al, use_numba))
    C = np.concatenate(acc, axis=0) if acc else np.zeros((0, th.shape[0]))
    inner = np.array([merge(C[:, g]) for g in range(th.shape[0])])
    etol = 0.25 * tol / max(1.0, float(np.max(np.maximum(a1, a2), initial=0.0)))
    em, eem = _edge_sum(spec, km, etol)
    ep, eep = _edge_sum(spec, kp, etol)
    half = 0.5 * cst * (a1 * bm + a2 * bp)
    expo = a1 * em + a2 * ep + inner + half
    err_expo = a1 * eem + a2 * eep + half + 4 * EPS * np.abs(expo)
    val = np.exp(-expo)
    return val, val * np.expm1(err_expo)
