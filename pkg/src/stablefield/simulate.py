"""Monte Carlo simulation of the pair (X_0, X_k) and empirical checks against the exact formulas.

With p in Z+^2 indexing innovations, X_0 = sum_p c[p - k+] e_p and
X_k = sum_p c[p - k-] e_p (c vanishes at negative indices).  Sites in the
explicit box get their own innovation.  Further sites, up to the window, are
merged by direction: all sites whose coefficient vectors (a, b) fall in one
angular bin are replaced by a single variable M^(1/alpha) u e_bin, with M the
bin's alpha-mass and u its mass-weighted mean direction.  This preserves the
law exactly up to the bin width.  Sites beyond the window are dropped.  Both
approximations are bounded in terms of the ch.f. exponent per unit
|theta|^alpha, and that bound must not exceed ``sim_tol``.
"""

import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .covariance import Lag, exact_cf, spectral_masses
from .errors import InvalidSpec, TooFewExceedances, TruncationTooCoarse
from .field import alpha_norm
from .kernels import bin_mass, cms
from .series import hurwitz

MAGIC = b"SASP"
VERSION = 1
_HEADER = struct.Struct("<4sIQ")

_FINE_BINS = 8192
_MAX_WINDOW = 1 << 14
_ROWS = 256


# --------------------------------------------------------------------------
# stable variates
# --------------------------------------------------------------------------


def _sas(alpha, rng, n):
    if alpha == 2.0:
        # ch.f. exp(-t^2): N(0, 2)
        return rng.normal(0.0, math.sqrt(2.0), n)
    V = rng.uniform(-0.5 * math.pi, 0.5 * math.pi, n)
    if alpha == 1.0:
        return np.tan(V)
    W = rng.standard_exponential(n)
    return cms(V, W, alpha)


def _rng(seed, key):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def sample_sas(alpha, scale=1.0, seed=0, count=1):
    """i.i.d. symmetric alpha-stable draws with ch.f. exp(-|scale t|^alpha)."""
    if not 0.0 < alpha <= 2.0:
        raise ValueError("alpha must lie in (0, 2]")
    if scale <= 0:
        raise ValueError("scale must be positive")
    return scale * _sas(float(alpha), _rng(seed, ()), int(count))


# --------------------------------------------------------------------------
# configuration and plan
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    """``box``: sites simulated individually; ``window``: sites merged by direction
    (None picks the smallest power of two meeting ``sim_tol``)."""

    spec: object
    seed: int = 0
    sample_count: int = 100_000
    box: tuple = (8, 8)
    window: tuple = None
    sim_tol: float = 2e-3
    chunk: int = 1 << 16
    threads: int = 1


@dataclass
class _Plan:
    a: np.ndarray
    b: np.ndarray
    keys: list
    sim_err: float
    info: dict = field(default_factory=dict)


def _padded(spec, i0, i1, j0, j1):
    """c over [i0, i1) x [j0, j1) with zeros at negative indices."""
    out = np.zeros((i1 - i0, j1 - j0))
    a0, b0 = max(i0, 0), max(j0, 0)
    if a0 < i1 and b0 < j1:
        out[a0 - i0 :, b0 - j0 :] = spec.block(a0, i1, b0, j1)
    return out


def _zz(t):
    return 2 * t if t >= 0 else -2 * t - 1


def _dropped_mass(spec, kp, km, W):
    """Bound on sum over p outside [0, W1) x [0, W2) of |c[p-k+]|^a + |c[p-k-]|^a."""
    a = spec.alpha
    s1, s2 = spec.beta1 * a, spec.beta2 * a
    z1, z2 = hurwitz(s1, 1.0), hurwitz(s2, 1.0)
    e = spec.weights.upper ** a
    tot = 0.0
    for k in (kp, km):
        A, B = W[0] - k[0], W[1] - k[1]
        if A <= 0 or B <= 0:
            return math.inf
        tot += e * (z1 * z2 - (z1 - hurwitz(s1, 1.0 + A)) * (z2 - hurwitz(s2, 1.0 + B)))
    return tot


def _lip(alpha, d):
    # sup over |theta| = 1 of ||<theta,u>|^a - |<theta,v>|^a| for |u - v| <= d
    return d**alpha if alpha <= 1.0 else alpha * d


def _explicit(spec, kp, km, I, J):
    A = _padded(spec, -kp[0], I - kp[0], -kp[1], J - kp[1])
    B = _padded(spec, -km[0], I - km[0], -km[1], J - km[1])
    p1, p2 = np.nonzero((A != 0) | (B != 0))
    keys = [(0, _zz(kp[0] - i), _zz(kp[1] - j)) for i, j in zip(p1.tolist(), p2.tolist())]
    return A[p1, p2], B[p1, p2], keys


def build_plan(config, k):
    """Coefficients and RNG keys of the variables that make up (X_0, X_k)."""
    spec = config.spec
    lag = Lag.of(k)
    kp, km = lag.kplus, lag.kminus
    if spec.is_override:
        S1, S2 = spec.support
        I = S1 + max(kp[0], km[0])
        J = S2 + max(kp[1], km[1])
        a, b, keys = _explicit(spec, kp, km, I, J)
        return _Plan(a, b, keys, 0.0, {"explicit": len(keys), "bins": 0, "window": None})
    alpha = spec.alpha
    I, J = (int(v) for v in config.box)
    tol = float(config.sim_tol)
    if config.window is not None:
        W = (int(config.window[0]), int(config.window[1]))
        if W[0] < I or W[1] < J:
            raise InvalidSpec("window must contain the explicit box")
        R = _dropped_mass(spec, kp, km, W)
    else:
        n = max(64, 2 * I, 2 * J)
        while True:
            W = (n, n)
            R = _dropped_mass(spec, kp, km, W)
            if R <= 0.5 * tol or n >= _MAX_WINDOW:
                break
            n *= 2
    if R > tol:
        raise TruncationTooCoarse(
            f"alpha-mass beyond window {W} is up to {R:.3g} > sim_tol {tol:.3g}"
        )
    a, b, keys = _explicit(spec, kp, km, I, J)

    # bin every site of the window outside the explicit box
    mass = np.zeros(_FINE_BINS)
    sx = np.zeros(_FINE_BINS)
    sy = np.zeros(_FINE_BINS)
    for r0 in range(0, W[0], _ROWS):
        r1 = min(r0 + _ROWS, W[0])
        X = _padded(spec, r0 - kp[0], r1 - kp[0], -kp[1], W[1] - kp[1])
        Y = _padded(spec, r0 - km[0], r1 - km[0], -km[1], W[1] - km[1])
        if r0 < I:
            X = X.copy()
            Y = Y.copy()
            X[: min(I, r1) - r0, :J] = 0.0
            Y[: min(I, r1) - r0, :J] = 0.0
        bin_mass(X, Y, alpha, mass, sx, sy)
    M = math.fsum(mass.tolist())
    K = 16
    while K < _FINE_BINS and M * _lip(alpha, math.pi / K) > tol - R:
        K *= 2
    err = R + M * _lip(alpha, math.pi / K)
    if err > tol:
        raise TruncationTooCoarse(
            f"direction binning error {err:.3g} > sim_tol {tol:.3g}; enlarge the explicit box"
        )
    g = _FINE_BINS // K
    mk = mass.reshape(K, g).sum(axis=1)
    xk = sx.reshape(K, g).sum(axis=1)
    yk = sy.reshape(K, g).sum(axis=1)
    nz = np.nonzero(mk > 0)[0]
    norm = np.hypot(xk[nz], yk[nz])
    scale = mk[nz] ** (1.0 / alpha) / norm
    a = np.concatenate([a, scale * xk[nz]])
    b = np.concatenate([b, scale * yk[nz]])
    keys = keys + [(1, K, int(i)) for i in nz]
    info = {"explicit": len(keys) - nz.size, "bins": int(nz.size), "window": list(W), "binned_mass": M}
    return _Plan(a, b, keys, err, info)


# --------------------------------------------------------------------------
# pairs
# --------------------------------------------------------------------------


@dataclass
class PairSample:
    pairs: np.ndarray
    lag: tuple
    alpha: float
    sim_err: float = 0.0
    info: dict = field(default_factory=dict)

    def __len__(self):
        return self.pairs.shape[0]

    def to_bytes(self):
        data = np.ascontiguousarray(self.pairs, dtype="<f8")
        return _HEADER.pack(MAGIC, VERSION, data.shape[0]) + data.tobytes()

    @staticmethod
    def read_pairs(buf):
        """Decode a SASP byte string into an (n, 2) float64 array."""
        magic, version, n = _HEADER.unpack_from(buf, 0)
        if magic != MAGIC:
            raise InvalidSpec("not a SASP pair stream")
        if version != VERSION:
            raise InvalidSpec(f"unsupported SASP version {version}")
        arr = np.frombuffer(buf, dtype="<f8", count=2 * n, offset=_HEADER.size)
        return arr.reshape(n, 2).astype(float)

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())


def _chunk(plan, alpha, seed, c, n):
    x = np.zeros(n)
    y = np.zeros(n)
    for a, b, key in zip(plan.a, plan.b, plan.keys):
        e = _sas(alpha, _rng(seed, key + (c,)), n)
        if a:
            x += a * e
        if b:
            y += b * e
    return np.column_stack([x, y])


def simulate_pairs(config, k):
    """Draw ``config.sample_count`` copies of (X_0, X_k).

    Innovations are keyed by (seed, lattice site, chunk), so the output does
    not depend on ``config.threads``.
    """
    plan = build_plan(config, k)
    alpha = config.spec.alpha
    N = int(config.sample_count)
    step = int(config.chunk)
    jobs = [(c, min(step, N - c * step)) for c in range((N + step - 1) // step)]
    run = lambda job: _chunk(plan, alpha, config.seed, job[0], job[1])
    if config.threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(config.threads) as ex:
            parts = list(ex.map(run, jobs))
    else:
        parts = [run(j) for j in jobs]
    pairs = np.concatenate(parts) if parts else np.zeros((0, 2))
    lag = Lag.of(k)
    return PairSample(pairs, (lag.k1, lag.k2), alpha, plan.sim_err, plan.info)


# --------------------------------------------------------------------------
# checks
# --------------------------------------------------------------------------


def default_theta_grid(spec, k=(0, 0)):
    """4 x 4 grid scaled so that the ch.f. stays away from 0 and 1."""
    A = alpha_norm(spec, 1e-6)[0]
    s = A ** (-1.0 / spec.alpha)
    t = np.array([-1.0, -0.5, 0.5, 1.0]) * s
    return np.array([(u, v) for u in t for v in t])


def ecf_check(sample, spec, k, theta_grid=None, confidence=0.99, n_boot=200, seed=0, tol=None):
    """Compare the empirical ch.f. of ``sample`` with the exact one on a grid.

    The band is the bootstrap ``confidence`` quantile of the sup-deviation
    over the grid; known biases (exact-sum error and the simulation's
    truncation bound) are added pointwise before comparing.  ``tol`` for
    the exact exponent defaults to 0.1/sqrt(N), far below sampling noise.
    """
    X = sample.pairs
    N = X.shape[0]
    if tol is None:
        tol = 0.1 / math.sqrt(N)
    th = default_theta_grid(spec, k) if theta_grid is None else np.atleast_2d(np.asarray(theta_grid, float))
    exact, eerr = exact_cf(spec, k, th, tol)
    C = np.cos(X @ th.T)
    emp = C.mean(axis=0)
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(N, np.full(N, 1.0 / N), size=n_boot).astype(float)
    boot = counts @ C / N
    band = float(np.quantile(np.max(np.abs(boot - emp), axis=1), confidence))
    bias = np.asarray(eerr) + np.linalg.norm(th, axis=1) ** spec.alpha * sample.sim_err
    dev = np.abs(emp - exact)
    excess = float(np.max(dev - bias))
    return {
        "max_abs_dev": float(dev.max()),
        "band": band,
        "confidence": confidence,
        "pass": excess <= band,
        "grid": [
            {"theta": [float(t1), float(t2)], "empirical": float(e), "exact": float(x), "allowance": float(bi)}
            for (t1, t2), e, x, bi in zip(th, emp, exact, bias)
        ],
    }


def tail_rho_estimate(sample, spec, k, threshold_quantile=0.995, tol=1e-6):
    """Gamma(S^1) * mean(s1 s2) over pairs whose norm exceeds the given quantile."""
    if not 0.9 < threshold_quantile < 1.0:
        raise ValueError("threshold_quantile must lie in (0.9, 1)")
    X = sample.pairs
    r = np.hypot(X[:, 0], X[:, 1])
    u = np.quantile(r, threshold_quantile)
    ex = r > u
    n = int(ex.sum())
    if n < 500:
        raise TooFewExceedances(f"only {n} exceedances above the {threshold_quantile} quantile")
    s1 = X[ex, 0] / r[ex]
    s2 = X[ex, 1] / r[ex]
    total = spectral_masses(spec, k, tol).total_mass
    return float(total * np.mean(s1 * s2))
