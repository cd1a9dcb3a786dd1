"""Weighted Bergman kernels of homogeneous model weights.

The monomials ``z^a w^b`` are orthogonal in ``L^2(e^{-2 phi})`` because the
weight depends only on the moduli, so the kernel is the series
``B(p, q) = sum (z_p conj(z_q))^a (w_p conj(w_q))^b / c_ab`` with
``c_ab = ||z^a w^b||^2``.  Homogeneity collapses each ``c_ab`` to a Gamma
factor times a one-dimensional integral, evaluated by adaptive quadrature
in a logarithmic variable; an independent two-dimensional rule is used to
check reproducing identities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ._parallel import parallel_map
from .errors import InsufficientDecay, QuadratureNonConvergent, TailNotCertified
from .newton_diagram import MonomialSet, derive_profile
from .grid import Grid
from .radius_metric import (
    MetricGraph,
    MonotoneBallSup,
    RadiusField,
    agmon_distance,
    build_metric_graph,
    radius_max,
    rho_from_mu,
    rho_from_potential,
)
from .weight_eval import PolyWeight, det_trace, eval_weight

LOG_PI2 = 2.0 * math.log(math.pi)


@dataclass
class MomentTable:
    gamma: MonomialSet
    cutoff: int
    log_moments: np.ndarray
    quad_tolerance: float

    @property
    def moments(self) -> dict[tuple[int, int], float]:
        N = self.cutoff
        return {(a, b): math.exp(self.log_moments[a, b]) for a in range(N + 1) for b in range(N + 1 - a)}

    def moment(self, a: int, b: int) -> float:
        if a + b > self.cutoff:
            raise KeyError((a, b))
        return math.exp(self.log_moments[a, b])


_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)


def _panel_integral(f, left, right, panels):
    edges = np.linspace(left, right, panels + 1)
    half = 0.5 * np.diff(edges)
    mids = 0.5 * (edges[1:] + edges[:-1])
    t = (mids[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    return float(np.sum(f(t).reshape(panels, -1) @ _GL_W * half))


def _log_moment(gamma: MonomialSet, m: int, n: int, a: int, b: int, rtol: float) -> float:
    betas = np.array([beta for _, beta in gamma], dtype=float)
    bmax = betas.max()
    k = a + m * (b + 1) / n
    e = (k + 1) / m
    log2 = math.log(2.0)

    def lse(t):
        t = np.asarray(t, dtype=float)
        top = np.where(t >= 0, bmax * t, 0.0)
        return top + np.log(np.exp(np.multiply.outer(t, betas) - top[..., None]).sum(axis=-1))

    def g(t):
        return (b + 1) * t - e * (log2 + lse(t))

    def dg(t):
        w = np.exp(betas * t - lse(t))
        return (b + 1) - e * float(w @ betas)

    lo, hi = -1.0, 1.0
    while dg(lo) <= 0:
        lo *= 2
    while dg(hi) >= 0:
        hi *= 2
    t_star = brentq(dg, lo, hi, xtol=1e-14, rtol=1e-15)
    g_star = float(g(t_star))
    left, right = t_star - 1.0, t_star + 1.0
    while g(left) - g_star > -80:
        left -= 2 * (t_star - left)
    while g(right) - g_star > -80:
        right += 2 * (right - t_star)

    def f(t):
        return np.exp(g(t) - g_star)

    # composite Gauss-Legendre panels, doubled until two levels agree
    panels = 4
    prev = _panel_integral(f, left, right, panels)
    for _ in range(12):
        panels *= 2
        val = _panel_integral(f, left, right, panels)
        if abs(val - prev) <= rtol * abs(val) / 10:
            break
        prev = val
    else:
        raise QuadratureNonConvergent(f"moment ({a}, {b}): panels did not converge")
    if not val > 0:
        raise QuadratureNonConvergent(f"moment ({a}, {b}): non-positive estimate {val}")
    return LOG_PI2 + math.lgamma(e) - math.log(m) + g_star + math.log(val)


def compute_moments(gamma, cutoff: int, rtol: float = 1e-10) -> MomentTable:
    """All ``c_ab`` with ``a + b <= cutoff`` for a homogeneous exponent set."""
    gamma = gamma if isinstance(gamma, MonomialSet) else MonomialSet(gamma)
    derive_profile(gamma)  # raises unless homogeneous
    m = max(a for a, _ in gamma)
    n = max(b for _, b in gamma)
    pairs = [(a, b) for a in range(cutoff + 1) for b in range(cutoff + 1 - a)]
    logs = parallel_map(lambda ab: _log_moment(gamma, m, n, ab[0], ab[1], rtol), pairs)
    table = np.full((cutoff + 1, cutoff + 1), np.nan)
    for (a, b), v in zip(pairs, logs):
        table[a, b] = v
    return MomentTable(gamma, cutoff, table, rtol)


@dataclass
class KernelValue:
    value: complex
    tail_bound: float
    terms_used: int
    abs_sum: float = 0.0


def _as_pair(p):
    z, w = (p.z, p.w) if hasattr(p, "z") else p
    return complex(z), complex(w)


def kernel_eval(table: MomentTable, p, q, rtol: float | None = None, layers: int = 3) -> KernelValue:
    """Truncated kernel series with a certified geometric tail bound.

    Each term is compared with its predecessor along its larger index; on
    the last ``layers`` degree layers that ratio must stay below ``1/2``.
    Log-convexity of the moments keeps the ratios decreasing beyond the
    table, and each term is the designated predecessor of at most two
    others, so the tail is at most ``S_N * 2q / (1 - 2q)`` with ``S_N`` the
    last layer's mass.
    """
    zp, wp = _as_pair(p)
    zq, wq = _as_pair(q)
    X = zp * np.conj(zq)
    Y = wp * np.conj(wq)
    N = table.cutoff
    L = table.log_moments
    a_idx, b_idx = np.nonzero(np.isfinite(L))
    logc = L[a_idx, b_idx]

    def log_abs_pow(base, k):
        if base == 0:
            return np.where(k == 0, 0.0, -np.inf)
        return k * math.log(abs(base))

    logmag = log_abs_pow(X, a_idx) + log_abs_pow(Y, b_idx) - logc
    phase = a_idx * np.angle(X) + b_idx * np.angle(Y)
    mags = np.exp(logmag)
    value = complex(np.sum(mags * np.exp(1j * phase)))
    abs_sum = float(mags.sum())

    # each term beyond the table is bounded through its predecessor along
    # the larger index; that predecessor ratio is checked on the last layers
    q_ratio = 0.0
    for a in range(N + 1):
        for b in range(N + 1 - a):
            if a + b <= N - layers:
                continue
            ratios = []
            if a >= b and a > 0:
                ratios.append(abs(X) * math.exp(L[a - 1, b] - L[a, b]))
            if b >= a and b > 0:
                ratios.append(abs(Y) * math.exp(L[a, b - 1] - L[a, b]))
            q_ratio = max(q_ratio, min(ratios))
    last = float(mags[(a_idx + b_idx) == N].sum())
    tail = last * 2 * q_ratio / (1 - 2 * q_ratio)
    if rtol is not None and tail > rtol * abs_sum:
        raise TailNotCertified(f"tail {tail:.3g} exceeds {rtol} of the partial sum")
    return KernelValue(value, tail, len(mags), abs_sum)


def gaussian_kernel(p, q) -> complex:
    """Closed-form kernel for phi = |z|^2 + |w|^2."""
    zp, wp = _as_pair(p)
    zq, wq = _as_pair(q)
    return 4.0 / math.pi**2 * np.exp(2 * (zp * np.conj(zq) + wp * np.conj(wq)))


# --- independent quadrature -----------------------------------------------------


def _truncation_radius(deg: int, power: int) -> float:
    """R with 2 R^{2 deg} - (2 power + 1) log R > 80."""
    R = 1.0
    while 2 * R ** (2 * deg) - (2 * power + 1) * math.log(R) < 80:
        R *= 1.05
    return R


def radial_moment_quadrature(gamma, a: int, b: int, nodes: int = 200) -> float:
    """c_ab = 4 pi^2 int int r^{2a+1} s^{2b+1} e^{-2 phi(r, s)} dr ds by 2D Gauss-Legendre."""
    gamma = gamma if isinstance(gamma, MonomialSet) else MonomialSet(gamma)
    m = max(x for x, _ in gamma)
    n = max(y for _, y in gamma)
    Rz = _truncation_radius(m, a)
    Rw = _truncation_radius(n, b)
    x, wx = np.polynomial.legendre.leggauss(nodes)
    r = 0.5 * Rz * (x + 1)
    s = 0.5 * Rw * (x + 1)
    wr = 0.5 * Rz * wx
    ws = 0.5 * Rw * wx
    R, S = np.meshgrid(r, s, indexing="ij")
    phi = sum(R ** (2 * al) * S ** (2 * be) for al, be in gamma)
    integrand = R ** (2 * a + 1) * S ** (2 * b + 1) * np.exp(-2 * phi)
    return float(4 * math.pi**2 * (wr @ integrand @ ws))


@dataclass
class ReproducingResult:
    value: complex
    exact: complex
    error: float


def reproducing_check(table: MomentTable, monomial, p, nodes: int = 200) -> ReproducingResult:
    """(h, k_p) for h = z^a w^b versus h(p).

    Angular orthogonality kills every kernel term but the (a, b) one, so the
    pairing equals ``h(p) * I_ab / c_ab`` where ``I_ab`` is the radial
    integral computed by the independent 2D rule.
    """
    a, b = monomial
    zp, wp = _as_pair(p)
    exact = zp**a * wp**b
    if a + b > table.cutoff:
        raise KeyError((a, b))
    ratio = radial_moment_quadrature(table.gamma, a, b, nodes) / table.moment(a, b)
    value = exact * ratio
    return ReproducingResult(value, exact, abs(value - exact))


# --- decay fit -------------------------------------------------------------------


@dataclass
class FitReport:
    epsilon: float
    logC: float
    worst_pair_index: int
    residuals: np.ndarray = field(repr=False)
    distances: np.ndarray = field(repr=False)
    tail_max: float = 0.0


def _golden_min(f, lo, hi, iters=200, tol=1e-12):
    phi = (math.sqrt(5) - 1) / 2
    a, b = lo + (1 - phi) * (hi - lo), lo + phi * (hi - lo)
    fa, fb = f(a), f(b)
    for _ in range(iters):
        if hi - lo < tol * max(1.0, abs(hi)):
            break
        if fa <= fb:
            hi, b, fb = b, a, fa
            a = lo + (1 - phi) * (hi - lo)
            fa = f(a)
        else:
            lo, a, fa = a, b, fb
            b = lo + phi * (hi - lo)
            fb = f(b)
    cands = [(f(lo), lo), (fa, a), (fb, b), (f(hi), hi)]
    return min(cands)[1]


def bound_fit(
    table: MomentTable,
    rho_field: RadiusField,
    kappa_field: RadiusField,
    metric: MetricGraph,
    pairs,
) -> FitReport:
    """Fit ``L(p, q) <= log C - eps * d_kappa(p, q)`` over phase-aligned pairs.

    ``L = log|B| - phi(p) - phi(q) + 2 log rho(p) + 2 log rho(q) - log(kappa(p)/rho(p))``.
    ``eps >= 0`` minimises the spread of ``L + eps * d`` (a Chebyshev line
    fit); ``log C`` is then the smallest constant that makes the bound hold
    on every pair.
    """
    gamma = table.gamma
    Ls, ds, tails = [], [], []
    for p, q in pairs:
        zp, wp = _as_pair(p)
        zq, wq = _as_pair(q)
        pm = np.array([abs(zp), abs(wp)])
        qm = np.array([abs(zq), abs(wq)])
        B = kernel_eval(table, (zp, wp), (zq, wq))
        if B.value == 0 or not np.isfinite(abs(B.value)):
            raise InsufficientDecay(f"kernel vanishes or overflows at {p}, {q}")
        tails.append(B.tail_bound / abs(B.value))
        rp = float(rho_field.at(pm)[0])
        rq = float(rho_field.at(qm)[0])
        kp = float(kappa_field.at(pm)[0])
        L = (
            math.log(abs(B.value)) - eval_weight(gamma, (zp, wp)) - eval_weight(gamma, (zq, wq))
            + 2 * math.log(rp) + 2 * math.log(rq) - math.log(kp / rp)
        )
        Ls.append(L)
        ds.append(float(agmon_distance(metric, pm, [qm])[0]))
    L = np.array(Ls)
    d = np.array(ds)
    if not np.all(np.isfinite(L)):
        raise InsufficientDecay("non-finite log-kernel values")

    def spread(eps):
        v = L + eps * d
        return float(v.max() - v.min())

    span = float(d.max() - d.min())
    hi = 1.0 if span == 0 else 4 * float(L.max() - L.min()) / span + 1.0
    eps = _golden_min(spread, 0.0, hi)
    shifted = L + eps * d
    return FitReport(
        epsilon=eps,
        logC=float(shifted.max()),
        worst_pair_index=int(shifted.argmax()),
        residuals=shifted,
        distances=d,
        tail_max=max(tails),
    )



def phase_aligned_pairs(count: int, box: float, smin: float, smax: float, seed: int):
    """Pairs of modulus points in ``[0, box]^2`` with log-spaced separations.

    Both points have real non-negative coordinates, so the kernel phase is
    aligned and only moduli matter.
    """
    rng = np.random.default_rng(seed)
    pairs = []
    for s in np.logspace(math.log10(smin), math.log10(smax), count):
        while True:
            p = rng.uniform(0, box, 2)
            psi = rng.uniform(0, 2 * math.pi)
            q = p + s * np.array([math.cos(psi), math.sin(psi)])
            if np.all(q >= 0) and np.all(q <= box):
                break
        pairs.append((tuple(p), tuple(q)))
    return pairs


def decay_fit(gamma, cutoff: int = 60, extent: float = 2.0, h: float = 0.02, count: int = 40,
              box: float = 1.6, smin: float = 0.05, smax: float = 2.0, seed: int = 7,
              c: float = 1.0) -> FitReport:
    """End-to-end decay fit on the modulus quadrant ``[0, extent]^2``.

    rho comes from the Laplacian of the weight with exact ball sups, kappa is
    the larger of rho and the mu-based radius, and distances are taken in the
    kappa metric.
    """
    gamma = gamma if isinstance(gamma, MonomialSet) else MonomialSet(gamma)
    profile = derive_profile(gamma)

    def lap(p):
        return 4 * det_trace(gamma, p[:, 0], p[:, 1])[1]

    grid = Grid((0.0, 0.0), (extent, extent), h)
    rho = rho_from_potential(lap, grid, ball_sup=MonotoneBallSup(lap))
    kappa = radius_max(rho_from_mu(profile, c, grid), rho)
    metric = build_metric_graph(kappa)
    table = compute_moments(gamma, cutoff)
    pairs = phase_aligned_pairs(count, box, smin, smax, seed)
    return bound_fit(table, rho, kappa, metric, pairs)

# --- sampling helpers for invariants ------------------------------------------------


def ball_samples(center, r: float, count: int, seed: int) -> np.ndarray:
    """Uniform samples of the Euclidean ball B(center, r) in C^2 (as complex pairs)."""
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(count, 4))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    rad = r * rng.random(count) ** 0.25
    v = g * rad[:, None]
    zc, wc = _as_pair(center)
    return np.stack([zc + v[:, 0] + 1j * v[:, 1], wc + v[:, 2] + 1j * v[:, 3]], axis=-1)


def mean_value_ratio(gamma, monomial, p, r: float, count: int = 20000, seed: int = 0) -> float:
    """|h(p)|^2 e^{-2 phi(p)} divided by the ball average of |h|^2 e^{-2 phi}."""
    a, b = monomial
    weight = PolyWeight.model(gamma)
    zp, wp = _as_pair(p)
    pts = ball_samples((zp, wp), r, count, seed)
    vals = np.abs(pts[:, 0] ** a * pts[:, 1] ** b) ** 2 * np.exp(-2 * weight.value(pts))
    at_p = abs(zp**a * wp**b) ** 2 * math.exp(-2 * eval_weight(gamma, (zp, wp)))
    return at_p / float(vals.mean())


def evaluation_bound_ratio(table: MomentTable, monomial, p, r: float, count: int = 20000, seed: int = 0) -> float:
    """|h(p)| divided by |B(p,r)|^{-1} (int_B e^{2 phi})^{1/2} ||h||; at most 1."""
    a, b = monomial
    weight = PolyWeight.model(table.gamma)
    zp, wp = _as_pair(p)
    pts = ball_samples((zp, wp), r, count, seed)
    vol = math.pi**2 / 2 * r**4
    integral = float(np.exp(2 * weight.value(pts)).mean()) * vol
    bound = integral**0.5 / vol * math.sqrt(table.moment(a, b))
    return abs(zp**a * wp**b) / bound
