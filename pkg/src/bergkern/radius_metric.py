"""Radius functions on grids and the distances they induce.

For a potential ``V >= 0`` the radius function is
``rho_V(x) = sup{r : r^2 * sup_{B(x, r)} V <= 1}``; for a model weight the
coercivity radius is ``kappa = 1 / mu``.  A radius field turns into a
weighted grid graph whose shortest paths approximate the distance
``d_rho(x, y) = inf over paths of the integral of |dx| / rho``.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from .errors import CoveringFailure, GridMismatch, UnreachableTarget, ZeroPotential
from .grid import Grid, shifted
from .newton_diagram import HomogeneousProfile

log = logging.getLogger(__name__)


class RadiusSource(str, enum.Enum):
    FROM_POTENTIAL = "FromPotential"
    FROM_MU = "FromMu"
    MAX = "Max"
    EXPLICIT = "Explicit"


@dataclass
class RadiusField:
    grid: Grid
    values: np.ndarray
    comparability: float
    source: RadiusSource
    func: Callable[[np.ndarray], np.ndarray] | None = None
    unsaturated: np.ndarray | None = None
    comparability_bound: float | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(self.grid.shape)
        if not np.all(np.isfinite(self.values)) or np.any(self.values <= 0):
            raise ValueError("radius values must be positive and finite")

    def at(self, points) -> np.ndarray:
        """Evaluate at arbitrary points: exact if a formula is attached, else nearest node."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.func is not None:
            return np.asarray(self.func(points), dtype=float)
        flat = self.values.ravel()
        return np.array([flat[self.grid.nearest_index(p)] for p in points])

    def rows(self):
        """(coordinates..., value) per node, for CSV output."""
        pts = self.grid.points
        return [tuple(p) + (v,) for p, v in zip(pts, self.values.ravel())]


def explicit_field(grid: Grid, func, comparability: float | None = None) -> RadiusField:
    values = np.asarray(func(grid.points), dtype=float).reshape(grid.shape)
    C = comparability if comparability is not None else estimate_comparability(grid, values)
    return RadiusField(grid, values, C, RadiusSource.EXPLICIT, func=func)


# --- offsets -----------------------------------------------------------------


def _offsets_between(spacing, r_lo, r_hi):
    """Integer offsets with r_lo < |o * spacing| <= r_hi, sorted by length."""
    spans = [np.arange(-int(r_hi // s), int(r_hi // s) + 1) for s in spacing]
    mesh = np.meshgrid(*spans, indexing="ij")
    offs = np.stack([m.ravel() for m in mesh], axis=-1)
    dist = np.sqrt(((offs * spacing) ** 2).sum(axis=1))
    keep = (dist > r_lo) & (dist <= r_hi)
    offs, dist = offs[keep], dist[keep]
    order = np.lexsort(tuple(offs.T[::-1]) + (dist,))
    return offs[order], dist[order]


def _offsets_within(spacing, radius):
    offs, dist = _offsets_between(spacing, -1.0, radius)
    return offs, dist


# --- ball suprema --------------------------------------------------------------


class SampledBallSup:
    """sup of grid samples of V over B(x, r) dilated by one cell."""

    def __init__(self, grid: Grid, values: np.ndarray, dilation: float = 1.0):
        self.grid = grid
        self.values = np.asarray(values, dtype=float).reshape(grid.shape)
        self.pad = dilation * float(grid.spacing.max())

    def __call__(self, points, r, idx):
        r = np.asarray(r, dtype=float)
        idx = np.asarray(idx)
        multi = np.array(np.unravel_index(idx, self.grid.shape)).T
        out = np.zeros(len(idx))
        offs, dist = _offsets_within(self.grid.spacing, float(r.max()) + self.pad)
        shape = np.array(self.grid.shape)
        for o, d in zip(offs, dist):
            active = d <= r + self.pad
            if not active.any():
                continue
            tgt = multi + o
            ok = active & np.all((tgt >= 0) & (tgt < shape), axis=1)
            if ok.any():
                vals = self.values[tuple(tgt[ok].T)]
                out[ok] = np.maximum(out[ok], vals)
        return out


class MonotoneBallSup:
    """Exact ball sup for a function non-decreasing in each |x_i| (d = 1 or 2).

    The sup over B(x, r) is attained at |x_i| + a_i with |a| = r, a >= 0, so it
    reduces to a one-parameter maximisation over the quarter circle.
    """

    def __init__(self, func, samples: int = 65, refine: int = 40):
        self.func = func
        self.samples = samples
        self.refine = refine

    def __call__(self, points, r, idx=None):
        pts = np.abs(np.atleast_2d(np.asarray(points, dtype=float)))
        r = np.asarray(r, dtype=float)
        if pts.shape[1] == 1:
            return np.asarray(self.func(pts + r[:, None]), dtype=float)
        if pts.shape[1] != 2:
            raise ValueError("monotone ball sup supports d <= 2")

        def g(theta):
            q = pts + r[:, None] * np.stack([np.cos(theta), np.sin(theta)], axis=-1)
            return np.asarray(self.func(q), dtype=float)

        thetas = np.linspace(0.0, math.pi / 2, self.samples)
        vals = np.stack([g(np.full(len(pts), t)) for t in thetas], axis=1)
        best = vals.argmax(axis=1)
        step = thetas[1] - thetas[0]
        lo = np.clip(thetas[best] - step, 0.0, math.pi / 2)
        hi = np.clip(thetas[best] + step, 0.0, math.pi / 2)
        phi = (math.sqrt(5) - 1) / 2
        a = hi - phi * (hi - lo)
        b = lo + phi * (hi - lo)
        fa, fb = g(a), g(b)
        for _ in range(self.refine):
            left = fa >= fb
            hi = np.where(left, b, hi)
            lo = np.where(left, lo, a)
            a_new = hi - phi * (hi - lo)
            b_new = lo + phi * (hi - lo)
            a, b = a_new, b_new
            fa, fb = g(a), g(b)
        return np.maximum(vals.max(axis=1), np.maximum(fa, fb))


class BoxBallSup:
    """Upper bound for monotone functions: evaluate at |x_i| + r in every coordinate."""

    def __init__(self, func):
        self.func = func

    def __call__(self, points, r, idx=None):
        pts = np.abs(np.atleast_2d(np.asarray(points, dtype=float)))
        return np.asarray(self.func(pts + np.asarray(r, dtype=float)[:, None]), dtype=float)


# --- radius functions ------------------------------------------------------------


def _diameter(grid: Grid) -> float:
    return float(np.sqrt(sum((u - l) ** 2 for l, u in zip(grid.lower, grid.upper)))) or float(grid.h)


def _rho_sampled(grid: Grid, values: np.ndarray, dilation: float, max_offsets: int):
    """Exact radius for the dilated grid-sampled ball sup, by walking offset shells."""
    pad = dilation * float(grid.spacing.max())
    diam = _diameter(grid)
    running = values.copy()
    rho = np.full(grid.shape, np.nan)
    # every offset with |o| <= pad is active from r = 0
    offs, dist = _offsets_within(grid.spacing, pad)
    for o in offs:
        running = np.fmax(running, shifted(values, o))
    radius_done = pad
    level = 0.0
    used = len(offs)
    chunk = max(4.0 * pad, 8.0 * float(grid.spacing.max()))
    while True:
        pending = np.isnan(rho)
        if not pending.any():
            break
        offs, dist = _offsets_between(grid.spacing, radius_done, radius_done + chunk)
        radius_done += chunk
        if len(offs) == 0 or used > max_offsets or level >= diam:
            break
        activation = dist - pad
        breaks = np.unique(activation)
        start = 0
        for nxt in breaks:
            cand = np.where(running > 0, 1.0 / np.sqrt(np.where(running > 0, running, 1.0)), np.inf)
            hit = pending & (cand < nxt)
            if hit.any():
                rho[hit] = np.maximum(level, cand[hit])
                pending &= ~hit
                if not pending.any():
                    break
            stop = np.searchsorted(activation, nxt, side="right")
            for o in offs[start:stop]:
                running = np.fmax(running, shifted(values, o))
            used += stop - start
            start = stop
            level = nxt
            if level >= diam:
                break
    pending = np.isnan(rho)
    if pending.any():
        cand = np.where(running > 0, 1.0 / np.sqrt(np.where(running > 0, running, 1.0)), np.inf)
        rho[pending] = np.minimum(np.maximum(level, cand[pending]), diam)
    unsat = rho >= diam * (1 - 1e-12)
    return rho, unsat


def _rho_bisect(grid: Grid, ball_sup, rtol: float):
    pts = grid.points
    idx = np.arange(grid.size)
    diam = _diameter(grid)

    def f(r):
        return r * r * ball_sup(pts, r, idx)

    hi = np.full(grid.size, diam)
    f_hi = f(hi)
    unsat = f_hi <= 1.0
    lo = np.full(grid.size, float(grid.spacing.min()) / 4)
    for _ in range(200):
        bad = f(lo) > 1.0
        if not bad.any():
            break
        lo[bad] *= 0.5
    hi = np.where(unsat, diam, hi)
    lo = np.where(unsat, diam, lo)
    active = ~unsat
    while active.any():
        mid = np.sqrt(lo * hi)
        fm = f(mid[active])
        ok = fm <= 1.0
        sel = np.flatnonzero(active)
        lo[sel[ok]] = mid[sel[ok]]
        hi[sel[~ok]] = mid[sel[~ok]]
        active = hi > lo * (1 + rtol)
    return lo.reshape(grid.shape), unsat.reshape(grid.shape)


def rho_from_potential(
    potential: Callable[[np.ndarray], np.ndarray],
    grid: Grid,
    ball_sup=None,
    rtol: float = 1e-6,
    dilation: float = 1.0,
    max_offsets: int = 400_000,
) -> RadiusField:
    """Radius function of ``potential`` sampled at the grid nodes.

    With ``ball_sup=None`` the sup over a ball is taken over grid samples in
    the ball dilated by ``dilation`` cells, and the radius is exact for that
    step function.  Otherwise ``ball_sup(points, r, idx)`` supplies the sup
    and the radius is found by bisection in ``log r``.
    """
    values = np.asarray(potential(grid.points), dtype=float).reshape(grid.shape)
    if np.any(values < 0):
        raise ValueError("potential must be non-negative")
    if not np.any(values > 0):
        raise ZeroPotential("potential vanishes on the whole grid")
    if ball_sup is None:
        rho, unsat = _rho_sampled(grid, values, dilation, max_offsets)
    else:
        rho, unsat = _rho_bisect(grid, ball_sup, rtol)
    if unsat.any():
        log.info("radius saturated at the domain diameter on %d nodes", int(unsat.sum()))
    C = estimate_comparability(grid, rho)
    return RadiusField(grid, rho, C, RadiusSource.FROM_POTENTIAL, unsaturated=unsat)


def kappa_function(profile: HomogeneousProfile, c: float = 1.0):
    """Vectorised kappa(|z|, |w|) = 1 / (c (1 + |z|^sigma + |w|^tau)) in caller coordinates."""
    if c <= 0:
        raise ValueError("c must be positive")
    s, t = (float(v) for v in profile.original_sigma_tau())

    def kappa(points):
        pts = np.abs(np.atleast_2d(np.asarray(points, dtype=float)))
        return 1.0 / (c * (1.0 + pts[:, 0] ** s + pts[:, 1] ** t))

    return kappa


def rho_from_mu(profile: HomogeneousProfile, c: float, grid: Grid) -> RadiusField:
    if grid.dim != 2:
        raise ValueError("the coercivity radius lives on the (|z|, |w|) quadrant")
    func = kappa_function(profile, c)
    values = func(grid.points).reshape(grid.shape)
    C = estimate_comparability(grid, values)
    return RadiusField(grid, values, C, RadiusSource.FROM_MU, func=func)


def radius_max(a: RadiusField, b: RadiusField) -> RadiusField:
    if not a.grid.same_as(b.grid):
        raise GridMismatch("radius fields live on different grids")
    values = np.maximum(a.values, b.values)
    func = None
    if a.func is not None and b.func is not None:
        fa, fb = a.func, b.func

        def func(points):
            return np.maximum(fa(points), fb(points))

    C = estimate_comparability(a.grid, values)
    return RadiusField(
        a.grid, values, C, RadiusSource.MAX, func=func,
        comparability_bound=a.comparability * b.comparability,
    )


def estimate_comparability(grid: Grid, values: np.ndarray, max_offsets: int = 6000) -> float:
    """Largest ratio rho(y)/rho(x) (either way) over nodes y within rho(x) of x."""
    values = np.asarray(values, dtype=float).reshape(grid.shape)
    reach = float(values.max())
    offs, dist = _offsets_within(grid.spacing, reach)
    if len(offs) > max_offsets:
        keep = np.unique(np.linspace(0, len(offs) - 1, max_offsets).astype(int))
        offs, dist = offs[keep], dist[keep]
    C = 1.0
    for o, d in zip(offs, dist):
        if d == 0:
            continue
        other = shifted(values, o)
        ok = np.isfinite(other) & (d <= values)
        if ok.any():
            r = other[ok] / values[ok]
            C = max(C, float(r.max()), float((1 / r).max()))
    return C


# --- coverings -----------------------------------------------------------------


@dataclass
class Covering:
    centers: np.ndarray
    radii: np.ndarray
    multiplicity: int
    covered: bool


def greedy_covering(field: RadiusField) -> Covering:
    """Greedy disjoint family of shrunken balls whose full balls cover the grid."""
    pts = field.grid.points
    rho = field.values.ravel()
    C = field.comparability
    small = rho / (1 + C * C)
    order = np.lexsort((np.arange(len(rho)), -rho))
    chosen: list[int] = []
    cpts = np.empty((0, pts.shape[1]))
    crad = np.empty(0)
    for i in order:
        if len(chosen):
            gap = np.sqrt(((cpts - pts[i]) ** 2).sum(axis=1))
            if np.any(gap < crad + small[i]):
                continue
        chosen.append(int(i))
        cpts = np.vstack([cpts, pts[i]])
        crad = np.append(crad, small[i])
    centers = pts[chosen]
    radii = rho[chosen]
    counts = np.zeros(len(pts), dtype=int)
    for start in range(0, len(pts), 4096):
        block = pts[start:start + 4096]
        d = np.sqrt(((block[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2))
        counts[start:start + 4096] = (d <= radii[None, :] * (1 + 1e-12)).sum(axis=1)
    covered = bool(np.all(counts >= 1))
    if not covered:
        raise CoveringFailure(f"{int((counts == 0).sum())} nodes are not covered")
    return Covering(centers, radii, int(counts.max()), covered)


# --- metric graph ------------------------------------------------------------------


@dataclass
class MetricGraph:
    grid: Grid
    matrix: object
    field: RadiusField
    mask: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False)


def _stencil(dim: int, wide: bool):
    offs = [o for o in np.ndindex(*(3,) * dim) if any(v != 1 for v in o)]
    offs = [tuple(v - 1 for v in o) for o in offs]
    if wide and dim == 2:
        offs += [(1, 2), (2, 1), (-1, 2), (-2, 1), (1, -2), (2, -1), (-1, -2), (-2, -1)]
    # keep one orientation of each undirected edge
    return [o for o in offs if tuple(o) > tuple(-v for v in o)]


def build_metric_graph(field: RadiusField, wide_stencil: bool = False, mask=None) -> MetricGraph:
    """Grid graph with axis and diagonal edges weighted by length / rho(midpoint)."""
    grid = field.grid
    shape = grid.shape
    index = np.arange(grid.size).reshape(shape)
    pts = grid.points
    rho_nodes = field.values.ravel()
    active = np.ones(shape, bool) if mask is None else np.asarray(mask, bool).reshape(shape)
    rows, cols, weights = [], [], []
    for o in _stencil(grid.dim, wide_stencil):
        nb = shifted(index.astype(float), o)
        ok = np.isfinite(nb) & active
        ok &= shifted(active.astype(float), o, fill=0.0) > 0
        src = index[ok]
        dst = nb[ok].astype(int)
        if not len(src):
            continue
        length = float(np.sqrt(((np.array(o) * grid.spacing) ** 2).sum()))
        if field.func is not None:
            rho_mid = field.func(0.5 * (pts[src] + pts[dst]))
        else:
            rho_mid = 0.5 * (rho_nodes[src] + rho_nodes[dst])
        rows.append(src)
        cols.append(dst)
        weights.append(length / np.asarray(rho_mid, dtype=float))
    r = np.concatenate(rows) if rows else np.empty(0, int)
    c = np.concatenate(cols) if cols else np.empty(0, int)
    w = np.concatenate(weights) if weights else np.empty(0)
    mat = coo_matrix((w, (r, c)), shape=(grid.size, grid.size)).tocsr()
    return MetricGraph(grid, mat, field, mask=active)


def _node(graph: MetricGraph, node) -> int:
    if isinstance(node, (int, np.integer)):
        return int(node)
    return graph.grid.nearest_index(node)


def agmon_distance(graph: MetricGraph, source, targets=None) -> np.ndarray:
    """Shortest-path distances from ``source`` (node index or coordinates).

    Returns distances to ``targets`` or, when omitted, to every node.
    """
    s = _node(graph, source)
    if s not in graph._cache:
        graph._cache[s] = dijkstra(graph.matrix, directed=False, indices=s)
    dist = graph._cache[s]
    if targets is None:
        return dist
    idx = [_node(graph, t) for t in targets]
    out = dist[idx]
    if not np.all(np.isfinite(out)):
        raise UnreachableTarget("some targets are not connected to the source")
    return out


# --- property checks -------------------------------------------------------------


@dataclass
class SandwichReport:
    doubling: float
    lower_ok: bool
    upper_ok: bool
    min_lower_margin: float
    max_upper_ratio: float


def sandwich_check(field: RadiusField, ball_sup) -> SandwichReport:
    """Check rho^-2 / (4D) <= sup_{B(x, rho)} V <= rho^-2 with D measured."""
    pts = field.grid.points
    idx = np.arange(field.grid.size)
    rho = field.values.ravel()
    inner = ball_sup(pts, rho * (1 - 1e-9), idx)
    outer = ball_sup(pts, 2 * rho, idx)
    sat = ~field.unsaturated.ravel() if field.unsaturated is not None else np.ones(len(rho), bool)
    pos = inner > 0
    D = float(np.max(outer[pos] / inner[pos])) if pos.any() else 1.0
    upper = inner * rho**2
    lower = inner * rho**2 * 4 * D
    return SandwichReport(
        doubling=D,
        lower_ok=bool(np.all(lower[sat] >= 1 - 1e-9)),
        upper_ok=bool(np.all(upper <= 1 + 1e-9)),
        min_lower_margin=float(lower[sat].min()) if sat.any() else math.inf,
        max_upper_ratio=float(upper.max()),
    )


def ball_inclusions(graph: MetricGraph, source, r: float, slack: float = 0.1) -> tuple[bool, bool]:
    """Compare d_rho balls with Euclidean balls of radius r * rho(x) around ``source``."""
    s = _node(graph, source)
    C = graph.field.comparability
    pts = graph.grid.points
    eu = np.sqrt(((pts - pts[s]) ** 2).sum(axis=1))
    d = agmon_distance(graph, s)
    rho_x = graph.field.values.ravel()[s]
    inner = d < r / C
    inner_ok = bool(np.all(eu[inner] <= r * rho_x * (1 + 1e-12)))
    ball = eu < r * rho_x
    outer_ok = bool(np.all(d[ball] <= C * r * (1 + slack)))
    return inner_ok, outer_ok


def gradient_energy(grid: Grid, f: np.ndarray) -> float:
    """Forward-difference Dirichlet energy of grid values (zero outside)."""
    f = np.asarray(f).reshape(grid.shape)
    total = 0.0
    for k in range(grid.dim):
        pad = [(0, 0)] * grid.dim
        pad[k] = (1, 1)
        g = np.diff(np.pad(f, pad), axis=k) / grid.spacing[k]
        total += float(np.sum(np.abs(g) ** 2))
    return total * grid.cell_volume


def fefferman_phong_constant(grid: Grid, potential_values, rho: RadiusField, functions) -> float:
    """Smallest C with int |f|^2 / rho^2 <= C (int |grad f|^2 + int V |f|^2) over ``functions``."""
    V = np.asarray(potential_values, dtype=float).reshape(grid.shape)
    inv2 = rho.values ** -2.0
    worst = 0.0
    for f in functions:
        f = np.asarray(f).reshape(grid.shape)
        lhs = float(np.sum(inv2 * np.abs(f) ** 2)) * grid.cell_volume
        rhs = gradient_energy(grid, f) + float(np.sum(V * np.abs(f) ** 2)) * grid.cell_volume
        worst = max(worst, lhs / rhs)
    return worst


def random_bumps(grid: Grid, count: int, seed: int, min_radius=None, max_radius=None):
    """Seeded smooth compactly supported functions on the grid."""
    rng = np.random.default_rng(seed)
    pts = grid.points
    lo, hi = np.array(grid.lower), np.array(grid.upper)
    span = float((hi - lo).min())
    rmin = min_radius if min_radius is not None else 4 * float(grid.spacing.max())
    rmax = max_radius if max_radius is not None else span / 3
    out = []
    for _ in range(count):
        R = rng.uniform(rmin, rmax)
        c = rng.uniform(lo + R, hi - R)
        s = np.sqrt(((pts - c) ** 2).sum(axis=1)) / R
        f = np.zeros(len(pts))
        inside = s < 1
        f[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
        coef = rng.normal(size=grid.dim + 1)
        f *= coef[0] + ((pts - c) / R) @ coef[1:]
        out.append(f.reshape(grid.shape))
    return out
