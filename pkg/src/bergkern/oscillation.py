"""Oscillation of subspace-valued maps, oscillating potentials and matrix A_infinity tests.

For a map S that is constant on the pieces of a partition of a cube, with
piece fractions ``w_j`` and subspaces ``S_j``,

    omega^2 = 1 - sup_{|u| = 1} (sum_j w_j |P_j u|)^2,

because the best unit section on piece ``j`` is ``P_j u / |P_j u|``.  The
supremum is a convex maximisation on the sphere; a fixed-point iteration with
several starts solves it and a brute-force sphere search certifies it for
``m <= 3``.
"""

from __future__ import annotations

import enum
import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
import sympy
from scipy.optimize import minimize

from ._parallel import parallel_map
from .errors import DimensionTooLarge, NoCleanSubcube, SingularInverse
from .schrodinger import MatrixPotential

ORTHO_TOL = 1e-12


def _orthonormal(span) -> np.ndarray:
    A = np.atleast_2d(np.asarray(span, dtype=complex))
    if A.ndim != 2:
        raise ValueError("span must be a matrix of column vectors")
    Q, R = np.linalg.qr(A)
    rank = int((np.abs(np.diag(R)) > 1e-12 * max(1.0, np.abs(R).max())).sum())
    if rank == 0:
        raise ValueError("span is the zero subspace")
    return Q[:, :rank]


@dataclass(frozen=True)
class SubspacePartition:
    """Pieces ``(w_j, B_j)``: measure fractions and orthonormal bases (columns)."""

    weights: tuple
    bases: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(w) == 0 or len(w) != len(self.bases):
            raise ValueError("need one weight per piece")
        if np.any(w <= 0) or abs(w.sum() - 1) > ORTHO_TOL * len(w):
            raise ValueError("weights must be positive and sum to 1")
        bases = tuple(np.asarray(b, dtype=complex) for b in self.bases)
        m = bases[0].shape[0]
        for B in bases:
            if B.ndim != 2 or B.shape[0] != m or not 1 <= B.shape[1] <= m:
                raise ValueError("every basis must be m x k with 1 <= k <= m")
            if np.abs(B.conj().T @ B - np.eye(B.shape[1])).max() > ORTHO_TOL:
                raise ValueError("basis is not orthonormal")
        object.__setattr__(self, "weights", tuple(float(x) for x in w))
        object.__setattr__(self, "bases", bases)

    @classmethod
    def from_spans(cls, weights, spans) -> "SubspacePartition":
        """Build from arbitrary spanning columns; weights are normalised."""
        w = np.asarray(weights, dtype=float)
        return cls(tuple(w / w.sum()), tuple(_orthonormal(s) for s in spans))

    @property
    def m(self) -> int:
        return self.bases[0].shape[0]

    def __len__(self) -> int:
        return len(self.weights)

    def objective(self, U) -> np.ndarray:
        """sum_j w_j |P_j u| for unit vectors stacked along the last axis."""
        U = np.asarray(U, dtype=complex)
        total = np.zeros(U.shape[:-1])
        for w, B in zip(self.weights, self.bases):
            total = total + w * np.linalg.norm(U @ B.conj(), axis=-1)
        return total

    def permuted(self, order) -> "SubspacePartition":
        return SubspacePartition(tuple(self.weights[i] for i in order), tuple(self.bases[i] for i in order))

    def split(self, index: int, fraction: float = 0.5) -> "SubspacePartition":
        """Split one piece into two pieces carrying the same subspace."""
        w = list(self.weights)
        b = list(self.bases)
        w[index : index + 1] = [w[index] * fraction, w[index] * (1 - fraction)]
        b[index : index + 1] = [b[index], b[index]]
        return SubspacePartition(tuple(w), tuple(b))


def random_partition(rng: np.random.Generator, m: int, pieces: int | None = None,
                     complex_valued: bool = True) -> SubspacePartition:
    pieces = pieces or int(rng.integers(1, 5))
    weights = rng.uniform(0.1, 1.0, pieces)
    spans = []
    for _ in range(pieces):
        k = int(rng.integers(1, m + 1))
        A = rng.normal(size=(m, k))
        if complex_valued:
            A = A + 1j * rng.normal(size=(m, k))
        spans.append(A)
    return SubspacePartition.from_spans(weights, spans)


# --- oscillation ---------------------------------------------------------------


@dataclass
class OscillationResult:
    omega: float
    maximizer: np.ndarray
    iterations: int
    oracle_gap: float | None = None


def _omega_from_objective(value: float) -> float:
    return math.sqrt(max(0.0, 1.0 - min(value, 1.0) ** 2))


def _fixed_point(part: SubspacePartition, u, tol: float, max_iter: int, floor: float):
    value = part.objective(u)
    for it in range(1, max_iter + 1):
        g = np.zeros(part.m, dtype=complex)
        for w, B in zip(part.weights, part.bases):
            pu = B @ (B.conj().T @ u)
            g += w * pu / max(np.linalg.norm(pu), floor)
        norm = np.linalg.norm(g)
        if norm == 0:
            return u, value, it
        nxt = g / norm
        step = np.linalg.norm(nxt - u)
        u = nxt
        value = part.objective(u)
        if step < tol:
            return u, value, it
    return u, value, max_iter


def oscillation(part: SubspacePartition, starts: int = 16, seed: int = 0, tol: float = 1e-10,
                max_iter: int = 500, certify: bool = False) -> OscillationResult:
    """omega(Q, S) for a piecewise constant S.

    Starts are the pieces' basis vectors, then seeded random unit vectors;
    ties keep the first maximiser found.
    """
    rng = np.random.default_rng(seed)
    candidates = [B[:, i] for B in part.bases for i in range(B.shape[1])][:starts]
    while len(candidates) < starts:
        v = rng.normal(size=part.m) + 1j * rng.normal(size=part.m)
        candidates.append(v / np.linalg.norm(v))
    best, best_u, total = -math.inf, None, 0
    for u0 in candidates:
        u, value, its = _fixed_point(part, np.asarray(u0, dtype=complex), tol, max_iter, 1e-300)
        total += its
        if value > best + 1e-15:
            best, best_u = float(value), u
    result = OscillationResult(_omega_from_objective(best), best_u, total)
    if certify and part.m <= 3:
        result.oracle_gap = abs(result.omega - oscillation_oracle(part))
    return result


def _sphere_points(m: int, angles: np.ndarray) -> np.ndarray:
    """Phase-reduced unit vectors: first coordinate real and non-negative."""
    if m == 2:
        a, b = angles[..., 0], angles[..., 1]
        return np.stack([np.cos(a) + 0j, np.exp(1j * b) * np.sin(a)], axis=-1)
    a, b, c, d = (angles[..., i] for i in range(4))
    return np.stack(
        [np.cos(a) + 0j, np.exp(1j * b) * np.sin(a) * np.cos(c), np.exp(1j * d) * np.sin(a) * np.sin(c)],
        axis=-1,
    )


def oscillation_oracle(part: SubspacePartition, resolution: float = 0.02, coarse: float = 0.1,
                       keep: int = 8, final: float = 1e-7) -> float:
    """Brute-force omega by a sphere grid followed by local zooming.

    For ``m = 2`` the initial grid already has spacing ``resolution``; for
    ``m = 3`` a full grid at that spacing is too large, so a ``coarse`` grid
    seeds the zoom instead.
    """
    m = part.m
    if m > 3:
        raise DimensionTooLarge(f"oracle supports m <= 3, got {m}")
    if m == 1:
        return _omega_from_objective(part.objective(np.ones((1, 1), dtype=complex))[0])
    step = resolution if m == 2 else coarse
    half = np.arange(0.0, math.pi / 2 + 1e-12, step)
    full = np.arange(0.0, 2 * math.pi, step)
    axes = [half, full] if m == 2 else [half, full, half, full]
    head = axes[0]

    def chunk(i):
        mesh = np.meshgrid(np.array([head[i]]), *axes[1:], indexing="ij")
        ang = np.stack([g.ravel() for g in mesh], axis=-1)
        vals = part.objective(_sphere_points(m, ang))
        top = np.argsort(vals)[-keep:]
        return ang[top], vals[top]

    pieces = parallel_map(chunk, range(len(head)))
    angs = np.concatenate([p[0] for p in pieces])
    vals = np.concatenate([p[1] for p in pieces])
    order = np.argsort(vals)[::-1][:keep]
    seeds = angs[order]
    best = float(vals[order[0]])
    dim = seeds.shape[1]
    offsets = np.array(list(itertools.product(range(-3, 4), repeat=dim)), dtype=float)
    while step > final:
        new_seeds = []
        for s in seeds:
            local = s + offsets * (step / 3)
            lv = part.objective(_sphere_points(m, local))
            k = int(np.argmax(lv))
            best = max(best, float(lv[k]))
            new_seeds.append(local[k])
        seeds = np.array(new_seeds)
        step /= 3
    # the axis-aligned zoom can stall on oblique ridges; polish in angle space
    ranked = seeds[np.argsort(-part.objective(_sphere_points(m, seeds)))]
    for s in ranked[:2]:
        res = minimize(lambda a: -part.objective(_sphere_points(m, a)), s, method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-16, "maxiter": 1500})
        best = max(best, float(-res.fun))
    return _omega_from_objective(best)


def lower_bound_delta_eta(part: SubspacePartition) -> tuple[float, float, float]:
    """(delta, eta, sqrt(delta * eta)) for the pairwise-angle lower bound.

    One-dimensional pieces give the exact delta; larger pieces use the
    operator norm of ``P_k P_j`` which can only make delta smaller.
    """
    eta = min(part.weights)
    if len(part) < 2:
        return 0.0, eta, 0.0
    worst = 0.0
    for j, Bj in enumerate(part.bases):
        best_k = math.inf
        for k, Bk in enumerate(part.bases):
            if k == j:
                continue
            M = Bk.conj().T @ Bj
            cos = np.linalg.norm(M) if Bj.shape[1] == 1 else np.linalg.norm(M, 2)
            best_k = min(best_k, float(cos))
        worst = max(worst, best_k)
    delta = 1.0 - worst
    if delta < 1e-12:  # shared direction up to rounding
        delta = 0.0
    return delta, eta, math.sqrt(delta * eta)


# --- good grid, oscillating potentials ----------------------------------------------


@dataclass(frozen=True)
class TriadicGoodGrid:
    """Centered cubes refined towards infinity.

    The unit cube ``Q(c, 1)``, ``c`` integer, is split into ``base^L``
    cubes per axis with ``L = floor(log_base(1 + |c|_inf))``.  With an odd
    base, centered cubes of side ``base^-k`` nest, so every lattice cube
    ``Q(x base^-k, base^-k)`` far enough out is a union of grid cells.
    """

    dim: int
    base: int = 3

    def __post_init__(self):
        if self.base < 3 or self.base % 2 == 0:
            raise ValueError("base must be an odd integer >= 3")

    def level(self, c) -> int:
        r = int(np.max(np.abs(c))) if np.size(c) else 0
        L = 0
        while self.base ** (L + 1) <= 1 + r:
            L += 1
        return L

    def scale(self, k: int) -> float:
        return float(self.base) ** (-k)

    def cell_of(self, x) -> tuple[np.ndarray, float]:
        """Center and side of the grid cell containing ``x``."""
        x = np.asarray(x, dtype=float)
        c = np.floor(x + 0.5)
        s = self.scale(self.level(c))
        center = c + s * np.floor((x - c) / s + 0.5)
        return center, s


def _slab_fractions(part: SubspacePartition, lo: float, hi: float) -> np.ndarray:
    """Share of each pattern piece within ``[lo, hi]`` (normalised coordinate in [-1/2, 1/2])."""
    edges = np.concatenate([[0.0], np.cumsum(part.weights)]) - 0.5
    return np.clip(np.minimum(edges[1:], hi) - np.maximum(edges[:-1], lo), 0.0, None)


@dataclass
class PatternPotential:
    """V(x) = nu(x) times the projection onto the orthogonal complement of T_Q(x)."""

    pattern: SubspacePartition
    nu: Callable
    grid: TriadicGoodGrid

    def piece_index(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        edges = np.cumsum(self.pattern.weights)[:-1] - 0.5
        out = np.empty(len(pts), dtype=int)
        for i, x in enumerate(pts):
            center, s = self.grid.cell_of(x)
            out[i] = int(np.searchsorted(edges, (x[0] - center[0]) / s, side="right"))
        return out

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        idx = self.piece_index(pts)
        m = self.pattern.m
        comp = [np.eye(m) - B @ B.conj().T for B in self.pattern.bases]
        nu = np.broadcast_to(np.asarray(self.nu(pts), dtype=float), (len(pts),))
        V = np.stack([comp[i] for i in idx]) * nu[:, None, None]
        return V.real if np.all(np.abs(V.imag) < 1e-15) else V


def build_potential(pattern: SubspacePartition, nu: Callable, dim: int = 1, base: int = 3) -> PatternPotential:
    """Oscillating potential built from ``pattern`` laid out as slabs along the first axis."""
    return PatternPotential(pattern, nu, TriadicGoodGrid(dim, base))


def cube_partition(potential: PatternPotential, center, side: float) -> SubspacePartition:
    """Restriction of the pattern map to the cube ``Q(center, side)`` as a partition."""
    grid, pattern = potential.grid, potential.pattern
    center = np.atleast_1d(np.asarray(center, dtype=float))
    lo, hi = center - side / 2, center + side / 2
    totals = np.zeros(len(pattern))
    units = [range(int(math.floor(a + 0.5)), int(math.floor(b + 0.5 - 1e-12)) + 1) for a, b in zip(lo, hi)]
    for c in itertools.product(*units):
        c = np.array(c, dtype=float)
        s = grid.scale(grid.level(c))
        ulo, uhi = np.maximum(lo, c - 0.5), np.minimum(hi, c + 0.5)
        if np.any(uhi <= ulo):
            continue
        cross = float(np.prod(uhi[1:] - ulo[1:]))
        first = math.floor((ulo[0] - (c[0] - 0.5)) / s + 1e-9)
        last = math.ceil((uhi[0] - (c[0] - 0.5)) / s - 1e-9)
        for i in range(first, last):
            cell_lo = c[0] - 0.5 + i * s
            a = (max(ulo[0], cell_lo) - cell_lo) / s - 0.5
            b = (min(uhi[0], cell_lo + s) - cell_lo) / s - 0.5
            if b > a:
                totals += _slab_fractions(pattern, a, b) * s * cross
    keep = totals > 1e-15 * totals.sum()
    return SubspacePartition.from_spans(totals[keep], [B for B, k in zip(pattern.bases, keep) if k])


@dataclass
class ShellOscillation:
    radius: float
    omega_min: float
    cubes: int


def asymptotic_oscillation(potential: PatternPotential, ell: float, shells: Sequence[float],
                           per_shell: int = 64) -> list[ShellOscillation]:
    """Minimum of omega over lattice cubes ``Q(x ell, ell)`` on each sup-norm shell."""
    dim = potential.grid.dim
    out = []
    for R in shells:
        n = int(round(R / ell))
        ring = [x for x in itertools.product(range(-n, n + 1), repeat=dim) if max(map(abs, x)) == n]
        if len(ring) > per_shell:
            ring = [ring[i] for i in np.linspace(0, len(ring) - 1, per_shell).astype(int)]
        omegas = [oscillation(cube_partition(potential, np.array(x) * ell, ell)).omega for x in ring]
        out.append(ShellOscillation(float(R), float(min(omegas)), len(ring)))
    return out


# --- cubes and matrix A_infinity diagnostics ----------------------------------------------------


@dataclass(frozen=True)
class Cube:
    center: tuple
    side: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        if self.side <= 0:
            raise ValueError("side must be positive")

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def lower(self) -> np.ndarray:
        return np.array(self.center) - self.side / 2

    @property
    def volume(self) -> float:
        return self.side**self.dim

    def children(self) -> list["Cube"]:
        q = self.side / 4
        return [Cube(tuple(np.array(self.center) + q * np.array(s)), self.side / 2)
                for s in itertools.product((-1, 1), repeat=self.dim)]

    def cells(self, n: int) -> tuple[np.ndarray, float]:
        """Centers of the ``n^d`` congruent subcells and their side."""
        s = self.side / n
        axes = [lo + s * (np.arange(n) + 0.5) for lo in self.lower]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=-1), s


def _gauss_cell_integrals(potential, centers: np.ndarray, side: float, order: int) -> np.ndarray:
    """Integral of ``potential`` over each cube ``Q(center, side)`` by tensor Gauss-Legendre."""
    x, w = np.polynomial.legendre.leggauss(order)
    d = centers.shape[1]
    nodes = np.array(list(itertools.product(x, repeat=d))) * side / 2
    weights = np.prod(np.array(list(itertools.product(w, repeat=d))), axis=1) * (side / 2) ** d
    pts = (centers[:, None, :] + nodes[None, :, :]).reshape(-1, d)
    vals = np.asarray(potential(pts)).reshape(len(centers), len(nodes), *np.shape(potential(pts[:1]))[1:])
    return np.einsum("cn...,n->c...", vals, weights)


def matrix_geq(A, B, tol: float = 1e-10) -> bool:
    """A >= B in the Hermitian order, up to ``tol * |A|``."""
    D = np.asarray(A) - np.asarray(B)
    scale = max(np.linalg.norm(A, 2), np.finfo(float).tiny)
    return bool(np.linalg.eigvalsh(D)[0] >= -tol * scale)


def _psd_sqrt(A):
    vals, vecs = np.linalg.eigh(A)
    return (vecs * np.sqrt(np.clip(vals, 0, None))) @ vecs.conj().T


def a2_constant(potential, cube: Cube, cells: int = 32, order: int = 4, det_floor: float = 1e-12) -> float:
    """|| avg(W)^{1/2} avg(W^{-1})^{1/2} || on one cube."""
    centers, s = cube.cells(cells)
    x, w = np.polynomial.legendre.leggauss(order)
    d = cube.dim
    nodes = np.array(list(itertools.product(x, repeat=d))) * s / 2
    weights = np.prod(np.array(list(itertools.product(w, repeat=d))), axis=1) * (s / 2) ** d
    pts = (centers[:, None, :] + nodes[None, :, :]).reshape(-1, d)
    W = np.asarray(potential(pts))
    dets = np.linalg.det(W).real
    norms = np.linalg.norm(W, axis=(-2, -1)) ** W.shape[-1]
    if np.any(dets <= det_floor * np.maximum(norms, 1e-300)):
        raise SingularInverse("potential is not invertible on the cube")
    Winv = np.linalg.inv(W)
    ww = np.tile(weights, len(centers)) / cube.volume
    avgW = np.einsum("n...,n->...", W, ww)
    avgWinv = np.einsum("n...,n->...", Winv, ww)
    return float(np.linalg.norm(_psd_sqrt(avgW) @ _psd_sqrt(avgWinv), 2))


@dataclass
class CubeDiagnostics:
    cube: Cube
    def1_fraction: float
    def1_pass: bool
    def2_worst_margin: float
    def2_pass: bool


@dataclass
class MuckenhouptReport:
    rows: list
    def1_pass: bool
    def2_pass: bool
    a2: float | None
    parameters: dict = field(default_factory=dict)


def muckenhoupt_diagnostics(potential, cubes: Sequence[Cube], delta: float, c: float, alpha: float,
                            beta: float, cells: int = 64, subsets: int = 200, seed: int = 0,
                            order: int = 4, include_a2: bool = True) -> MuckenhouptReport:
    """Check both matrix A_infinity definitions on a cube family.

    Each cube is cut into ``cells`` congruent cells (per axis) whose exact or
    Gauss integrals are summed.  The first definition samples the cell centers
    for the set ``{V >= delta * avg V}``; the second draws random unions of at
    least ``alpha |Q|`` cells, so a failure is definitive and a pass is
    evidence at this resolution.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for cube in cubes:
        centers, s = cube.cells(cells)
        ints = _gauss_cell_integrals(potential, centers, s, order)
        total = ints.sum(axis=0)
        avg = total / cube.volume
        vals = np.asarray(potential(centers))
        hits = np.array([matrix_geq(v, delta * avg) for v in vals])
        fraction = float(hits.mean())
        n = len(centers)
        need = int(math.ceil(alpha * n - 1e-12))
        scale = max(np.linalg.norm(total, 2), np.finfo(float).tiny)
        worst = math.inf
        for trial in range(subsets):
            size = need if trial % 2 == 0 else int(rng.integers(need, n + 1))
            pick = rng.choice(n, size=size, replace=False)
            part = ints[pick].sum(axis=0)
            worst = min(worst, float(np.linalg.eigvalsh(part - beta * total)[0]) / scale)
        rows.append(CubeDiagnostics(cube, fraction, fraction >= c, worst, worst >= -1e-10))
    a2 = None
    if include_a2:
        a2 = max(a2_constant(potential, q) for q in cubes)
    return MuckenhouptReport(
        rows,
        all(r.def1_pass for r in rows),
        all(r.def2_pass for r in rows),
        a2,
        {"delta": delta, "c": c, "alpha": alpha, "beta": beta},
    )


def doubling_constant(potential, pairs, cells: int = 16, order: int = 4) -> float:
    """Smallest D with int_Q V <= D int_{Q'} V over the given (Q, Q') pairs."""
    worst = 0.0
    for Q, Qp in pairs:
        IQ = _gauss_cell_integrals(potential, *Q.cells(cells), order).sum(axis=0)
        IQp = _gauss_cell_integrals(potential, *Qp.cells(cells), order).sum(axis=0)
        vals, vecs = np.linalg.eigh(IQp)
        if vals[0] <= 1e-14 * max(vals[-1], 1e-300):
            return math.inf
        inv_sqrt = (vecs / np.sqrt(vals)) @ vecs.conj().T
        worst = max(worst, float(np.linalg.eigvalsh(inv_sqrt @ IQ @ inv_sqrt)[-1]))
    return worst


# --- good / bad cubes ------------------------------------------------------------------


class CubeClass(str, enum.Enum):
    GOOD = "Good"
    BAD = "Bad"
    ISOTROPIC = "Isotropic"


@dataclass
class CubeClassification:
    tag: CubeClass
    witness: Cube | None
    isotropic: bool
    depth: int
    trace_spread: float | None = None


def _rational(v) -> sympy.Rational:
    return sympy.Rational(Fraction(v).limit_denominator(10**12))


def _clean_sign(poly, symbols, cube: Cube, samples: int) -> int:
    """Sign of ``poly`` on the closed cube if it has no zero there, else 0."""
    if len(symbols) == 1:
        x = symbols[0]
        a = _rational(cube.lower[0])
        b = a + _rational(cube.side)
        P = sympy.Poly(poly, x)
        if P.is_zero:
            return 0
        if P.degree() > 0 and P.count_roots(a, b) > 0:
            return 0
        return int(sympy.sign(P.eval((a + b) / 2)))
    fn = sympy.lambdify(symbols, poly, "numpy")
    axes = [np.linspace(lo, lo + cube.side, samples) for lo in cube.lower]
    mesh = np.meshgrid(*axes, indexing="ij")
    vals = np.broadcast_to(np.asarray(fn(*mesh), dtype=float), mesh[0].shape)
    if np.all(vals > 0):
        return 1
    if np.all(vals < 0):
        return -1
    return 0


def _trace_spread(trace_fn, cube: Cube, samples: int) -> float:
    axes = [np.linspace(lo, lo + cube.side, samples) for lo in cube.lower]
    mesh = np.meshgrid(*axes, indexing="ij")
    t = np.broadcast_to(np.asarray(trace_fn(*mesh), dtype=float), mesh[0].shape)
    lo = float(t.min())
    return math.inf if lo <= 0 else float(t.max()) / lo


def classify_cube(potential: MatrixPotential, cube: Cube, max_depth: int = 10,
                  samples: int = 9) -> CubeClassification:
    """Good/bad dichotomy for a real symmetric 2 x 2 polynomial potential.

    A dyadic breadth-first search looks for a subcube on which
    ``tr^2/8 - det`` has a strict sign (and, when it is not identically zero,
    ``tr^2/4 - det`` too).  Good means ``det > tr^2/8`` there, hence
    ``mu <= 8 lambda``.  Bad cubes are refined until ``sup tr <= 2 inf tr``,
    which gives ``sup mu <= 4 inf mu``.
    """
    if potential.size != 2:
        raise ValueError("classification needs a 2 x 2 potential")
    if cube.dim != potential.dim:
        raise ValueError("cube and potential dimensions differ")
    tr, det = potential.trace_poly, potential.det_poly
    g1 = sympy.expand(tr**2 / 8 - det)
    g2 = sympy.expand(tr**2 / 4 - det)
    isotropic = g2 == 0
    if tr == 0:
        return CubeClassification(CubeClass.ISOTROPIC, cube, True, 0)
    target = g1 if isotropic else sympy.expand(g1 * g2)
    trace_fn = sympy.lambdify(potential.symbols, tr, "numpy")
    queue = deque([(cube, 0)])
    bad_seed = None
    while queue:
        q, depth = queue.popleft()
        if _clean_sign(target, potential.symbols, q, samples) != 0:
            sign = _clean_sign(g1, potential.symbols, q, samples)
            if sign < 0:
                return CubeClassification(CubeClass.GOOD, q, bool(isotropic), depth)
            if sign > 0:
                bad_seed = (q, depth)
                break
        if depth < max_depth:
            queue.extend((child, depth + 1) for child in q.children())
    if bad_seed is None:
        raise NoCleanSubcube(f"no subcube of constant sign within depth {max_depth}")
    queue = deque([bad_seed])
    while queue:
        q, depth = queue.popleft()
        spread = _trace_spread(trace_fn, q, samples)
        if spread <= 2:
            return CubeClassification(CubeClass.BAD, q, bool(isotropic), depth, spread)
        if depth < max_depth:
            queue.extend((child, depth + 1) for child in q.children())
    raise NoCleanSubcube(f"trace does not settle within depth {max_depth}")
