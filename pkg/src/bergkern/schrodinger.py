"""Magnetic matrix Schroedinger operators and the weighted Kohn energy.

Two families of tools live here.

Lattice operators: ``-Delta_A + V`` acting on C^m-valued grid functions
with Dirichlet boundary, magnetic potential entering through link phases
``exp(-i h A(midpoint))`` so that the forward difference approximates
``(d - iA) f``.

Energy forms: for a weight ``phi`` on C^n and a compactly supported test
(0,1)-form the Morrey-Kohn-Hoermander energy
``sum |d u_j / d zbar_k|^2 e^{-2 phi} + 2 (H u, u) e^{-2 phi}`` is
integrated by tensor-product trapezoid rules.  Writing ``u = e^phi v`` turns
it into ``sum |(d_zbar_k + d_zbar_k phi) v_j|^2 + 2 (H v, v)``, which equals
``1/4`` of the magnetic Schroedinger energy with ``A = (-phi_y, phi_x)`` per
complex coordinate and ``V = 8 H - 4 tr(H) I``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import sympy
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh, splu

from .errors import BudgetExceeded, NoConvergence, NonPositiveRatio, SupportEscapesBox
from ._parallel import parallel_map
from .grid import Grid
from .newton_diagram import HomogeneousProfile
from .weight_eval import PolyWeight

# --- matrix potentials -----------------------------------------------------------


def default_variables(dim: int) -> tuple[str, ...]:
    if dim <= 3:
        return ("x", "y", "z")[:dim]
    return tuple(f"x{i + 1}" for i in range(dim))


class MatrixPotential:
    """Hermitian matrix of polynomials in ``dim`` real variables."""

    def __init__(self, entries, dim: int = 1, variables: Sequence[str] | None = None):
        names = tuple(variables) if variables is not None else default_variables(dim)
        self.symbols = sympy.symbols(names, real=True)
        if not isinstance(self.symbols, tuple):
            self.symbols = (self.symbols,)
        local = {name: s for name, s in zip(names, self.symbols)}
        rows = [[sympy.sympify(e, locals=local) for e in row] for row in entries]
        self.matrix = sympy.Matrix(rows)
        if self.matrix.rows != self.matrix.cols:
            raise ValueError("potential must be square")
        stray = self.matrix.free_symbols - set(self.symbols)
        if stray:
            raise ValueError(f"unknown variables {sorted(map(str, stray))}")
        if sympy.simplify(self.matrix - self.matrix.H) != sympy.zeros(*self.matrix.shape):
            raise ValueError("potential is not Hermitian")
        self.dim = len(self.symbols)
        self.size = self.matrix.rows
        self._entry_fns = [
            [sympy.lambdify(self.symbols, self.matrix[i, j], "numpy") for j in range(self.size)]
            for i in range(self.size)
        ]

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        cols = [pts[:, k] for k in range(self.dim)]
        out = np.zeros((len(pts), self.size, self.size), dtype=complex)
        for i in range(self.size):
            for j in range(self.size):
                out[:, i, j] = np.broadcast_to(self._entry_fns[i][j](*cols), (len(pts),))
        if np.all(out.imag == 0):
            return out.real
        return out

    @property
    def trace_poly(self):
        return sympy.expand(self.matrix.trace())

    @property
    def det_poly(self):
        return sympy.expand(self.matrix.det())

    def cube_integral(self, center, side) -> sympy.Matrix:
        """Exact integral over the cube of the given center and side."""
        center = [sympy.nsimplify(c, rational=True) for c in np.atleast_1d(center)]
        side = sympy.nsimplify(side, rational=True)
        if len(center) != self.dim:
            raise ValueError("center dimension mismatch")
        out = self.matrix
        for s, c in zip(self.symbols, center):
            out = out.applyfunc(lambda e: sympy.integrate(e, (s, c - side / 2, c + side / 2)))
        return out.applyfunc(sympy.nsimplify)

    def min_eigenvalue(self, points) -> np.ndarray:
        return np.linalg.eigvalsh(self(points))[:, 0]


def _potential_values(potential, points: np.ndarray, components: int | None) -> np.ndarray:
    if potential is None:
        m = components or 1
        return np.zeros((len(points), m, m))
    if isinstance(potential, (int, float)):
        m = components or 1
        return float(potential) * np.broadcast_to(np.eye(m), (len(points), m, m)).copy()
    vals = np.asarray(potential(points))
    if vals.ndim == 1:
        vals = vals[:, None, None]
    return vals


# --- lattice operators ------------------------------------------------------------


@dataclass
class GridOperator:
    grid: Grid
    components: int
    matrix: sp.csr_matrix
    magnetic: Callable | None
    factor: float
    interior: np.ndarray = field(repr=False)

    @property
    def interior_points(self) -> np.ndarray:
        return self.grid.points[self.interior]

    def quadratic_form(self, psi) -> float:
        psi = np.asarray(psi).ravel()
        return float(np.real(np.vdot(psi, self.matrix @ psi))) * self.grid.cell_volume


def _difference_operators(grid: Grid, magnetic):
    """Per-axis magnetic forward differences from interior nodes to edges."""
    shape = grid.shape
    full = np.arange(grid.size).reshape(shape)
    interior_mask = np.zeros(shape, bool)
    interior_mask[tuple(slice(1, n - 1) for n in shape)] = True
    interior = full[interior_mask]
    col_of = -np.ones(grid.size, dtype=int)
    col_of[interior] = np.arange(len(interior))
    pts = grid.points
    ops = []
    for k in range(grid.dim):
        lo = [slice(None)] * grid.dim
        hi = [slice(None)] * grid.dim
        lo[k] = slice(0, shape[k] - 1)
        hi[k] = slice(1, shape[k])
        a = full[tuple(lo)].ravel()
        b = full[tuple(hi)].ravel()
        h = grid.spacing[k]
        if magnetic is None:
            phase = np.ones(len(a), dtype=complex)
        else:
            mid = 0.5 * (pts[a] + pts[b])
            phase = np.exp(-1j * h * np.asarray(magnetic(mid))[:, k])
        rows = np.arange(len(a))
        ca, cb = col_of[a], col_of[b]
        ka, kb = ca >= 0, cb >= 0
        data = np.concatenate([phase[kb] / h, -np.ones(ka.sum()) / h])
        r = np.concatenate([rows[kb], rows[ka]])
        c = np.concatenate([cb[kb], ca[ka]])
        ops.append(sp.csr_matrix((data, (r, c)), shape=(len(a), len(interior))))
    return ops, interior


def assemble_operator(potential, magnetic, grid: Grid, factor: float = 1.0,
                      components: int | None = None, budget: int = 2_000_000) -> GridOperator:
    """Sparse Hermitian ``factor * (-Delta_A + V)`` on the interior nodes of ``grid``."""
    interior_count = int(np.prod([max(n - 2, 0) for n in grid.shape]))
    m = components or (potential.size if isinstance(potential, MatrixPotential) else None)
    probe = grid.points[:1]
    if m is None:
        m = _potential_values(potential, probe, None).shape[-1]
    if interior_count * m > budget:
        raise BudgetExceeded(f"{interior_count * m} unknowns exceed the budget {budget}")
    ops, interior = _difference_operators(grid, magnetic)
    kinetic = sum((D.conj().T @ D for D in ops), sp.csr_matrix((len(interior),) * 2))
    V = _potential_values(potential, grid.points[interior], m)
    blocks = sp.block_diag(list(V), format="csr") if m > 1 else sp.diags(V[:, 0, 0])
    H = sp.kron(kinetic, sp.identity(m), format="csr") + blocks
    if magnetic is None and np.isrealobj(V):
        H = H.real
    H = (factor * H).tocsr()
    return GridOperator(grid, m, H, magnetic, factor, interior)



def weight_operator(weight: PolyWeight, grid: Grid, factor: float = 0.25, budget: int = 2_000_000) -> GridOperator:
    """Lattice ``factor * (-Delta_A + V)`` with ``A``, ``V`` derived from ``weight``."""
    if grid.dim != 2 * weight.dim:
        raise ValueError("grid dimension must be twice the complex dimension")
    return assemble_operator(
        lambda P: kohn_potential(weight, _complex_coords(P)),
        lambda P: weight.magnetic(_complex_coords(P)),
        grid, factor, components=weight.dim, budget=budget,
    )

@dataclass
class SpectralReport:
    eigenvalues: np.ndarray
    residuals: np.ndarray
    iterations: int
    grid_shape: tuple
    spacing: tuple
    vectors: np.ndarray | None = field(default=None, repr=False)


def _count_below(H, sigma, M):
    """Number of eigenvalues of the pencil (H, M) below ``sigma``.

    A symmetric-mode factorisation without pivoting is an LDL^H in disguise,
    so Sylvester's law reads the count off the signs of U's diagonal.
    Returns None when SuperLU had to permute asymmetrically.
    """
    n = H.shape[0]
    A = (H - sigma * (sp.identity(n) if M is None else M)).tocsc()
    try:
        lu = splu(A, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0, options={"SymmetricMode": True})
    except RuntimeError:
        return None
    if not np.array_equal(lu.perm_r, lu.perm_c):
        return None
    return int((lu.U.diagonal().real < 0).sum())


def _shift_below_spectrum(H, M, Mdiag, lower, rng, rtol=1e-10):
    """Shift within ``rtol`` below the lowest eigenvalue, by bisection on inertia.

    Shift-invert Lanczos then resolves clusters of nearly equal eigenvalues
    sitting on top of the ground state, which a distant shift cannot.
    """
    n = H.shape[0]
    lo = lower
    lu = splu((H - lo * (sp.identity(n) if M is None else M)).tocsc())
    x = rng.standard_normal(n).astype(np.result_type(H.dtype, float))
    for _ in range(20):
        x = lu.solve(x * (1 if Mdiag is None else Mdiag))
        x /= np.linalg.norm(x)
    hi = float(np.real(np.vdot(x, H @ x)) / np.real(np.vdot(x, x if Mdiag is None else Mdiag * x)))
    hi += rtol * max(1.0, abs(hi))
    if _count_below(H, lo, M) != 0 or _count_below(H, hi, M) in (None, 0):
        return lo
    while hi - lo > rtol * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        c = _count_below(H, mid, M)
        if c is None:
            break
        if c == 0:
            lo = mid
        else:
            hi = mid
    return lo


def _deflated_shift_invert(H, k, Mdiag, seed):
    """Lowest eigenpairs one at a time, deflating those already found.

    Landau-type spectra carry huge exactly degenerate clusters; a Krylov
    space sees a single direction of such an eigenspace, so asking for
    several pairs at once stalls while one-at-a-time deflation does not.
    """
    n = H.shape[0]
    diag = H.diagonal().real
    offdiag = np.asarray(abs(H).sum(axis=1)).ravel() - np.abs(diag)
    lower = diag - offdiag if Mdiag is None else (diag - offdiag) / Mdiag
    M = None if Mdiag is None else sp.diags(Mdiag).tocsc()
    rng = np.random.default_rng(seed)
    sigma = _shift_below_spectrum(H, M, Mdiag, float(lower.min()) - 1.0, rng)
    shifted = (H - sigma * (sp.identity(n) if M is None else M)).tocsc()
    lu = splu(shifted)
    dtype = np.result_type(shifted.dtype, float)
    found: list[np.ndarray] = []
    counter = {"n": 0}

    def project(x):
        for v in found:
            x = x - v * np.vdot(v, x if Mdiag is None else Mdiag * x)
        return x

    def solve(y):
        counter["n"] += 1
        return project(lu.solve(np.asarray(y, dtype=dtype)))

    OPinv = LinearOperator((n, n), matvec=solve, dtype=dtype)
    vals = []
    for _ in range(k):
        v0 = project(rng.standard_normal(n).astype(dtype))
        try:
            w, V = eigsh(H, k=1, M=M, sigma=sigma, which="LM", OPinv=OPinv, v0=v0, tol=1e-14, maxiter=1000)
        except ArpackNoConvergence as exc:
            raise NoConvergence(str(exc), counter["n"]) from exc
        v = project(V[:, 0])
        v = v / np.sqrt(np.real(np.vdot(v, v if Mdiag is None else Mdiag * v)))
        found.append(v)
        vals.append(float(w[0]))
    order = np.argsort(vals)
    return np.array(vals)[order], np.stack(found, axis=1)[:, order], counter["n"]


def extremal_eigenvalues(op, k: int = 1, mass=None, seed: int = 0, dense_limit: int = 2500,
                         residual_tol: float = 1e-8) -> SpectralReport:
    """``k`` smallest eigenpairs of ``H v = lambda M v`` with ``M`` diagonal positive."""
    H = op.matrix if isinstance(op, GridOperator) else sp.csr_matrix(op)
    n = H.shape[0]
    Mdiag = None if mass is None else np.asarray(mass, dtype=float).ravel()
    if Mdiag is not None and (len(Mdiag) != n or np.any(Mdiag <= 0)):
        raise ValueError("mass must be a positive diagonal of matching size")
    iterations = 0
    if n <= dense_limit:
        A = H.toarray()
        if Mdiag is not None:
            s = 1 / np.sqrt(Mdiag)
            A = s[:, None] * A * s[None, :]
        vals, vecs = np.linalg.eigh(A)
        vals, vecs = vals[:k], vecs[:, :k]
        if Mdiag is not None:
            vecs = vecs * s[:, None]
    else:
        vals, vecs, iterations = _deflated_shift_invert(H, k, Mdiag, seed)
    res = []
    for i in range(len(vals)):
        v = vecs[:, i]
        Mv = v if Mdiag is None else Mdiag * v
        res.append(np.linalg.norm(H @ v - vals[i] * Mv) / np.linalg.norm(v))
    res = np.array(res)
    # absolute residuals bottom out near eps * |H|; scale by the eigenvalue size
    if np.any(res > residual_tol * np.maximum(1.0, np.abs(vals))):
        raise NoConvergence(f"residuals {res.max():.3g} above tolerance", iterations)
    grid = op.grid if isinstance(op, GridOperator) else None
    return SpectralReport(
        eigenvalues=np.asarray(vals, dtype=float),
        residuals=res,
        iterations=iterations,
        grid_shape=grid.shape if grid else (n,),
        spacing=tuple(grid.spacing) if grid else (),
        vectors=vecs,
    )


# --- test forms and energies -------------------------------------------------------


@dataclass
class TestForm:
    """Bump times polynomial coefficients of a (0,1)-form on C^n.

    Real coordinates are interleaved ``(x_1, y_1, ..., x_n, y_n)``.  Component
    ``j`` is ``b(|X - c| / R) * sum_i coef_i * prod ((X - c) / R)^{e_i}`` with
    ``b(s) = exp(-1 / (1 - s^2))`` on ``s < 1``.
    """

    __test__ = False

    center: np.ndarray
    radius: float
    exponents: list
    coefs: list

    @property
    def n(self) -> int:
        return len(self.center) // 2

    def scaled(self, factor: complex) -> "TestForm":
        return TestForm(self.center, self.radius, self.exponents, [[c * factor for c in row] for row in self.coefs])

    def evaluate(self, X):
        """Values (..., n) and real partials (..., n, 2n) of every component."""
        Y = (X - self.center) / self.radius
        s2 = (Y**2).sum(axis=-1)
        inside = s2 < 1
        safe = np.where(inside, 1 - s2, 1.0)
        bump = np.where(inside, np.exp(-1.0 / safe), 0.0)
        dbump = np.where(inside, bump * (-2.0 / safe**2), 0.0)[..., None] * Y / self.radius
        d = X.shape[-1]
        top = max(int(np.max(e)) for e in self.exponents)
        powers = Y[..., None] ** np.arange(top + 1)  # (..., d, top+1)
        cache = {}
        vals, grads = [], []
        for exps, coefs in zip(self.exponents, self.coefs):
            key = tuple(map(tuple, exps))
            if key not in cache:
                E = np.asarray(exps)
                factors = [powers[..., c, E[:, c]] for c in range(d)]  # each (..., K)
                mono = np.prod(factors, axis=0)
                dmono = []
                for i in range(d):
                    lowered = powers[..., i, np.maximum(E[:, i] - 1, 0)] * E[:, i]
                    rest = np.prod([f for c, f in enumerate(factors) if c != i], axis=0)
                    dmono.append(lowered * rest / self.radius)
                cache[key] = (mono, np.stack(dmono, axis=-2))  # (..., K), (..., d, K)
            mono, dmono = cache[key]
            c = np.asarray(coefs)
            P = mono @ c
            dP = dmono @ c
            vals.append(bump * P)
            grads.append(dbump * P[..., None] + bump[..., None] * dP)
        return np.stack(vals, axis=-1), np.stack(grads, axis=-2)


def _complex_coords(X):
    return X[..., 0::2] + 1j * X[..., 1::2]


def _dbar(grads):
    return 0.5 * (grads[..., 0::2] + 1j * grads[..., 1::2])


def _check_box(form: TestForm, box):
    if box is None:
        return
    lo, hi = (np.asarray(b, dtype=float) for b in box)
    if np.any(form.center - form.radius < lo - 1e-12) or np.any(form.center + form.radius > hi + 1e-12):
        raise SupportEscapesBox("test form support leaves the quadrature box")


def _integrate(form: TestForm, points: int, integrand):
    """Trapezoid rule over the bounding cube of the support, summed slab by slab."""
    d = len(form.center)
    nodes = np.linspace(-form.radius, form.radius, points)
    h = nodes[1] - nodes[0]
    mesh = np.meshgrid(*([nodes] * (d - 1)), indexing="ij")
    rest = np.stack([m.ravel() for m in mesh], axis=-1) if d > 1 else np.zeros((1, 0))
    totals = None
    for t in nodes[1:-1]:
        X = np.concatenate([np.full((len(rest), 1), t), rest], axis=1) + form.center
        vals = np.asarray(integrand(X))
        part = vals.sum(axis=0) * h**d
        totals = part if totals is None else totals + part
    return totals


def _mkh_density(weight: PolyWeight, form: TestForm, X, representation: str):
    Z = _complex_coords(X)
    u, grads = form.evaluate(X)
    du = _dbar(grads)  # (..., n_components, n)
    H = weight.hessian(Z)
    quad = np.real(np.einsum("...j,...jk,...k->...", np.conj(u), H, u))
    if representation == "conjugated":
        dphi = weight.dbar(Z)
        grad_terms = np.abs(du + dphi[..., None, :] * u[..., :, None]) ** 2
        energy = grad_terms.sum(axis=(-1, -2)) + 2 * quad
        return np.stack([energy, (np.abs(u) ** 2).sum(axis=-1)], axis=-1)
    w = np.exp(-2 * weight.value(Z))
    energy = ((np.abs(du) ** 2).sum(axis=(-1, -2)) + 2 * quad) * w
    return np.stack([energy, (np.abs(u) ** 2).sum(axis=-1) * w], axis=-1)


def energy_form(weight: PolyWeight, form: TestForm, box=None, points: int = 24,
                representation: str = "direct") -> float:
    """MKH energy of a test form.

    ``representation="direct"`` treats the form's coefficients as ``u``;
    ``"conjugated"`` treats them as ``v`` with ``u = e^phi v``.
    """
    if representation not in ("direct", "conjugated"):
        raise ValueError("representation must be 'direct' or 'conjugated'")
    _check_box(form, box)
    if form.n != weight.dim:
        raise ValueError("form and weight dimensions differ")
    E, _ = _integrate(form, points, lambda X: _mkh_density(weight, form, X, representation))
    return float(E)


def rayleigh_quotient(weight: PolyWeight, form: TestForm, points: int = 24,
                      representation: str = "direct") -> float:
    """Energy divided by the weighted L^2 norm squared."""
    E, N = _integrate(form, points, lambda X: _mkh_density(weight, form, X, representation))
    return float(E / N)


def kohn_potential(weight: PolyWeight, Z) -> np.ndarray:
    """V = 8 H - 4 tr(H) I."""
    H = weight.hessian(Z)
    tr = np.real(np.trace(H, axis1=-2, axis2=-1))
    return 8 * H - 4 * tr[..., None, None] * np.eye(weight.dim)


def _schrodinger_density(weight: PolyWeight, form: TestForm, X):
    Z = _complex_coords(X)
    v, grads = form.evaluate(X)
    A = weight.magnetic(Z)
    cov = grads - 1j * A[..., None, :] * v[..., :, None]
    kinetic = (np.abs(cov) ** 2).sum(axis=(-1, -2))
    V = kohn_potential(weight, Z)
    pot = np.real(np.einsum("...j,...jk,...k->...", np.conj(v), V, v))
    return 0.25 * (kinetic + pot)


@dataclass
class EquivalenceResult:
    mkh: float
    schrodinger: float
    discrepancy: float


def equivalence_check(weight: PolyWeight, form: TestForm, box=None, points: int = 32) -> EquivalenceResult:
    """Compare the MKH energy of ``e^phi v`` with the quarter Schroedinger energy of ``v``."""
    _check_box(form, box)
    mkh = energy_form(weight, form, None, points, representation="conjugated")
    schro = float(_integrate(form, points, lambda X: _schrodinger_density(weight, form, X)))
    scale = max(abs(mkh), abs(schro), np.finfo(float).tiny)
    return EquivalenceResult(mkh, schro, abs(mkh - schro) / scale)


def random_forms(n: int, count: int, box, seed: int, degree: int = 2,
                 radius_range=(0.6, 1.4)) -> list[TestForm]:
    """Seeded family of test forms; a prefix of a larger family equals the smaller one."""
    rng = np.random.default_rng(seed)
    lo, hi = (np.asarray(b, dtype=float) for b in box)
    d = 2 * n
    monos = [e for e in np.ndindex(*(degree + 1,) * d) if sum(e) <= degree]
    forms = []
    for _ in range(count):
        R = rng.uniform(*radius_range)
        R = min(R, 0.5 * float((hi - lo).min()))
        c = rng.uniform(lo + R, hi - R)
        exps, coefs = [], []
        for _j in range(n):
            coef = rng.normal(size=len(monos)) + 1j * rng.normal(size=len(monos))
            exps.append([list(e) for e in monos])
            coefs.append(list(coef))
        forms.append(TestForm(c, R, exps, coefs))
    return forms


@dataclass
class ScanResult:
    min_ratio: float
    argmin: int
    ratios: np.ndarray = field(repr=False)
    half_min_ratio: float = math.nan
    relative_change: float = math.nan

    @property
    def stable(self) -> bool:
        return self.relative_change < 0.2


def _mu_squared(profile: HomogeneousProfile, Z):
    s, t = (float(v) for v in profile.original_sigma_tau())
    mu = 1.0 + np.abs(Z[..., 0]) ** s + np.abs(Z[..., 1]) ** t
    return mu**2


def coercivity_ratio(profile: HomogeneousProfile, form: TestForm, points: int = 20) -> float:
    """E(e^phi v) / int mu^2 |v|^2 with mu = 1 + |z|^sigma + |w|^tau."""
    weight = PolyWeight.model(profile.source_gamma)

    def density(X):
        out = _mkh_density(weight, form, X, "conjugated")
        out[..., 1] *= _mu_squared(profile, _complex_coords(X))
        return out

    E, N = _integrate(form, points, density)
    return float(E / N)


def coercivity_scan(profile: HomogeneousProfile, family_size: int, box, seed: int = 0,
                    points: int = 20) -> ScanResult:
    """Minimum coercivity ratio over a family and over its first half."""
    forms = random_forms(2, family_size, box, seed)
    ratios = np.array(parallel_map(lambda f: coercivity_ratio(profile, f, points), forms))
    if np.any(ratios <= 0) or not np.all(np.isfinite(ratios)):
        raise NonPositiveRatio(f"non-positive coercivity ratio {ratios.min()}")
    full = float(ratios.min())
    half = float(ratios[: max(1, family_size // 2)].min())
    return ScanResult(full, int(ratios.argmin()), ratios, half, abs(half - full) / half)


# --- discreteness and diamagnetism -----------------------------------------------------


@dataclass
class DiscretenessRow:
    center: tuple
    integral: sympy.Matrix
    lam: float
    lam_exact: object
    ratio: float | None


def _exact_min_eigenvalue(M: sympy.Matrix):
    if M.is_diagonal():
        return sympy.Min(*[M[i, i] for i in range(M.rows)])
    if M.shape == (2, 2):
        tr, det = M.trace(), M.det()
        return sympy.nsimplify((tr - sympy.sqrt(tr**2 - 4 * det)) / 2)
    return None


def discreteness_profile(potential: MatrixPotential, side, centers, normalize: bool = False):
    """Smallest eigenvalue of the exact cube integral of ``potential`` per center."""
    rows = []
    for c in centers:
        c = tuple(np.atleast_1d(c).tolist())
        M = potential.cube_integral(c, side)
        exact = _exact_min_eigenvalue(M)
        lam = float(np.linalg.eigvalsh(np.array(M.evalf(30).tolist(), dtype=complex))[0])
        if exact is not None:
            lam = float(sympy.N(exact, 30))
        ratio = None
        if normalize:
            r2 = float(sum(x * x for x in c))
            ratio = lam / r2 if r2 > 0 else None
        rows.append(DiscretenessRow(c, M, lam, exact, ratio))
    return rows


@dataclass
class DiamagneticResult:
    max_violation: float
    samples: int


def diamagnetic_check(f, grad_f, magnetic, points, floor: float = 1e-8) -> DiamagneticResult:
    """max of |grad |f|| - |(grad - iA) f| over samples where |f| > floor."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    F = np.asarray(f(pts), dtype=complex)
    G = np.asarray(grad_f(pts), dtype=complex)
    A = np.zeros(G.shape) if magnetic is None else np.asarray(magnetic(pts), dtype=float)
    keep = np.abs(F) > floor
    F, G, A = F[keep], G[keep], A[keep]
    grad_abs = np.real(np.conj(F)[:, None] * G) / np.abs(F)[:, None]
    cov = G - 1j * A * F[:, None]
    gap = np.linalg.norm(grad_abs, axis=1) - np.linalg.norm(cov, axis=1)
    return DiamagneticResult(float(gap.max()) if len(gap) else -math.inf, int(keep.sum()))
