"""Closed-form evaluation of polynomial model weights and their complex Hessians.

``PolyWeight`` handles ``phi = sum_j c_j |z^{alpha_j}|^2`` on C^n with numpy
broadcasting over sample points; it backs every numerical experiment that
needs ``phi``, ``d phi / d zbar`` or the Hessian.  The functions at the
bottom specialise to model weights on C^2 given by a :class:`MonomialSet`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import RatioOutOfRange
from .newton_diagram import (
    MonomialSet,
    RegionTag,
    classify_point,
    derive_profile,
    shift_sets,
)


class PolyWeight:
    """phi(z) = sum_j c_j |z^{alpha_j}|^2 on C^n.

    Points are arrays whose last axis has length ``n`` (complex).
    An empty exponent list gives the flat weight phi == 0.
    """

    def __init__(self, exponents: Iterable[Sequence[int]], coeffs=None, dim: int | None = None):
        exps = [tuple(int(a) for a in e) for e in exponents]
        if not exps and dim is None:
            raise ValueError("flat weight needs an explicit dimension")
        self.dim = dim if dim is not None else len(exps[0])
        if any(len(e) != self.dim for e in exps):
            raise ValueError("exponents have inconsistent length")
        self.exponents = np.array(exps, dtype=int).reshape(len(exps), self.dim)
        if coeffs is None:
            coeffs = np.ones(len(exps))
        self.coeffs = np.asarray(coeffs, dtype=float)
        if np.any(self.coeffs < 0):
            raise ValueError("coefficients must be non-negative")

    @classmethod
    def model(cls, gamma: MonomialSet | Iterable[Sequence[int]]) -> "PolyWeight":
        pts = gamma.points if isinstance(gamma, MonomialSet) else list(gamma)
        return cls(pts)

    @classmethod
    def flat(cls, dim: int) -> "PolyWeight":
        return cls([], dim=dim)

    def _monomials(self, Z):
        """Yield (coeff, h, [d_k h or None]) per monomial."""
        Z = np.asarray(Z, dtype=complex)
        for c, alpha in zip(self.coeffs, self.exponents):
            h = np.ones(Z.shape[:-1], dtype=complex)
            for k, a in enumerate(alpha):
                if a:
                    h = h * Z[..., k] ** a
            grads = []
            for k, a in enumerate(alpha):
                if a == 0:
                    grads.append(None)
                    continue
                g = a * np.ones(Z.shape[:-1], dtype=complex)
                for l, b in enumerate(alpha):
                    e = b - 1 if l == k else b
                    if e:
                        g = g * Z[..., l] ** e
                grads.append(g)
            yield c, h, grads

    def value(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=complex)
        out = np.zeros(Z.shape[:-1])
        for c, h, _ in self._monomials(Z):
            out += c * np.abs(h) ** 2
        return out

    def dbar(self, Z) -> np.ndarray:
        """d phi / d zbar_k, shape (..., n)."""
        Z = np.asarray(Z, dtype=complex)
        out = np.zeros(Z.shape, dtype=complex)
        for c, h, grads in self._monomials(Z):
            for k, g in enumerate(grads):
                if g is not None:
                    out[..., k] += c * h * np.conj(g)
        return out

    def hessian(self, Z) -> np.ndarray:
        """H_{jk} = d^2 phi / dz_j dzbar_k, shape (..., n, n)."""
        Z = np.asarray(Z, dtype=complex)
        out = np.zeros(Z.shape + (self.dim,), dtype=complex)
        for c, _, grads in self._monomials(Z):
            for j, gj in enumerate(grads):
                if gj is None:
                    continue
                for k, gk in enumerate(grads):
                    if gk is not None:
                        out[..., j, k] += c * gj * np.conj(gk)
        return out

    def laplacian(self, Z) -> np.ndarray:
        H = self.hessian(Z)
        return 4.0 * np.real(np.trace(H, axis1=-2, axis2=-1))

    def real_gradient(self, Z) -> np.ndarray:
        """(d phi/dx_k, d phi/dy_k) interleaved, shape (..., 2n)."""
        d = self.dbar(Z)
        out = np.empty(d.shape[:-1] + (2 * self.dim,))
        out[..., 0::2] = 2.0 * d.real
        out[..., 1::2] = 2.0 * d.imag
        return out

    def magnetic(self, Z) -> np.ndarray:
        """Symplectic gradient (-d phi/dy_k, d phi/dx_k) per complex coordinate."""
        g = self.real_gradient(Z)
        out = np.empty_like(g)
        out[..., 0::2] = -g[..., 1::2]
        out[..., 1::2] = g[..., 0::2]
        return out


@dataclass(frozen=True)
class ComplexPoint2:
    z: complex
    w: complex

    def __post_init__(self):
        if not (np.isfinite(self.z) and np.isfinite(self.w)):
            raise ValueError("point must be finite")

    @property
    def x(self) -> float:
        return abs(self.z) ** 2

    @property
    def y(self) -> float:
        return abs(self.w) ** 2

    def as_array(self) -> np.ndarray:
        return np.array([self.z, self.w], dtype=complex)


@dataclass(frozen=True)
class HermitianMatrixSample:
    entries: np.ndarray
    det_val: float
    tr_val: float
    lambda_min: float
    mu_max: float
    laplacian: float


def _as_point(p) -> ComplexPoint2:
    if isinstance(p, ComplexPoint2):
        return p
    z, w = p
    return ComplexPoint2(complex(z), complex(w))


def _gamma_points(gamma) -> list[tuple[int, int]]:
    return list(gamma.points if isinstance(gamma, MonomialSet) else gamma)


def _mono_abs2(x, y, a, b):
    """|z|^{2a} |w|^{2b} given x = |z|^2, y = |w|^2, with 0**0 == 1."""
    return np.power(x, a) * np.power(y, b)


def det_trace(gamma, z_abs, w_abs):
    """det and trace of the Hessian from their sum-of-squares expansions."""
    pts = _gamma_points(gamma)
    x = np.asarray(z_abs, dtype=float) ** 2
    y = np.asarray(w_abs, dtype=float) ** 2
    det = np.zeros(np.broadcast(x, y).shape)
    tr = np.zeros_like(det)
    for a, b in pts:
        if a:
            tr += a * a * _mono_abs2(x, y, a - 1, b)
        if b:
            tr += b * b * _mono_abs2(x, y, a, b - 1)
    for i, (a, b) in enumerate(pts):
        for c, d in pts[i + 1:]:
            k = a * d - b * c
            if k:
                det += k * k * _mono_abs2(x, y, a + c - 1, b + d - 1)
    return det, tr


def eigen_from_det_trace(det, tr):
    """Stable (lambda, mu) of a 2x2 Hermitian matrix from det and trace."""
    det = np.asarray(det, dtype=float)
    tr = np.asarray(tr, dtype=float)
    s = np.sqrt(np.maximum(tr * tr - 4.0 * det, 0.0))
    mu = 0.5 * (tr + s)
    with np.errstate(invalid="ignore", divide="ignore"):
        lam = np.where(mu > 0, det / np.where(mu > 0, mu, 1.0), 0.0)
    return lam, mu


def eval_weight(gamma, p) -> float:
    p = _as_point(p)
    return float(sum(_mono_abs2(p.x, p.y, a, b) for a, b in _gamma_points(gamma)))


def hessian(gamma, p) -> HermitianMatrixSample:
    p = _as_point(p)
    H = PolyWeight.model(_gamma_points(gamma)).hessian(p.as_array())
    det, tr = det_trace(gamma, abs(p.z), abs(p.w))
    lam, mu = eigen_from_det_trace(det, tr)
    return HermitianMatrixSample(
        entries=H, det_val=float(det), tr_val=float(tr),
        lambda_min=float(lam), mu_max=float(mu), laplacian=4.0 * float(tr),
    )


def coefficient_bound(gamma) -> float:
    """K = |Gamma|^2 * max(max (ad - bc)^2 / 2, max (a^2 + b^2))."""
    pts = _gamma_points(gamma)
    cross = max((a * d - b * c) ** 2 for a, b in pts for c, d in pts) / 2
    diag = max(a * a + b * b for a, b in pts)
    return len(pts) ** 2 * max(cross, diag)


def region_monomial(profile, z_abs, w_abs, tag: RegionTag) -> float:
    """The comparison monomial for the smallest eigenvalue on E1, E2, E3."""
    z, w = (w_abs, z_abs) if profile.swapped else (z_abs, w_abs)
    if tag is RegionTag.E1:
        a, b = profile.corner1
        return z ** (2 * a) * w ** (2 * (b - 1))
    if tag is RegionTag.E2:
        return w ** (2 * (profile.ndeg - 1))
    if tag is RegionTag.E3:
        a, b = profile.corner2
        return z ** (2 * (a - 1)) * w ** (2 * b)
    raise ValueError(f"no comparison monomial on {tag.value}")


@dataclass
class RatioReport:
    K: float
    det_ratio: tuple[float, float] | None
    trace_ratio: tuple[float, float] | None
    trace_poly_ratio: tuple[float, float]
    lambda_ratio: dict = field(default_factory=dict)
    lambda_bounds: tuple[float, float] | None = None
    samples: int = 0


def _minmax(values):
    values = [v for v in values if v is not None]
    if not values:
        return None
    return (min(values), max(values))


def hessian_consistency_check(gamma, sample_points, check: bool = True) -> RatioReport:
    """Ratios of det/trace/smallest eigenvalue against their monomial models.

    det is compared with phi over the independent-pair set (range [1, K]),
    the trace with phi over the shifted set (range [1, K]) and with its exact
    polynomial (ratio 1).  On E-region points with both moduli >= 1 the
    smallest eigenvalue is compared with the region monomial; there the
    guaranteed range is [1 / (K |G2|), 2 K |G1|].
    """
    gamma = gamma if isinstance(gamma, MonomialSet) else MonomialSet(gamma)
    K = coefficient_bound(gamma)
    _, _, g1, g2 = shift_sets(gamma)
    try:
        profile = derive_profile(gamma)
    except ValueError:
        profile = None
    lam_lo = lam_hi = None
    if profile is not None and not profile.decoupled and g1 is not None:
        lam_lo, lam_hi = 1.0 / (K * len(g2)), 2.0 * K * len(g1)

    det_r, tr_r, poly_r = [], [], []
    lam_r: dict[str, list[float]] = {}
    pts = [_as_point(p) for p in sample_points]
    for p in pts:
        za, wa = abs(p.z), abs(p.w)
        det, tr = det_trace(gamma, za, wa)
        det, tr = float(det), float(tr)
        H = PolyWeight.model(gamma.points).hessian(p.as_array())
        poly_tr = float(np.real(np.trace(H)))
        if tr > 0:
            poly_r.append(poly_tr / tr)
        if g1 is not None:
            f1 = eval_weight(g1, p)
            if f1 > 0:
                r = det / f1
                det_r.append(r)
                if check and not (1 - 1e-9 <= r <= K * (1 + 1e-9)):
                    raise RatioOutOfRange(f"det ratio {r} outside [1, {K}]", p)
        if g2 is not None:
            f2 = eval_weight(g2, p)
            if f2 > 0:
                r = tr / f2
                tr_r.append(r)
                if check and not (1 - 1e-9 <= r <= K * (1 + 1e-9)):
                    raise RatioOutOfRange(f"trace ratio {r} outside [1, {K}]", p)
        if lam_lo is None or za < 1 or wa < 1:
            continue
        tag = classify_point(profile, za, wa)
        if tag not in (RegionTag.E1, RegionTag.E2, RegionTag.E3):
            continue
        lam, _ = eigen_from_det_trace(det, tr)
        r = float(lam) / region_monomial(profile, za, wa, tag)
        lam_r.setdefault(tag.value, []).append(r)
        if check and not (lam_lo * (1 - 1e-9) <= r <= lam_hi * (1 + 1e-9)):
            raise RatioOutOfRange(
                f"eigenvalue ratio {r} on {tag.value} outside [{lam_lo}, {lam_hi}]", p
            )
    for r in poly_r:
        if check and not math.isclose(r, 1.0, rel_tol=1e-9):
            raise RatioOutOfRange(f"trace polynomial mismatch {r}")
    return RatioReport(
        K=K,
        det_ratio=_minmax(det_r),
        trace_ratio=_minmax(tr_r),
        trace_poly_ratio=_minmax(poly_r) or (1.0, 1.0),
        lambda_ratio={k: (min(v), max(v), len(v)) for k, v in sorted(lam_r.items())},
        lambda_bounds=None if lam_lo is None else (lam_lo, lam_hi),
        samples=len(pts),
    )


def log_uniform_points(count: int, t_max: float, seed: int, t_min: float = 1.0) -> list[ComplexPoint2]:
    """Points with log-uniform moduli in ``[t_min, t_max]`` and uniform phases."""
    rng = np.random.default_rng(seed)
    mods = np.exp(rng.uniform(math.log(t_min), math.log(t_max), (count, 2)))
    phases = np.exp(2j * math.pi * rng.random((count, 2)))
    zw = mods * phases
    return [ComplexPoint2(complex(z), complex(w)) for z, w in zw]


def finite_difference_hessian(weight_fn, p, step: float = 1e-3) -> np.ndarray:
    """Central-difference Hessian of a real function of (z, w), Richardson-extrapolated.

    Uses d^2/dz_j dzbar_k = (1/4)(d_xj - i d_yj)(d_xk + i d_yk).
    """
    p = _as_point(p)
    base = np.array([p.z.real, p.z.imag, p.w.real, p.w.imag])

    def f(v):
        return weight_fn(ComplexPoint2(complex(v[0], v[1]), complex(v[2], v[3])))

    def real_hessian(h):
        D = np.zeros((4, 4))
        for a in range(4):
            for b in range(a, 4):
                ea = np.zeros(4)
                ea[a] = h
                eb = np.zeros(4)
                eb[b] = h
                D[a, b] = D[b, a] = (
                    f(base + ea + eb) - f(base + ea - eb) - f(base - ea + eb) + f(base - ea - eb)
                ) / (4 * h * h)
        return D

    D = (4 * real_hessian(step / 2) - real_hessian(step)) / 3
    H = np.zeros((2, 2), dtype=complex)
    for j in range(2):
        for k in range(2):
            xj, yj, xk, yk = 2 * j, 2 * j + 1, 2 * k, 2 * k + 1
            H[j, k] = 0.25 * (D[xj, xk] + D[yj, yk] + 1j * (D[xj, yk] - D[yj, xk]))
    return H
