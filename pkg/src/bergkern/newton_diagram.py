"""Exact combinatorics of the exponent set of a model weight on C^2.

A model weight is ``phi(z, w) = sum |z^a w^b|^2`` over a finite set of
exponent pairs.  Everything here works in exact rational arithmetic:
homogeneity, the slope exponents ``sigma``/``tau``, the derived exponent
sets controlling the determinant and the trace of the complex Hessian, the
support functions of those sets, the closed-form exponent of the smallest
Hessian eigenvalue and the region decomposition of the quadrant of moduli.

Profiles are always stored with ``m >= n``.  When the caller's set has
``m < n`` the coordinates are exchanged and ``swapped`` is recorded; the
point-wise helpers (:func:`lambda_exponent`, :func:`classify_point`,
:func:`mu_weight`) take arguments in the caller's original coordinates and
undo the exchange themselves.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple

from .errors import (
    DecoupledProfile,
    InvalidMonomialSet,
    MissingCorner,
    NotHomogeneous,
)

Point = tuple[int, int]


@dataclass(frozen=True)
class MonomialSet:
    """Non-empty finite set of non-negative integer exponent pairs."""

    points: tuple[Point, ...]

    def __init__(self, points: Iterable[Iterable[int]]):
        pts = []
        for p in points:
            pair = tuple(p)
            if len(pair) != 2:
                raise InvalidMonomialSet(f"exponent {pair!r} is not a pair")
            a, b = pair
            if isinstance(a, bool) or isinstance(b, bool) or int(a) != a or int(b) != b:
                raise InvalidMonomialSet(f"exponent {pair!r} is not integral")
            a, b = int(a), int(b)
            if a < 0 or b < 0:
                raise InvalidMonomialSet(f"exponent {pair!r} is negative")
            pts.append((a, b))
        if not pts:
            raise InvalidMonomialSet("exponent set is empty")
        if len(set(pts)) != len(pts):
            raise InvalidMonomialSet("exponent set contains duplicates")
        object.__setattr__(self, "points", tuple(sorted(pts)))

    @classmethod
    def collect(cls, points: Iterable[Iterable[int]]) -> "MonomialSet":
        """Build a set from points that may repeat."""
        return cls(sorted({tuple(p) for p in points}))

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    def __contains__(self, item):
        return tuple(item) in self.points

    def swapped(self) -> "MonomialSet":
        return MonomialSet((b, a) for a, b in self.points)

    def as_lists(self) -> list[list[int]]:
        return [list(p) for p in self.points]


class RegionTag(str, enum.Enum):
    E1 = "E1"
    E2 = "E2"
    E3 = "E3"
    U0 = "U0"
    Ur = "Ur"
    Uu = "Uu"


@dataclass(frozen=True)
class HomogeneousProfile:
    gamma: MonomialSet
    mdeg: int
    ndeg: int
    sigma: Fraction
    tau: Fraction
    corner1: Point | None
    corner2: Point | None
    nu: Fraction | None
    gamma_r: MonomialSet | None
    gamma_u: MonomialSet | None
    gamma_1: MonomialSet | None
    gamma_2: MonomialSet | None
    decoupled: bool
    swapped: bool

    @property
    def source_gamma(self) -> MonomialSet:
        """The exponent set in the caller's coordinates."""
        return self.gamma.swapped() if self.swapped else self.gamma

    def original_sigma_tau(self) -> tuple[Fraction, Fraction]:
        """(sigma, tau) as exponents of |z| and |w| in the caller's coordinates."""
        if self.swapped:
            return self.tau, self.sigma
        return self.sigma, self.tau


def _nonempty(points) -> MonomialSet | None:
    pts = {tuple(p) for p in points}
    return MonomialSet(sorted(pts)) if pts else None


def shift_sets(gamma: MonomialSet):
    """Return (gamma_r, gamma_u, gamma_1, gamma_2) for any exponent set.

    ``gamma_1`` collects ``p + q - (1, 1)`` over linearly independent pairs;
    ``gamma_2`` is ``(gamma_r - (1, 0))`` united with ``(gamma_u - (0, 1))``.
    Empty sets come back as ``None``.
    """
    pts = gamma.points
    gamma_r = [p for p in pts if p[0] != 0]
    gamma_u = [p for p in pts if p[1] != 0]
    g1 = set()
    for i, (a, b) in enumerate(pts):
        for c, d in pts[i + 1:]:
            if a * d - b * c != 0:
                g1.add((a + c - 1, b + d - 1))
    g2 = {(a - 1, b) for a, b in gamma_r} | {(a, b - 1) for a, b in gamma_u}
    return _nonempty(gamma_r), _nonempty(gamma_u), _nonempty(g1), _nonempty(g2)


def derive_profile(gamma: MonomialSet | Iterable[Iterable[int]]) -> HomogeneousProfile:
    if not isinstance(gamma, MonomialSet):
        gamma = MonomialSet(gamma)
    m = max(a for a, _ in gamma)
    n = max(b for _, b in gamma)
    if m == 0 or (m, 0) not in gamma:
        raise MissingCorner(f"({m}, 0) is not in the exponent set")
    if n == 0 or (0, n) not in gamma:
        raise MissingCorner(f"(0, {n}) is not in the exponent set")
    off = [p for p in gamma if n * p[0] + m * p[1] != n * m]
    if off:
        raise NotHomogeneous(
            f"{off[0]} is off the segment joining ({m}, 0) and (0, {n})"
        )

    swapped = m < n
    if swapped:
        gamma = gamma.swapped()
        m, n = n, m

    mixed = [p for p in gamma if p[0] > 0 and p[1] > 0]
    gamma_r, gamma_u, gamma_1, gamma_2 = shift_sets(gamma)
    if not mixed:
        return HomogeneousProfile(
            gamma=gamma, mdeg=m, ndeg=n, sigma=Fraction(0), tau=Fraction(0),
            corner1=None, corner2=None, nu=None,
            gamma_r=gamma_r, gamma_u=gamma_u, gamma_1=gamma_1, gamma_2=gamma_2,
            decoupled=True, swapped=swapped,
        )

    corner1 = max(mixed, key=lambda p: Fraction(p[0], p[1]))
    corner2 = max(mixed, key=lambda p: Fraction(p[1], p[0]))
    a2, b2 = corner2
    # a2 == 1 forces m == n and b2 == n - 1; the two sub-cases of the
    # second cone then coincide and any nu in [0, 1] gives the same answer.
    nu = Fraction(n - 1 - b2, a2 - 1) if a2 != 1 else Fraction(0)
    return HomogeneousProfile(
        gamma=gamma, mdeg=m, ndeg=n,
        sigma=Fraction(corner1[0], corner1[1]),
        tau=Fraction(corner2[1], corner2[0]),
        corner1=corner1, corner2=corner2, nu=nu,
        gamma_r=gamma_r, gamma_u=gamma_u, gamma_1=gamma_1, gamma_2=gamma_2,
        decoupled=False, swapped=swapped,
    )


def support_max(a: MonomialSet | Iterable[Point], u, v) -> Fraction:
    """max of u*xi + v*eta over the set, exactly."""
    u, v = Fraction(u), Fraction(v)
    pts = a.points if isinstance(a, MonomialSet) else list(a)
    if not pts:
        raise InvalidMonomialSet("support function of an empty set")
    return max(u * x + v * y for x, y in pts)


class LambdaExponent(NamedTuple):
    value: Fraction
    case: str
    closed_form: Fraction


def lambda_exponent(profile: HomogeneousProfile, u, v) -> LambdaExponent:
    """Growth exponent of the smallest Hessian eigenvalue along (|z|, |w|) = (e^{su}, e^{sv}).

    The value is the support-function difference of the two derived sets;
    the closed form of the applicable cone is computed independently and the
    two must agree.
    """
    u, v = Fraction(u), Fraction(v)
    if u < 0 or v < 0 or (u == 0 and v == 0):
        raise ValueError("direction (u, v) must be non-negative and non-zero")
    if profile.decoupled:
        raise DecoupledProfile("closed forms need a mixed monomial")
    if profile.swapped:
        u, v = v, u
    m, n = profile.mdeg, profile.ndeg
    a1, b1 = profile.corner1
    a2, b2 = profile.corner2
    value = support_max(profile.gamma_1, u, v) - support_max(profile.gamma_2, u, v)
    if n * v <= m * u:
        case, closed = "I", u * a1 + v * b1 - v
    elif u <= profile.nu * v:
        case, closed = "IIa", u * a2 + v * b2 - u
    else:
        case, closed = "IIb", v * (n - 1)
    if value != closed:
        raise AssertionError(
            f"case {case} gives {closed} but support functions give {value}"
        )
    return LambdaExponent(value, case, closed)


def cone_invariants_hold(profile: HomogeneousProfile) -> bool:
    """Check m/n <= (m-1-a1)/(b1-1) and nu <= n/m for a non-decoupled profile."""
    if profile.decoupled:
        raise DecoupledProfile("cone invariants need a mixed monomial")
    m, n = profile.mdeg, profile.ndeg
    a1, b1 = profile.corner1
    first = b1 == 1 or Fraction(m, n) <= Fraction(m - 1 - a1, b1 - 1)
    return first and profile.nu <= Fraction(n, m)


def _canonical(profile, z_abs, w_abs):
    z, w = float(z_abs), float(w_abs)
    if z < 0 or w < 0:
        raise ValueError("moduli must be non-negative")
    return (w, z) if profile.swapped else (z, w)


def classify_point(profile: HomogeneousProfile, z_abs: float, w_abs: float) -> RegionTag:
    z, w = _canonical(profile, z_abs, w_abs)
    if z <= 2 and w <= 2:
        return RegionTag.U0
    if profile.decoupled:
        if z > 1 and w <= 1:
            return RegionTag.Ur
        if w > 1 and z <= 1:
            return RegionTag.Uu
        return RegionTag.E2
    sigma, tau, nu = float(profile.sigma), float(profile.tau), float(profile.nu)
    ratio = profile.mdeg / profile.ndeg
    if z > 1 and w <= z ** -sigma:
        return RegionTag.Ur
    if w > 1 and z <= w ** -tau:
        return RegionTag.Uu
    if z >= 1 and w <= z ** ratio:
        return RegionTag.E1
    if w >= 1 and z <= w ** nu:
        return RegionTag.E3
    return RegionTag.E2


def mu_weight(profile: HomogeneousProfile, z_abs: float, w_abs: float, c: float = 1.0) -> float:
    """c * (1 + |z|^sigma + |w|^tau) with 0**0 == 1."""
    if c <= 0:
        raise ValueError("c must be positive")
    z, w = _canonical(profile, z_abs, w_abs)
    return c * (1.0 + z ** float(profile.sigma) + w ** float(profile.tau))
