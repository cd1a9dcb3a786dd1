"""Reference values, derived independently of the package and frozen.

Closed forms are computed here from first principles (exact fractions or
sympy); regression pins record the first certified run and must only change
together with a ledger entry.
"""

import cmath
from fractions import Fraction
import math

import sympy

# --- exponent sets -----------------------------------------------------------------

GAMMA_FIG = [(16, 0), (12, 3), (8, 6), (4, 9), (0, 12)]
GAMMA_SMALL = [(2, 0), (1, 1), (0, 2)]
GAMMA_DECOUPLED = [(2, 0), (0, 2)]
GAMMA_GAUSS = [(1, 0), (0, 1)]

FIG_PROFILE = {
    "m": 16, "n": 12, "sigma": Fraction(4), "tau": Fraction(9, 4),
    "corner1": (12, 3), "corner2": (4, 9),
}


def brute_shift_sets(gamma):
    """Derived exponent sets by direct expansion of det and trace of the Hessian."""
    g1 = set()
    for i, (a, b) in enumerate(gamma):
        for c, d in gamma[i + 1:]:
            if a * d - b * c:
                g1.add((a + c - 1, b + d - 1))
    g2 = {(a - 1, b) for a, b in gamma if a} | {(a, b - 1) for a, b in gamma if b}
    return g1, g2


def brute_support(points, u, v):
    return max(Fraction(u) * a + Fraction(v) * b for a, b in points)


def brute_lambda_exponent(gamma, u, v):
    g1, g2 = brute_shift_sets(gamma)
    return brute_support(g1, u, v) - brute_support(g2, u, v)


# support function values on the figure set
FIG_SUPPORT = {(1, 0): 16, (1, 1): 16}
FIG_LAMBDA = {(1, 0): 12, (0, 1): 9}

# --- Hessian -------------------------------------------------------------------------

DECOUPLED_HESSIAN_AT_ONE = [[4, 0], [0, 4]]
DECOUPLED_DET_OVER_PHI1 = 16  # H = diag(4|z|^2, 4|w|^2) for |z|^4 + |w|^4

# --- Gaussian weight ------------------------------------------------------------------


def gaussian_moment(a, b):
    return math.pi**2 * math.factorial(a) * math.factorial(b) / 2 ** (a + b + 2)


def gaussian_kernel(p, q):
    (z, w), (zq, wq) = p, q
    return 4 / math.pi**2 * cmath.exp(2 * (z * zq.conjugate() + w * wq.conjugate()))


GAUSS_C00 = math.pi**2 / 4
GAUSS_B00 = 4 / math.pi**2

# --- radius functions and distances ------------------------------------------------

RHO_CONSTANT_4 = 0.5
RHO_GAUSS_LAPLACIAN = 1 / (2 * math.sqrt(2))
RHO_DECOUPLED_ORIGIN = 0.5


def agmon_max_one_x(X):
    """int_0^X dx / max(1, x)."""
    return 1 + math.log(X) if X > 1 else X


# worst-case length ratio of a stencil metric: 1 / cos(half the widest gap between directions)
METRICATION_8 = 1 / math.cos(math.pi / 8) - 1
METRICATION_16 = 1 / math.cos(math.atan(0.5) / 2) - 1

# --- discrete Laplacian ------------------------------------------------------------------


def dirichlet_laplacian_1d(N, h, k):
    return [2 * (1 - math.cos(j * math.pi / (N + 1))) / h**2 for j in range(1, k + 1)]


LANDAU_LOWEST = 2.0  # (b + V) / 4 with b = 4, V = 4
HARMONIC_LOWEST = 1.0

# --- matrix potentials ------------------------------------------------------------------------

_x = sympy.Symbol("x", real=True)


def exact_cube_integral(entries, center, side=1):
    c, s = sympy.Rational(center), sympy.Rational(side)
    M = sympy.Matrix([[sympy.sympify(e, locals={"x": _x}) for e in row] for row in entries])
    return M.applyfunc(lambda e: sympy.integrate(e, (_x, c - s / 2, c + s / 2)))


V0 = [["x**4", "x**5"], ["x**5", "x**6"]]
V0_INTEGRAL_AT_ZERO = sympy.Matrix([[sympy.Rational(1, 80), 0], [0, sympy.Rational(1, 448)]])
V0_LAMBDA_AT_ZERO = sympy.Rational(1, 448)
V0_RATIO_LIMIT = Fraction(1, 12)

W0 = [["1", "x"], ["x", "x**2"]]
W0_INTEGRAL = sympy.Matrix([[1, sympy.Rational(1, 2)], [sympy.Rational(1, 2), sympy.Rational(1, 3)]])
W0_LAMBDA = (4 - sympy.sqrt(13)) / 6


def x2_identity_lambda(x):
    return sympy.Rational(x) ** 2 + sympy.Rational(1, 12)


# --- oscillation ------------------------------------------------------------------------------

OMEGA_HALF_HALF = 1 / math.sqrt(2)
OMEGA_TWO_THIRDS = Fraction(2, 3)  # sqrt(1 - 5/9)

# --- regression pins (first certified run) ---------------------------------------------------

DECAY_FIT = {"epsilon": 3.021180974353606, "logC": -1.7349328428177095, "worst_pair_index": 35}
COERCIVITY_MIN_128 = 1.1196947655639329
COERCIVITY_MIN_64 = 1.123925119093043
