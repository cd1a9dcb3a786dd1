import math

import numpy as np
import pytest
import sympy

from bergkern.errors import RatioOutOfRange
from bergkern.newton_diagram import MonomialSet
from bergkern.weight_eval import (
    ComplexPoint2,
    PolyWeight,
    coefficient_bound,
    det_trace,
    eval_weight,
    finite_difference_hessian,
    hessian,
    hessian_consistency_check,
    log_uniform_points,
)

import oracles


def symbolic_hessian(gamma, z, w):
    """d^2 phi / dz_j dzbar_k via real coordinates, evaluated exactly."""
    x1, y1, x2, y2 = sympy.symbols("x1 y1 x2 y2", real=True)
    phi = sum((x1**2 + y1**2) ** a * (x2**2 + y2**2) ** b for a, b in gamma)
    coords = [(x1, y1), (x2, y2)]
    subs = {x1: z.real, y1: z.imag, x2: w.real, y2: w.imag}
    H = np.zeros((2, 2), dtype=complex)
    for j, (xj, yj) in enumerate(coords):
        for k, (xk, yk) in enumerate(coords):
            e = (sympy.diff(phi, xj, xk) + sympy.diff(phi, yj, yk)
                 + sympy.I * (sympy.diff(phi, xj, yk) - sympy.diff(phi, yj, xk))) / 4
            H[j, k] = complex(e.subs(subs))
    return H


def test_weight_values():
    assert eval_weight(oracles.GAMMA_GAUSS, (1, 1)) == 2
    assert eval_weight([(1, 1)], (2, 3j)) == 36
    assert eval_weight(oracles.GAMMA_FIG, (1, 1)) == 5
    with pytest.raises(ValueError):
        ComplexPoint2(complex("nan"), 0)


def test_gaussian_hessian_is_identity():
    s = hessian(oracles.GAMMA_GAUSS, (0.3 + 0.2j, -1.1j))
    np.testing.assert_allclose(s.entries, np.eye(2), atol=1e-15)
    assert (s.det_val, s.tr_val, s.laplacian) == (1, 2, 8)


def test_single_monomial_is_rank_one():
    z, w = 0.7 - 0.4j, 1.3 + 0.5j
    s = hessian([(1, 1)], (z, w))
    assert s.det_val == 0
    want = np.array([[abs(w) ** 2, w * np.conj(z)], [z * np.conj(w), abs(z) ** 2]])
    np.testing.assert_allclose(s.entries, want, rtol=1e-14)


def test_decoupled_hessian_and_det_ratio():
    s = hessian(oracles.GAMMA_DECOUPLED, (1, 1))
    np.testing.assert_allclose(s.entries, oracles.DECOUPLED_HESSIAN_AT_ONE)
    rng = np.random.default_rng(4)
    for z, w in rng.normal(size=(10, 2)) * 3:
        det, _ = det_trace(oracles.GAMMA_DECOUPLED, abs(z), abs(w))
        assert det / eval_weight([(1, 1)], (z, w)) == pytest.approx(oracles.DECOUPLED_DET_OVER_PHI1, rel=1e-12)


@pytest.mark.parametrize("gamma", [oracles.GAMMA_SMALL, oracles.GAMMA_FIG, [(3, 0), (2, 1), (0, 3)]])
def test_hessian_matches_symbolic(gamma):
    rng = np.random.default_rng(11)
    for _ in range(3):
        z, w = rng.normal(size=2) + 1j * rng.normal(size=2)
        got = hessian(gamma, (z, w)).entries
        np.testing.assert_allclose(got, symbolic_hessian(gamma, z, w), rtol=1e-10, atol=1e-12)


def test_finite_difference_agreement():
    for p in log_uniform_points(20, 3.0, seed=2, t_min=0.1):
        exact = hessian(oracles.GAMMA_SMALL, p).entries
        approx = finite_difference_hessian(lambda q: eval_weight(oracles.GAMMA_SMALL, q), p,
                                           step=1e-3 * max(abs(p.z), abs(p.w), 1) / 4)
        assert np.abs(approx - exact).max() <= 1e-6 * np.abs(exact).max()


def test_trace_polynomial_and_det_expansion_consistent():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(50, 2)) + 1j * rng.normal(size=(50, 2))
    H = PolyWeight.model(oracles.GAMMA_FIG).hessian(pts)
    det, tr = det_trace(oracles.GAMMA_FIG, np.abs(pts[:, 0]), np.abs(pts[:, 1]))
    np.testing.assert_allclose(np.real(np.trace(H, axis1=1, axis2=2)), tr, rtol=1e-12)
    np.testing.assert_allclose(np.real(np.linalg.det(H)), det, rtol=1e-8)


def test_consistency_check_ranges():
    gamma = MonomialSet(oracles.GAMMA_FIG)
    report = hessian_consistency_check(gamma, log_uniform_points(100, 1000.0, seed=1))
    K = coefficient_bound(gamma)
    assert 1 - 1e-9 <= report.det_ratio[0] and report.det_ratio[1] <= K
    assert 1 - 1e-9 <= report.trace_ratio[0] and report.trace_ratio[1] <= K
    assert report.trace_poly_ratio == pytest.approx((1.0, 1.0), rel=1e-9)
    lo, hi = report.lambda_bounds
    for a, b, _ in report.lambda_ratio.values():
        assert lo <= a and b <= hi


def test_consistency_check_raises_on_impossible_range(monkeypatch):
    import bergkern.weight_eval as we

    monkeypatch.setattr(we, "coefficient_bound", lambda g: 0.5)
    with pytest.raises(RatioOutOfRange):
        we.hessian_consistency_check(oracles.GAMMA_SMALL, log_uniform_points(5, 10.0, seed=0))


def test_log_uniform_points_deterministic():
    a = log_uniform_points(5, 100.0, seed=3)
    b = log_uniform_points(5, 100.0, seed=3)
    assert a == b
    assert all(1 <= abs(p.z) <= 100 and 1 <= abs(p.w) <= 100 for p in a)


def test_polyweight_gradient_and_magnetic():
    weight = PolyWeight.model(oracles.GAMMA_GAUSS)
    Z = np.array([[1 + 2j, -0.5j]])
    np.testing.assert_allclose(weight.real_gradient(Z)[0], [2, 4, 0, -1])
    np.testing.assert_allclose(weight.magnetic(Z)[0], [-4, 2, 1, 0])
    assert PolyWeight.flat(2).value(Z)[0] == 0
    assert math.isclose(weight.laplacian(Z)[0], 8)
