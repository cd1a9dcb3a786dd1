import math

import numpy as np
import pytest
import sympy

from bergkern.errors import DimensionTooLarge, SingularInverse
from bergkern.oscillation import (
    Cube,
    CubeClass,
    SubspacePartition,
    TriadicGoodGrid,
    a2_constant,
    asymptotic_oscillation,
    build_potential,
    classify_cube,
    cube_partition,
    doubling_constant,
    lower_bound_delta_eta,
    matrix_geq,
    muckenhoupt_diagnostics,
    oscillation,
    oscillation_oracle,
    random_partition,
)
from bergkern.schrodinger import MatrixPotential

import oracles

E1, E2 = np.eye(2)[:, :1], np.eye(2)[:, 1:]
HALF_HALF = SubspacePartition((0.5, 0.5), (E1, E2))


def test_partition_validation():
    with pytest.raises(ValueError):
        SubspacePartition((0.5, 0.4), (E1, E2))
    with pytest.raises(ValueError):
        SubspacePartition((0.5, 0.5), (E1, 2 * E2))
    with pytest.raises(ValueError):
        SubspacePartition.from_spans([1, 1], [np.zeros((2, 1)), E2])


def test_single_piece_has_no_oscillation():
    rng = np.random.default_rng(0)
    part = SubspacePartition.from_spans([1.0], [rng.normal(size=(3, 2))])
    assert oscillation(part).omega == pytest.approx(0, abs=1e-7)


def test_closed_form_examples():
    assert oscillation(HALF_HALF).omega == pytest.approx(oracles.OMEGA_HALF_HALF, abs=1e-10)
    uneven = SubspacePartition((2 / 3, 1 / 3), (E1, E2))
    assert oscillation(uneven).omega == pytest.approx(float(oracles.OMEGA_TWO_THIRDS), abs=1e-10)


def test_oracle_matches_examples():
    assert oscillation_oracle(HALF_HALF) == pytest.approx(oracles.OMEGA_HALF_HALF, abs=1e-3)
    nested = SubspacePartition.from_spans([0.3, 0.7], [np.eye(3)[:, :1], np.eye(3)[:, :2]])
    assert oscillation_oracle(nested) == pytest.approx(0, abs=1e-3)
    with pytest.raises(DimensionTooLarge):
        oscillation_oracle(SubspacePartition.from_spans([1.0], [np.eye(4)[:, :1]]))


def test_invariance_under_reordering_and_splitting():
    rng = np.random.default_rng(3)
    part = random_partition(rng, 3, pieces=3)
    base = oscillation(part).omega
    assert oscillation(part.permuted([2, 0, 1])).omega == pytest.approx(base, abs=1e-8)
    assert oscillation(part.split(1, 0.3)).omega == pytest.approx(base, abs=1e-8)


def test_lower_bound_equality_for_orthogonal_lines():
    delta, eta, bound = lower_bound_delta_eta(HALF_HALF)
    assert (delta, eta) == (1.0, 0.5)
    assert bound == pytest.approx(oscillation(HALF_HALF).omega, abs=1e-12)


def test_lower_bound_random():
    rng = np.random.default_rng(8)
    for _ in range(20):
        part = random_partition(rng, int(rng.integers(2, 5)))
        assert oscillation(part).omega >= lower_bound_delta_eta(part)[2] - 1e-12


def test_good_grid_levels_and_nesting():
    g = TriadicGoodGrid(1)
    assert [g.level(np.array([c])) for c in (0, 1, 2, 8, 26)] == [0, 0, 1, 2, 3]
    center, side = g.cell_of(np.array([8.1]))
    assert side == pytest.approx(1 / 9)
    assert abs(8.1 - center[0]) <= side / 2
    with pytest.raises(ValueError):
        TriadicGoodGrid(1, base=2)


def test_pattern_potential_properties():
    pattern = SubspacePartition((0.5, 0.5), (E1, E2))
    pot = build_potential(pattern, lambda p: np.ones(len(p)))
    xs = np.linspace(-20, 20, 401)[:, None]
    V = pot(xs)
    lam = np.linalg.eigvalsh(V)
    np.testing.assert_allclose(lam[:, 0], 0, atol=1e-15)
    assert np.all(np.linalg.matrix_rank(V) == 1)
    const = build_potential(SubspacePartition((1.0,), (E1,)), lambda p: np.ones(len(p)))
    np.testing.assert_allclose(const(np.array([[3.3]]))[0], np.diag([0.0, 1.0]))


def test_shell_oscillation():
    pot = build_potential(HALF_HALF, lambda p: np.ones(len(p)))
    full = asymptotic_oscillation(pot, 1.0, [5, 10, 30])
    third = asymptotic_oscillation(pot, 1 / 3, [5, 10, 30])
    for a, b in zip(full, third):
        assert a.omega_min == pytest.approx(oracles.OMEGA_HALF_HALF, abs=1e-8)
        assert b.omega_min == pytest.approx(oracles.OMEGA_HALF_HALF, abs=1e-8)
    const = build_potential(SubspacePartition((1.0,), (E1,)), lambda p: np.ones(len(p)))
    assert asymptotic_oscillation(const, 1.0, [4])[0].omega_min == pytest.approx(0, abs=1e-7)
    assert len(cube_partition(pot, [10.0], 1.0)) == 2


def test_matrix_order():
    assert matrix_geq(np.eye(2), 0.5 * np.eye(2))
    assert not matrix_geq(np.diag([1.0, 0.0]), np.diag([0.0, 1e-3]))


def test_constant_weight_muckenhoupt():
    W = MatrixPotential([["1", "0"], ["0", "1"]])
    rep = muckenhoupt_diagnostics(W, [Cube((0.5,), 1.0)], delta=1.0, c=1.0, alpha=0.5, beta=0.5, cells=16)
    assert rep.def1_pass and rep.def2_pass
    assert rep.a2 == pytest.approx(1.0)


def test_w0_dichotomy():
    W0 = MatrixPotential(oracles.W0)
    cube = Cube((0.5,), 1.0)
    assert W0.cube_integral((sympy.Rational(1, 2),), 1) == oracles.W0_INTEGRAL
    lam = float(np.linalg.eigvalsh(np.array(oracles.W0_INTEGRAL, dtype=float))[0])
    assert lam == pytest.approx(float(oracles.W0_LAMBDA), rel=1e-12)
    for delta in (1e-1, 1e-3, 1e-6):
        rep = muckenhoupt_diagnostics(W0, [cube], delta, c=0.01, alpha=0.5, beta=0.01, include_a2=False)
        assert not rep.def1_pass
        assert rep.def2_pass
    with pytest.raises(SingularInverse):
        a2_constant(W0, cube)


def test_doubling_constant_finite_for_w0():
    W0 = MatrixPotential(oracles.W0)
    pairs = [(Cube((x,), 2.0), Cube((x,), 1.0)) for x in (0.5, 3.0, 10.0)]
    assert math.isfinite(doubling_constant(W0, pairs))


@pytest.mark.parametrize(
    "entries, tag",
    [
        ([["x**2", "0"], ["0", "x**2"]], CubeClass.GOOD),
        (oracles.V0, CubeClass.BAD),
        ([["1", "0"], ["0", "2"]], CubeClass.GOOD),
        ([["0", "0"], ["0", "0"]], CubeClass.ISOTROPIC),
    ],
)
def test_classification_examples(entries, tag):
    res = classify_cube(MatrixPotential(entries), Cube((1.5,), 1.0))
    assert res.tag is tag
    if tag is CubeClass.BAD:
        assert res.trace_spread <= 2
