import math

import numpy as np
import pytest

from bergkern.bergman import (
    compute_moments,
    evaluation_bound_ratio,
    gaussian_kernel,
    kernel_eval,
    mean_value_ratio,
    phase_aligned_pairs,
    radial_moment_quadrature,
    reproducing_check,
)

import oracles


@pytest.fixture(scope="module")
def gauss_table():
    return compute_moments(oracles.GAMMA_GAUSS, 40)


@pytest.fixture(scope="module")
def small_table():
    return compute_moments(oracles.GAMMA_SMALL, 40)


def test_gaussian_moments(gauss_table):
    for (a, b), c in gauss_table.moments.items():
        if a + b <= 10:
            assert c == pytest.approx(oracles.gaussian_moment(a, b), rel=1e-10)
    assert gauss_table.moment(0, 0) == pytest.approx(oracles.GAUSS_C00, rel=1e-12)
    assert gauss_table.moment(1, 0) / gauss_table.moment(0, 0) == pytest.approx(0.5, rel=1e-12)
    with pytest.raises(KeyError):
        gauss_table.moment(41, 0)


def test_moments_log_convex(small_table):
    c = small_table.moment
    for a in range(1, 10):
        for b in range(0, 10 - a):
            assert c(a, b) ** 2 <= c(a - 1, b) * c(a + 1, b) * (1 + 1e-12)
            assert c(b, a) ** 2 <= c(b, a - 1) * c(b, a + 1) * (1 + 1e-12)


def test_moments_match_independent_quadrature(small_table):
    for a, b in [(0, 0), (1, 2), (3, 3), (5, 0)]:
        assert radial_moment_quadrature(oracles.GAMMA_SMALL, a, b) == pytest.approx(small_table.moment(a, b), rel=1e-8)


def test_gaussian_kernel_closed_form(gauss_table):
    assert kernel_eval(gauss_table, (0, 0), (0, 0)).value == pytest.approx(oracles.GAUSS_B00, rel=1e-14)
    rng = np.random.default_rng(1)
    for _ in range(20):
        p = tuple(rng.normal(size=2) * 0.8 + 1j * rng.normal(size=2) * 0.8)
        q = tuple(rng.normal(size=2) * 0.8 + 1j * rng.normal(size=2) * 0.8)
        B = kernel_eval(gauss_table, p, q)
        want = oracles.gaussian_kernel(p, q)
        assert abs(B.value - want) <= 1e-8 * abs(want)
        assert abs(gaussian_kernel(p, q) - want) <= 1e-12 * abs(want)
        assert B.tail_bound <= 1e-8 * B.abs_sum


def test_conjugate_symmetry(small_table):
    rng = np.random.default_rng(2)
    for _ in range(10):
        p = tuple(rng.normal(size=2) + 1j * rng.normal(size=2))
        q = tuple(rng.normal(size=2) + 1j * rng.normal(size=2))
        a, b = kernel_eval(small_table, p, q).value, kernel_eval(small_table, q, p).value
        assert abs(a - b.conjugate()) <= 1e-12 * abs(a)


def test_diagonal_dominates_normalised_monomial(small_table):
    p = (1.0, 1.0)
    assert kernel_eval(small_table, p, p).value.real >= 1 / small_table.moment(1, 1)


@pytest.mark.parametrize("mono, p, want", [((0, 0), (0.3, -0.2j), 1), ((1, 0), (1, 0.5), 1), ((2, 1), (0, 0), 0)])
def test_reproducing_examples(small_table, mono, p, want):
    r = reproducing_check(small_table, mono, p)
    assert abs(r.value - want) <= 1e-4 * (1 + abs(want))


def test_mean_value_and_evaluation_bounds(small_table):
    assert mean_value_ratio(oracles.GAMMA_SMALL, (1, 1), (0.5, 0.5j), 0.3, count=4000) < 10
    assert evaluation_bound_ratio(small_table, (1, 0), (0.5, 0.2), 0.3, count=4000) <= 1 + 1e-9


def test_phase_aligned_pairs_seeded():
    a = phase_aligned_pairs(5, 1.6, 0.05, 2.0, seed=3)
    b = phase_aligned_pairs(5, 1.6, 0.05, 2.0, seed=3)
    assert a == b
    for p, q in a:
        # kernel terms add up in phase when z_p conj(z_q) and w_p conj(w_q) are real and positive
        for x, y in zip(p, q):
            prod = complex(x) * complex(y).conjugate()
            assert abs(prod.imag) <= 1e-12 * max(1.0, abs(prod)) and prod.real >= 0
