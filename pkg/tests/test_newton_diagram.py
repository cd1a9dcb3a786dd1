from fractions import Fraction
from math import gcd

import pytest
from hypothesis import given, settings, strategies as st

from bergkern.errors import DecoupledProfile, InvalidMonomialSet, MissingCorner, NotHomogeneous
from bergkern.newton_diagram import (
    MonomialSet,
    RegionTag,
    classify_point,
    cone_invariants_hold,
    derive_profile,
    lambda_exponent,
    mu_weight,
    shift_sets,
    support_max,
)

import oracles


def test_figure_profile_exact():
    prof = derive_profile(oracles.GAMMA_FIG)
    want = oracles.FIG_PROFILE
    assert (prof.mdeg, prof.ndeg) == (want["m"], want["n"])
    assert prof.original_sigma_tau() == (want["sigma"], want["tau"])
    assert isinstance(prof.sigma, Fraction)
    assert (prof.corner1, prof.corner2) == (want["corner1"], want["corner2"])
    assert cone_invariants_hold(prof)


def test_decoupled_profile():
    prof = derive_profile(oracles.GAMMA_DECOUPLED)
    assert prof.decoupled
    assert prof.sigma == prof.tau == 0
    with pytest.raises(DecoupledProfile):
        lambda_exponent(prof, 1, 1)


def test_small_profile_nu_convention():
    prof = derive_profile(oracles.GAMMA_SMALL)
    assert prof.sigma == prof.tau == 1
    assert prof.corner1 == prof.corner2 == (1, 1)
    assert prof.nu == 0


@pytest.mark.parametrize(
    "points, exc",
    [
        ([], InvalidMonomialSet),
        ([(1, -1)], InvalidMonomialSet),
        ([(1, 0), (1, 0)], InvalidMonomialSet),
        ([(2, 0), (1, 1)], MissingCorner),
        ([(2, 0), (1, 0), (0, 2)], NotHomogeneous),
    ],
)
def test_invalid_sets(points, exc):
    with pytest.raises(exc):
        derive_profile(points)


def test_swapped_input_reports_caller_coordinates():
    swapped = [(b, a) for a, b in oracles.GAMMA_FIG]
    prof = derive_profile(swapped)
    assert prof.swapped
    assert prof.original_sigma_tau() == (Fraction(9, 4), Fraction(4))


def test_support_function_values():
    for (u, v), want in oracles.FIG_SUPPORT.items():
        assert support_max(MonomialSet(oracles.GAMMA_FIG), u, v) == want
    _, _, g1, _ = shift_sets(MonomialSet(oracles.GAMMA_DECOUPLED))
    assert g1.points == ((1, 1),)
    assert support_max(g1, 1, 1) == 2


def test_lambda_exponent_figure_directions():
    prof = derive_profile(oracles.GAMMA_FIG)
    for (u, v), want in oracles.FIG_LAMBDA.items():
        assert lambda_exponent(prof, u, v).value == want
    assert lambda_exponent(prof, 0, 1).case == "IIa"
    with pytest.raises(ValueError):
        lambda_exponent(prof, 0, 0)


def test_shift_sets_match_brute_force():
    g1, g2 = oracles.brute_shift_sets(oracles.GAMMA_FIG)
    _, _, s1, s2 = shift_sets(MonomialSet(oracles.GAMMA_FIG))
    assert set(s1.points) == g1 and set(s2.points) == g2


@st.composite
def homogeneous_sets(draw):
    m = draw(st.integers(2, 30))
    n = draw(st.integers(2, 30))
    # lattice points on the segment from (m, 0) to (0, n)
    g = gcd(m, n)
    inner = [(m - k * (m // g), k * (n // g)) for k in range(1, g)]
    if not inner:
        m, n = m * 2, n * 2
        inner = [(m // 2, n // 2)]
    chosen = draw(st.lists(st.sampled_from(inner), min_size=1, unique=True))
    return [(m, 0), (0, n)] + chosen


@settings(max_examples=60, deadline=None)
@given(homogeneous_sets(), st.fractions(0, 5, max_denominator=7), st.fractions(0, 5, max_denominator=7))
def test_lambda_closed_form_property(gamma, u, v):
    if u == 0 and v == 0:
        return
    prof = derive_profile(gamma)
    got = lambda_exponent(prof, u, v)
    assert got.value == got.closed_form == oracles.brute_lambda_exponent(gamma, u, v)
    assert cone_invariants_hold(prof)


def test_region_tags():
    prof = derive_profile(oracles.GAMMA_FIG)
    assert classify_point(prof, 0, 0) is RegionTag.U0
    assert classify_point(prof, 3, 3.0**-4 / 2) is RegionTag.Ur
    assert classify_point(prof, 3, 3 ** (16 / 12) * 0.9) is RegionTag.E1
    with pytest.raises(ValueError):
        classify_point(prof, -1, 0)


def test_mu_weight_examples():
    assert mu_weight(derive_profile(oracles.GAMMA_DECOUPLED), 5, 7) == 3
    assert mu_weight(derive_profile(oracles.GAMMA_SMALL), 1, 1) == 3
    assert mu_weight(derive_profile(oracles.GAMMA_FIG), 2, 0) == 17
    with pytest.raises(ValueError):
        mu_weight(derive_profile(oracles.GAMMA_FIG), 1, 1, c=0)
