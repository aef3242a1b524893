import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from trivlab.gauge_sc import (
    DomainError,
    GapVerdict,
    RatioVariant,
    SingularIntegrandError,
    StrongCouplingModel,
    StrongCouplingRegimeError,
    analytic_antiderivative,
    dominant_plaquette,
    invert_bare_charge,
    invert_from_mass,
    mass_gap_scan,
    one_sided_limit,
    plaquette_scaling,
    scale_factors,
    sigma_over_m2,
    transmutation_check,
    wilson_strong_coupling,
    wilson_window,
)
from trivlab.rgflow import BetaFunction

LN9 = math.log(9.0)
# sigma/m^2 = k2^2 / (16 k1^2 ln(3 g0^2)) evaluated at g0^2 = 3
RATIO_AT_3 = 1.0 / (16.0 * LN9)

G0_SQ = st.floats(1.0 / 3.0 * (1 + 1e-9), 1e6)


# -- strong-coupling formulas ---------------------------------------------------


def test_wilson_values():
    p = wilson_strong_coupling(StrongCouplingModel(3.0))
    assert p.sigma == pytest.approx(LN9, rel=1e-15)
    assert p.mass == pytest.approx(4 * LN9, rel=1e-15)
    assert p.sigma == pytest.approx(2.19722, abs=1e-5)
    assert p.mass == pytest.approx(8.78890, abs=1e-5)


def test_unit_logarithm():
    p = wilson_strong_coupling(StrongCouplingModel(math.e / 3.0))
    assert p.sigma == pytest.approx(1.0, rel=1e-15)
    assert p.mass == pytest.approx(4.0, rel=1e-15)


def test_logarithm_zero_boundary():
    p = wilson_strong_coupling(StrongCouplingModel(1.0 / 3.0 * (1 + 1e-12)))
    assert 0 < p.sigma < 1e-11 and 0 < p.mass < 1e-11
    with pytest.raises(StrongCouplingRegimeError):
        wilson_strong_coupling(StrongCouplingModel(1.0 / 3.0))
    with pytest.raises(StrongCouplingRegimeError):
        sigma_over_m2(StrongCouplingModel(0.1))


def test_inversions():
    assert invert_bare_charge(LN9, 1.0) == pytest.approx(3.0, rel=1e-15)
    assert invert_from_mass(1e-12, 1.0) == pytest.approx(1.0 / 3.0, rel=1e-12)
    assert invert_from_mass(1.0, 40.0) == pytest.approx(math.exp(10.0) / 3.0, rel=1e-15)
    assert invert_from_mass(1.0, 40.0) == pytest.approx(7342.1, abs=0.1)
    for bad in ((0.0, 1.0), (1.0, 0.0), (-1.0, 1.0)):
        with pytest.raises(DomainError):
            invert_bare_charge(*bad)
        with pytest.raises(DomainError):
            invert_from_mass(*bad)


@given(G0_SQ, st.floats(0.01, 10.0), st.floats(0.5, 4.0), st.floats(0.5, 4.0))
def test_round_trip(g0_sq, a, k1, k2):
    p = wilson_strong_coupling(StrongCouplingModel(g0_sq, a, k1, k2))
    assert invert_bare_charge(p.sigma, a, k1) == pytest.approx(g0_sq, rel=1e-12)
    assert invert_from_mass(p.mass, a, k2) == pytest.approx(g0_sq, rel=1e-12)


def test_ratio_values():
    assert sigma_over_m2(StrongCouplingModel(3.0)) == pytest.approx(RATIO_AT_3, rel=1e-15)
    assert sigma_over_m2(StrongCouplingModel(3.0)) == pytest.approx(0.028445, abs=1e-6)
    assert sigma_over_m2(StrongCouplingModel(3.0, k1=1.0, k2=2.0)) == pytest.approx(4 * RATIO_AT_3, rel=1e-15)
    assert sigma_over_m2(StrongCouplingModel(1e300)) < 1e-3


def test_ratio_matches_prediction():
    p = wilson_strong_coupling(StrongCouplingModel(7.0, 0.3, 1.5, 2.5))
    assert p.ratio == pytest.approx(p.sigma / p.mass**2, rel=1e-15)
    assert p.ratio == pytest.approx(sigma_over_m2(StrongCouplingModel(7.0, 0.3, 1.5, 2.5)), rel=1e-14)


@given(st.floats(0.4, 1e5), st.floats(1.001, 10.0))
def test_monotone_in_coupling(g0_sq, factor):
    lo, hi = StrongCouplingModel(g0_sq), StrongCouplingModel(g0_sq * factor)
    a, b = wilson_strong_coupling(lo), wilson_strong_coupling(hi)
    assert b.sigma > a.sigma and b.mass > a.mass
    assert sigma_over_m2(hi) < sigma_over_m2(lo)


@given(G0_SQ, st.floats(0.01, 100.0))
def test_dimensional_consistency(g0_sq, lam):
    a = wilson_strong_coupling(StrongCouplingModel(g0_sq, 1.0))
    b = wilson_strong_coupling(StrongCouplingModel(g0_sq, lam))
    assert b.sigma == pytest.approx(a.sigma / lam**2, rel=1e-13)
    assert b.mass == pytest.approx(a.mass / lam, rel=1e-13)
    assert b.ratio == pytest.approx(a.ratio, rel=1e-13)


def test_plaquette_scaling():
    assert plaquette_scaling(1) == (1.0, 1.0, 1.0)
    s4 = plaquette_scaling(4)
    assert (s4.k1_sq, s4.k2) == (4.0, 4.0)
    k1, k2 = scale_factors(1, 4)
    assert sigma_over_m2(StrongCouplingModel(3.0, k1=k1, k2=k2)) == pytest.approx(4 * RATIO_AT_3, rel=1e-14)
    assert sigma_over_m2(StrongCouplingModel(3.0, k1=k1, k2=k2)) == pytest.approx(0.11378, abs=1e-5)
    assert plaquette_scaling(2, 17.0).ratio_factor == pytest.approx(2.0, rel=1e-15)
    with pytest.raises(DomainError):
        plaquette_scaling(0)


@given(st.integers(1, 50), G0_SQ)
def test_plaquette_factor_is_n(n, g0_sq):
    assert plaquette_scaling(n, g0_sq).ratio_factor == pytest.approx(n, rel=1e-12)


def test_dominant_plaquette_table():
    model = StrongCouplingModel(3.0, c_mn={(1, 1): 1.0, (1, 2): 0.8})
    assert dominant_plaquette(model.c_mn) == (1, 2)
    assert (model.k1, model.k2) == (math.sqrt(2.0), 2.0)
    assert StrongCouplingModel(3.0, c_mn={(1, 1): 1.0, (1, 2): 0.1}).k1 == 1.0
    with pytest.raises(DomainError):
        StrongCouplingModel(3.0, c_mn={(1, 1): 1.0, (1, 2): 0.1, (2, 2): 0.5})


# -- dimensional transmutation -------------------------------------------------

ONE_LOOP = BetaFunction((-0.5,), 2)


def test_transmutation_one_loop():
    grid = np.linspace(0.1, 2.0, 50)
    rep = transmutation_check(ONE_LOOP, 1.0, grid)
    assert rep.analytic_deviation <= 1e-8
    # closed form: B(u) = -1/(b0 u) + const with b0 = -0.5
    expected = [2.0 / u - 2.0 for u in grid]
    assert np.allclose(rep.B[0], expected, atol=1e-8)
    assert analytic_antiderivative(-0.5, 2.0, 0.5, 1.0) == pytest.approx(2.0)


def test_transmutation_dimensionless_is_constant():
    rep = transmutation_check(ONE_LOOP, 0.0, np.linspace(0.1, 2.0, 50), constants=(1.7,))
    assert np.all(rep.quantities == 1.7)


def test_transmutation_equal_dimension_ratio():
    rep = transmutation_check(ONE_LOOP, 1.0, np.linspace(0.1, 2.0, 50), constants=(1.0, 3.0), u_refs=(1.0, 0.4))
    assert rep.passed and rep.ratio_spread <= 1e-8


@given(
    st.lists(st.floats(-3.0, -0.05), min_size=1, max_size=3),
    st.floats(0.5, 3.0),
    st.floats(0.1, 1.0),
    st.floats(0.1, 1.0),
)
def test_transmutation_property(coeffs, mu, r1, r2):
    beta = BetaFunction(tuple(coeffs), 2)  # all-negative coefficients: no roots for u > 0
    rep = transmutation_check(beta, mu, np.linspace(0.1, 1.0, 50), u_refs=(r1, r2))
    assert rep.passed, rep.ratio_spread


def test_transmutation_root_named():
    beta = BetaFunction((-1.0, 1.0), 1)  # u (u - 1)
    with pytest.raises(SingularIntegrandError) as info:
        transmutation_check(beta, 1.0, np.linspace(0.5, 2.0, 10))
    assert info.value.root == pytest.approx(1.0, abs=1e-9)


# -- mass-gap scan -------------------------------------------------------------

TOY = BetaFunction((-3.0, 6.5, -4.5, 1.0), 1)  # u (u - 1)(u - 1.5)(u - 2)


def toy_ratio(g):
    return g - 0.5 if g < 1.75 else 3.0 + (g - 2.0) ** 2


def test_toy_roots_and_specials():
    v = mass_gap_scan(TOY, toy_ratio, 1.7, lo=0.01, hi=10.0)
    assert v.fixed_points == pytest.approx((1.0, 1.5, 2.0), abs=1e-10)
    assert [lim.stable for lim in v.limits] == [True, False, True]
    assert v.special_values == pytest.approx((0.5, 3.0), abs=1e-6)
    assert v.verdict is GapVerdict.FINITE


@pytest.mark.parametrize("c", [0.5, 3.0])
def test_toy_gap_vanishes_at_special_values(c):
    assert mass_gap_scan(TOY, toy_ratio, c, lo=0.01, hi=10.0).verdict is GapVerdict.VANISHES


def test_toy_near_special_but_outside_tolerance():
    assert mass_gap_scan(TOY, toy_ratio, 0.5 + 1e-3, lo=0.01, hi=10.0).verdict is GapVerdict.FINITE


def test_single_divergent_root():
    beta = BetaFunction((-1.0, 1.0), 1)  # u (u - 1)
    for c in (1e-3, 0.1, 1.0, 7.0, 1e3):
        v = mass_gap_scan(beta, lambda g: 1.0 / abs(g - 1.0), c, lo=0.01, hi=10.0)
        assert v.limits[0].variant is RatioVariant.DIVERGES
        assert v.special_values == ()
        assert v.verdict is GapVerdict.FINITE


def test_wilson_regime_flag():
    c = 0.5 * wilson_window()
    v = mass_gap_scan(TOY, toy_ratio, c, lo=0.01, hi=10.0)
    assert v.verdict is GapVerdict.FINITE
    assert v.wilson_regime and "verified in Wilson regime" in v.diagnostic
    assert not mass_gap_scan(TOY, toy_ratio, 1.7, lo=0.01, hi=10.0).wilson_regime
    assert wilson_window() == pytest.approx(1.0 / (16.0 * math.log(30.0)), rel=1e-15)


def test_oscillating_limit_undetermined():
    beta = BetaFunction((-1.0, 1.0), 1)
    v = mass_gap_scan(beta, lambda g: 2.0 + math.sin(1.0 / (g - 1.0)), 1.0, lo=0.01, hi=10.0)
    assert v.limits[0].variant is RatioVariant.UNDETERMINED
    assert v.verdict is GapVerdict.UNDETERMINED
    assert v.limits[0].diagnostic


def test_vanishing_limit_and_zero_c():
    beta = BetaFunction((-1.0, 1.0), 1)
    v = mass_gap_scan(beta, lambda g: (g - 1.0) ** 2, 0.0, lo=0.01, hi=10.0)
    assert v.limits[0].variant is RatioVariant.VANISHES
    assert v.verdict is GapVerdict.UNDETERMINED
    assert mass_gap_scan(beta, lambda g: (g - 1.0) ** 2, 0.3, lo=0.01, hi=10.0).verdict is GapVerdict.FINITE


def test_negative_c_rejected():
    with pytest.raises(DomainError):
        mass_gap_scan(TOY, toy_ratio, -1.0, lo=0.01, hi=10.0)


def test_one_sided_limit_smooth():
    variant, value, _ = one_sided_limit(lambda g: math.exp(g), 0.0, 1, 0.1, tol=1e-8)
    assert variant is RatioVariant.FINITE and value == pytest.approx(1.0, abs=1e-8)


@given(st.floats(0.25, 4.0), st.sampled_from([0.5, 1.7, 3.0, 0.01]))
def test_verdict_invariant_under_rescaled_argument(s, c):
    # g' = s g: beta'(g') = s beta(g'/s), F'(g') = F(g'/s)
    coeffs = tuple(ck * s ** (-k) for k, ck in enumerate(TOY.series_coeffs))
    beta_s = BetaFunction(coeffs, 1)
    a = mass_gap_scan(TOY, toy_ratio, c, lo=0.01, hi=10.0)
    b = mass_gap_scan(beta_s, lambda g: toy_ratio(g / s), c, lo=0.01 * s, hi=10.0 * s)
    assert b.verdict is a.verdict
    assert b.special_values == pytest.approx(a.special_values, abs=1e-6)
