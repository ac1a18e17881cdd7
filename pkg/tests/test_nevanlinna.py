import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from escfatou.funcexpr import PreconditionError, parse_function, resolve
from escfatou.hypgeom import Annulus
from escfatou.nevanlinna import (CSV_COLUMNS, EXP_MODEL, K_const, K_n, check_convexity, check_growth_condition,
                                 circle_profile, deficiency_scan, iterate_thresholds, min_modulus_annulus_bound,
                                 modulus_extremes, poisson_jensen_interior_bound, profiles_to_csv)
from escfatou.towers import Tower

EXP = parse_function("exp(z)")
Q = resolve("quotient")


def _quad_proximity(fn, r):
    """Independent oracle: adaptive quadrature of log+|f| on the circle."""
    g = lambda t: max(0.0, math.log(abs(fn(r * complex(math.cos(t), math.sin(t))))))  # noqa: E731
    pts = np.linspace(0, 2 * math.pi, 65)
    return sum(quad(g, a, b, limit=200, epsabs=1e-12)[0] for a, b in zip(pts, pts[1:])) / (2 * math.pi)


def test_exp_characteristic_closed_form():
    p = circle_profile(EXP, 50.0)
    assert p.characteristic == pytest.approx(50 / math.pi, rel=1e-8)
    assert p.converged and p.integrated_counting == 0


def test_quotient_proximity_against_quad():
    fn = lambda z: (np.exp(z) - 1) / (np.exp(-z) + 1)  # noqa: E731
    for r in (20.0, 40.0):
        assert circle_profile(Q, r).proximity == pytest.approx(_quad_proximity(fn, r), rel=1e-7)


def test_quotient_ratio_near_half():
    scan = deficiency_scan(Q, [40.0, 60.0, 80.0])
    assert all(abs(x - 0.5) <= 0.05 for x in scan.ratios)


def test_exp_ratio_is_one():
    assert deficiency_scan(EXP, [10.0, 20.0]).ratios == [1.0, 1.0]


def test_simple_pole_counting():
    f = resolve("simple_pole")
    p = circle_profile(f, math.e)
    assert p.integrated_counting == pytest.approx(1.0)
    assert p.counting == 1


def test_pole_on_circle_handled():
    p = circle_profile(Q, math.pi)
    assert math.isinf(p.max_mod) and p.poles_on_circle and math.isfinite(p.proximity)


def test_modulus_extremes_exp():
    lM, lm = modulus_extremes(EXP, 7.0)
    assert lM == pytest.approx(7.0, abs=1e-9) and lm == pytest.approx(-7.0, abs=1e-9)


def test_K_against_product_oracle():
    mpmath.mp.dps = 30
    prod = mpmath.nprod(lambda j: 1 + 4 / mpmath.mpf(j) ** 2, [2, mpmath.inf])
    assert K_const() == pytest.approx(float(prod ** 2), rel=1e-12)
    assert K_const() == pytest.approx(72.63, abs=0.01)
    partial = 1.0
    for n in range(1, 11):
        partial *= 1 + 4 / (n + 1) ** 2
        assert K_n(n) == pytest.approx(K_const() / partial, rel=1e-13)
        assert K_n(n) > math.sqrt(K_const())


def test_threshold_ladder_exp():
    t = iterate_thresholds(EXP, 50.0, 3, EXP_MODEL)
    assert t.that_values[1].to_float() == pytest.approx(math.exp(50 / math.pi), rel=1e-12)
    assert t.maxmod_values[1].to_float() == pytest.approx(math.exp(50.0), rel=1e-12)
    assert t.that_values[3].level >= 1


def test_threshold_quadrature_matches_model():
    a = iterate_thresholds(EXP, 50.0, 1, model=None).that_values[1].to_float()
    assert a == pytest.approx(math.exp(50 / math.pi), rel=1e-7)


def test_threshold_floor_enforced():
    with pytest.raises(PreconditionError):
        iterate_thresholds(EXP, 20.0, 1, model=None)


@pytest.mark.parametrize("f", [EXP, Q], ids=["exp", "quotient"])
@pytest.mark.parametrize("r,R", [(20.0, 40.0), (30.0, 80.0)])
def test_convexity_margins(f, r, R):
    rep = check_convexity(f, r, R, n_max=2)
    assert rep.holds
    assert all(s["normalized_margin"] >= -1e-6 for s in rep.samples)


def test_growth_condition_quotient():
    assert check_growth_condition(Q, 1.0, 1.0).holds


def test_poisson_jensen_bounds():
    assert poisson_jensen_interior_bound(EXP, 1.0, 3.0, 8.0, 10.0)["dominates"]
    assert poisson_jensen_interior_bound(resolve("simple_pole"), 2.0, 4.0, 8.0, 10.0)["dominates"]


def test_min_modulus_hypothesis_enforced():
    with pytest.raises(PreconditionError):
        min_modulus_annulus_bound(parse_function("exp(z)+10"), Annulus(1, 100), 10)
    rep = min_modulus_annulus_bound(parse_function("2*z"), Annulus(1, 100), 10)
    assert rep["holds"] and rep["branches"][0] == pytest.approx(rep["branches"][1])


def test_csv_columns(tmp_path):
    text = profiles_to_csv([circle_profile(EXP, 5.0)])
    assert text.splitlines()[0].split(",") == CSV_COLUMNS


@settings(max_examples=15, deadline=None)
@given(st.floats(5.0, 60.0), st.floats(1.05, 2.0))
def test_characteristic_increasing(r, q):
    assert circle_profile(Q, r * q, 1e-7).characteristic >= circle_profile(Q, r, 1e-7).characteristic - 1e-6


@settings(max_examples=20, deadline=None)
@given(st.floats(1.0, 300.0))
def test_tower_model_characteristic(r):
    assert EXP_MODEL.characteristic(Tower.of(r)).to_float() == pytest.approx(r / math.pi)
