import json
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from escfatou.constructor import (E2, ConstructionError, ConstructionPlan, annulus, assemble_theorem1,
                                  default_eps, disk, escape_rate_gadget, plan_gadget, plan_theorem1, pole_cloud,
                                  runge_fit)
from escfatou.funcexpr import PreconditionError, load_function, save_function
from escfatou.funcexpr.poles import counting, integrated_counting, poles_within


# -- plan --------------------------------------------------------------------------

def test_plan_stage_two_example():
    p = plan_theorem1(4)
    r1, rp1, Rp1, R1 = p.radii[0]
    r2, rp2, Rp2, R2 = p.radii[1]
    assert 2 <= rp2 / r2 <= 3
    assert Rp2 == pytest.approx((R1 / r1) * rp2) and Rp2 == pytest.approx(8 * rp2)
    assert r2 > 1440
    assert R2 / r2 >= 4 * R1 / r1 - 1e-9


def test_plan_single_stage():
    p = plan_theorem1(1)
    assert p.stages == 1 and p.violations() == []


def test_plan_rejects_bad_seed():
    with pytest.raises(PreconditionError, match="10 < r_1"):
        plan_theorem1(2, seed=(8, 16, 32, 64))
    with pytest.raises(PreconditionError, match="bands"):
        plan_theorem1(2, seed=(20, 80, 100, 200))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.floats(10.5, 100), st.floats(2.01, 2.99), st.floats(1.5, 5), st.floats(2.01, 2.99),
       st.floats(9.5, 30))
def test_plan_invariants(N, r, q1, mid, q2, gap):
    p = plan_theorem1(N, seed=(r, q1 * r, mid * q1 * r, q2 * mid * q1 * r), gap=gap)
    assert p.violations() == []
    for n in range(1, N + 1):
        rn, _, _, Rn = p.radii[n - 1]
        assert Rn / rn >= 4 ** (n - 1) * p.radii[0][3] / p.radii[0][0] * (1 - 1e-12)
    tail = p.eps_tail
    assert all(t < 2 * e for t, e in zip(tail, p.eps))


def test_plan_json_round_trip():
    p = plan_theorem1(3)
    q = ConstructionPlan.from_json(json.loads(json.dumps(p.to_json())))
    assert q.radii == p.radii and q.guard == p.guard and q.eps == p.eps


def test_default_eps_schedule():
    e = default_eps(6)
    assert e[0] < 0.5 and all(b < a / 2 for a, b in zip(e, e[1:]))
    assert e[0] == pytest.approx(0.25)


# -- runge fit -------------------------------------------------------------------------

def test_runge_polynomial_target():
    ra = runge_fit([(disk(5), "z^2")], 1e-6)
    assert ra.poles == [] and max(ra.achieved_error) < 1e-6 and ra.degrees["ring"] == 0


def test_runge_degree_zero():
    ra = runge_fit([(disk(5), "1 + 0.0001*z")], 1e-2)
    assert ra.degrees == {"poly": 0, "ring": 0}


def _cauchy_oracle(z, n=400):
    """Trapezoid discretisation of the Cauchy integral for the piecewise target
    (2z near A(20,160), 0 near B(0,5)) on |t| = 170 (ccw) and |t| = 15 (cw)."""
    z = np.asarray(z, complex)
    th = 2 * np.pi * np.arange(n) / n
    out = np.zeros_like(z)
    for rho, sign in ((170.0, 1), (15.0, -1)):
        t = rho * np.exp(1j * th)
        dt = 1j * t * (2 * np.pi / n)
        out += sign * np.sum((2 * t)[None, :] * dt[None, :] / (t[None, :] - z[:, None]), axis=1) / (2j * np.pi)
    return out


def test_runge_two_pieces_against_cauchy_oracle():
    ra = runge_fit([(annulus(20, 160), lambda z: 2 * z), (disk(5), 0)], 1e-3)
    assert ra.accepted and all(e < 1e-3 for e in ra.achieved_error)
    assert all(5 < abs(p) < 20 for p, _ in ra.poles)
    rng = np.random.default_rng(1)
    zs = np.concatenate([np.exp(rng.uniform(np.log(20), np.log(160), 50)) * np.exp(2j * np.pi * rng.random(50)),
                         rng.uniform(0, 5, 50) * np.exp(2j * np.pi * rng.random(50))])
    assert np.max(np.abs(ra(zs) - _cauchy_oracle(zs))) < 2e-3


def test_runge_certificate_resample():
    ra = runge_fit([(annulus(20, 160), lambda z: 2 * z), (disk(5), 0)], 1e-3)
    for fit, dense in zip(ra.fit_error, ra.achieved_error):
        assert dense - fit < 0.1 * ra.eps


def test_runge_missing_gap_pole():
    with pytest.raises(PreconditionError):
        runge_fit([(annulus(20, 160), lambda z: 2 * z), (disk(5), 0)], 1e-3, allowed_poles=[200.0])


def test_runge_stagnation():
    with pytest.raises(ConstructionError, match="stagnated"):
        runge_fit([(annulus(20, 160), lambda z: 2 * z), (disk(5), 0)], 1e-12, max_degree=4)


def test_runge_approximant_function():
    ra = runge_fit([(annulus(20, 160), lambda z: 2 * z), (disk(5), 0)], 1e-3)
    f = ra.function()
    assert abs(f(50.0) - 100.0) < 1e-3 and len(f.pole_registry) == 1


# -- Runge cascade ------------------------------------------------------------------------

@pytest.fixture(scope="module")
def cascade():
    return assemble_theorem1(plan_theorem1(4))


def test_cascade_report(cascade):
    f, rep = cascade
    assert rep["all_hold"]
    assert all(a["holds"] for a in rep["A"]) and all(c["holds"] for c in rep["containment"])
    assert all(p < E2 for p in rep["ratio_products"])
    assert E2 == pytest.approx(7.389, abs=1e-3)


def _mp_deviation(stages, z, c, n):
    """|f^(N)(z) - T_n(z)| from the rational terms in 60-digit arithmetic."""
    with mpmath.workdps(60):
        z = mpmath.mpc(z)
        tot = mpmath.mpc(0)
        for s in stages:
            for rho, sign in ((s["rho_o"], 1), (s["rho_i"], -1)):
                w = z / mpmath.mpf(rho)
                tot += sign * s["c"] * z / (1 - w ** s["m"])
        return float(abs(tot - mpmath.mpf(c) * z))


def test_cascade_mpmath_spot_check(cascade):
    f, rep = cascade
    plan = ConstructionPlan.from_json(rep["plan"])
    stages = rep["stage_fits"]
    for n in (1, 2):
        r, _, _, R = plan.radii[n - 1]
        for z in (r * 1.0001, math.sqrt(r * R) * 1j, -R * 0.9999):
            dev = _mp_deviation(stages, z, plan.T_coeff(n), n)
            assert dev < plan.eps_tail[n - 1]


def test_cascade_function_round_trip(cascade, tmp_path):
    f, _ = cascade
    save_function(f, tmp_path / "f.json")
    g = load_function(tmp_path / "f.json")
    z = np.array([50.0 + 1j, 3000.0, 1e6j])
    assert np.allclose(g(z), f(z), rtol=1e-14)


def test_cascade_orbit_ratios(cascade):
    f, rep = cascade
    assert rep["orbit_ratios"]["holds"] and rep["orbit_ratios"]["pairs"] >= 16


# -- pole cloud -------------------------------------------------------------------------

@pytest.fixture(scope="module")
def cloud():
    return pole_cloud("exp(z/1000)", [10, 300, 2e5, 8.1e10], [0.1, 0.05, 0.025])


def test_cloud_counts(cloud):
    g, rep = cloud
    assert rep["all_hold"]
    assert rep["m"] == [301, 200001, 81000000001]
    pl = poles_within(g, 11)
    assert counting(pl, 11) == 301


def test_cloud_registry_unique(cloud):
    g, _ = cloud
    radii = [fam.radius for fam in g.pole_registry]
    assert len(radii) == len(set(radii)) == 3


def test_cloud_integrated_counting_oracle(cloud):
    g, rep = cloud
    pl = poles_within(g, 1e12)
    r = math.e * 10
    assert integrated_counting(pl, r) == pytest.approx(301 * math.log(r / 10))
    assert integrated_counting(pl, r) >= r


def test_cloud_difference_estimate(cloud):
    _, rep = cloud
    assert all(d["sup_abs"] < 1 and d["estimate"] < 1 for d in rep["difference"])


def test_cloud_deficiency_trend(cloud):
    _, rep = cloud
    r = rep["deficiency"]["ratios"]
    assert r[-1] < r[-2]


# -- gadget ---------------------------------------------------------------------------

A_GEOM = [10 * 2 ** n for n in range(8)]


@pytest.fixture(scope="module")
def gadget():
    return escape_rate_gadget(A_GEOM, 1.0, 5)


def test_gadget_interpolation(gadget):
    f, rep = gadget
    assert rep["all_hold"]
    for n in range(1, 5):
        assert abs(f(A_GEOM[n]) - A_GEOM[n + 1]) <= 1e-10 * A_GEOM[n + 1]


def test_gadget_orbit(gadget):
    _, rep = gadget
    assert rep["orbit"]["points"][:5] == [20.0, 40.0, 80.0, 160.0, 320.0]


def test_gadget_maps():
    plan = plan_gadget(A_GEOM, 1.0, 5)
    for n in range(1, 6):
        assert plan.phi(n, plan.a[n]) == plan.a[n + 1]


def test_gadget_H_witness(gadget):
    f, rep = gadget
    for w in rep["H_witness"][:3]:
        assert w["log_abs_f_minus_a"] == pytest.approx(w["a_rho"], rel=1e-12)


def test_gadget_infinite_order_overflow():
    with pytest.raises(ConstructionError, match="stage 1"):
        escape_rate_gadget(A_GEOM, math.inf, 5)


def test_gadget_bad_points():
    with pytest.raises(PreconditionError):
        plan_gadget([10, 20, 15, 40, 80, 160, 320, 640], 1.0, 5)
    with pytest.raises(PreconditionError):
        plan_gadget(A_GEOM[:5], 1.0, 5)
