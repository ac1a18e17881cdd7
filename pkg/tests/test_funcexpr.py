import cmath
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from escfatou.funcexpr import (ParseError, PointPole, PreconditionError, RayPoles, RingPoles, check_registry,
                               corpus, counting, evaluate, evaluate_array, function_from_json,
                               integrated_counting, is_entire, is_transcendental, iterate_orbit, load_function,
                               log_abs, parse_function, poles_within, require_transcendental, resolve,
                               save_function, winding_number)
from escfatou.funcexpr.expr import node_to_json
from escfatou.funcexpr.parser import to_text
from escfatou.funcexpr.poles import circle_contour


def test_identity_and_polynomial():
    assert evaluate("z", 3 + 4j).value == 3 + 4j
    assert evaluate("z^2 + 1", 2j).value == pytest.approx(-3)


def test_sine_shift_at_pi():
    v = evaluate("z + sin(z) + 2*pi", math.pi).value
    assert v == pytest.approx(3 * math.pi, rel=1e-15)


def test_simple_pole_reported():
    r = evaluate("1/(z-1)", 1)
    assert r.kind == "pole"


def test_quotient_pole_with_and_without_registry():
    q = resolve("quotient")
    assert q.pole_registry
    assert evaluate(q, 1j * math.pi).kind == "pole"
    bare = parse_function(q.text)
    assert evaluate(bare, 1j * math.pi).kind == "pole"


def test_overflow_classified():
    assert evaluate("exp(z)", 800).kind == "overflow"


def test_log_abs_large_argument():
    assert log_abs(parse_function("exp(z)"), 1e4) == pytest.approx(1e4)


def test_vectorised_matches_cmath():
    z = np.array([0.3 + 0.2j, -1.5 + 2j, 4 - 1j])
    v, kind, _ = evaluate_array(parse_function("exp(z)*sin(z) - cos(z)/(z+3)"), z)
    ref = [cmath.exp(w) * cmath.sin(w) - cmath.cos(w) / (w + 3) for w in z]
    assert np.allclose(v, ref, rtol=1e-13)
    assert np.all(kind == 0)


@pytest.mark.parametrize("bad", ["exp(z", "z +* 2", "foo(z)", "sin(z, z)", "2 ^ z", ""])
def test_parse_errors_have_location(bad):
    with pytest.raises(ParseError) as ei:
        parse_function(bad)
    assert ei.value.column >= 1


def test_juxtaposition_multiplies():
    assert evaluate("2 pi", 0).value == pytest.approx(2 * math.pi)
    assert evaluate("(z-1)(z+1)", 3).value == pytest.approx(8)


_leaf = st.sampled_from(["z", "1", "2.5", "pi", "i"])


def _expr():
    return st.recursive(
        _leaf,
        lambda ch: st.one_of(
            st.tuples(ch, st.sampled_from(["+", "-", "*", "/"]), ch).map(lambda t: f"({t[0]} {t[1]} {t[2]})"),
            ch.map(lambda s: f"exp({s})"), ch.map(lambda s: f"sin({s})"), ch.map(lambda s: f"-({s})"),
            st.tuples(ch, st.integers(-3, 3)).map(lambda t: f"({t[0]})^{t[1]}"),
        ), max_leaves=8)


@settings(max_examples=200, deadline=None)
@given(_expr())
def test_text_round_trip(text):
    f = parse_function(text)
    g = parse_function(to_text(f.root))
    assert g.root == f.root


@settings(max_examples=100, deadline=None)
@given(_expr())
def test_json_round_trip(text):
    f = parse_function(text)
    g = function_from_json(json.loads(json.dumps(f.to_json())))
    assert g.root == f.root


def test_file_round_trip_with_registry(tmp_path):
    q = resolve("quotient")
    save_function(q, tmp_path / "q.json")
    g = load_function(tmp_path / "q.json")
    assert g.text == q.text and len(g.pole_registry) == len(q.pole_registry)


def test_transcendental_detection():
    assert is_transcendental(parse_function("exp(z)"))
    assert not is_transcendental(parse_function("exp(2)*z^3"))
    with pytest.raises(PreconditionError):
        require_transcendental(parse_function("1/(z-1)"))
    assert is_entire(parse_function("z + sin(z)")) and not is_entire(parse_function("1/z"))


def test_corpus_entries_parse():
    for tag, f in corpus().items():
        assert f.tag == tag
        if f.pole_registry:
            assert check_registry(f, 20.0) == []


def test_registry_and_fallback_agree_for_quotient():
    q = resolve("quotient")
    reg = poles_within(q, 20.0)
    num = poles_within(q, 20.0, use_registry=False)
    assert num.status == "numerical"
    assert sorted(round(abs(p), 6) for p, _ in num.poles) == sorted(round(abs(p), 6) for p, _ in reg.poles)
    assert counting(reg, 20.0) == 6


def test_fallback_multiplicity():
    pl = poles_within(parse_function("1/((z-1)^2 (z+3))"), 5.0, use_registry=False)
    got = {round(p.real, 6): m for p, m in pl.poles}
    assert got == {1.0: 2, -3.0: 1}


def test_integrated_counting_closed_form():
    pl = poles_within(parse_function("1/(z-1)", poles=[PointPole(1)]), math.e * 2)
    assert integrated_counting(pl, math.e) == pytest.approx(1.0)


def test_ring_family_counts_without_listing():
    fam = RingPoles(10.0, 10 ** 11)
    assert fam.count_within(11) == 10 ** 11 and fam.count_within(9) == 0
    assert fam.integrated(10 * math.e) == pytest.approx(1e11)


def test_ray_family_on_circle():
    pts = [p for fam in resolve("quotient").pole_registry for p in fam.on_circle(math.pi)]
    assert sorted(p.imag for p, _ in pts) == pytest.approx([-math.pi, math.pi])
    assert RayPoles(2j * math.pi, 0.5).on_circle(2.0) == []


def test_winding_of_z_cubed():
    assert winding_number(lambda z: z ** 3, circle_contour(0, 2.0)) == 3


def test_orbit_statuses():
    o = iterate_orbit(parse_function("exp(z)"), 3, 100, 1e8)
    assert o.status == "escaped" and o.step == 2
    o = iterate_orbit(parse_function("1/(z-1)"), 1, 10)
    assert o.status == "hit_pole" and o.step == 0
    o = iterate_orbit(parse_function("z/2"), 1, 5)
    assert o.status == "bounded_horizon" and len(o.points) == 6


def test_sine_shift_orbit_exact():
    o = iterate_orbit(resolve("sine_shift"), math.pi, 10, 1e300)
    assert np.allclose(o.points, [(2 * n + 1) * math.pi for n in range(11)], rtol=1e-14)


def test_node_json_has_op_tags():
    d = node_to_json(parse_function("exp(z)+1").root)
    assert d["op"] == "add"
