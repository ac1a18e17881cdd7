"""Reference functions with known pole data."""

from __future__ import annotations

import math

from .expr import FunctionExpr, parse_function
from .nodes import PointPole, RayPoles

# (tag, DSL text, registry or None for "no registry attached")
_ENTRIES = [
    ("identity", "z", []),
    ("exp", "exp(z)", []),
    ("quotient", "(exp(z)-1)/(exp(-z)+1)",
     # e^{-z} = -1  <=>  z = (k + 1/2) 2 pi i, k in Z
     [RayPoles(2j * math.pi, 0.5), RayPoles(-2j * math.pi, 0.5)]),
    ("sine_shift", "z + sin(z) + 2*pi", []),
    ("exp_shift", "z + exp(-z) + 2*pi*i", []),
    ("simple_pole", "1/(z-1)", [PointPole(1.0)]),
    ("double_pole", "1/((z-1)^2 (z+3))", [PointPole(1.0, 2), PointPole(-3.0)]),
    ("square", "z^2", []),
    ("cube", "z^3", []),
    ("half", "z/2", []),
    ("exp_plus_ten", "exp(z)+10", []),
    ("double", "2*z", []),
]


def corpus() -> dict[str, FunctionExpr]:
    return {tag: parse_function(text, poles=reg, tag=tag) for tag, text, reg in _ENTRIES}


def _norm(text: str) -> str:
    return "".join(text.split())


def resolve(text: str, names=None) -> FunctionExpr:
    """Parse ``text``; corpus tags or texts pick up their pole registry."""
    key = _norm(text)
    for tag, src, reg in _ENTRIES:
        if key == tag or key == _norm(src):
            return parse_function(src, poles=reg, tag=tag)
    return parse_function(text, names=names)
