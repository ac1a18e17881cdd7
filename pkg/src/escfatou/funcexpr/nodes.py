"""Expression tree for meromorphic functions of one complex variable."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional, Union

import numpy as np


class Node:
    """Base class of expression nodes.  Nodes are immutable."""

    __slots__ = ()

    def children(self) -> tuple["Node", ...]:
        return ()


@dataclass(frozen=True)
class Var(Node):
    pass


@dataclass(frozen=True)
class Const(Node):
    value: complex
    name: Optional[str] = None  # "pi", "e" or "i" when written symbolically


@dataclass(frozen=True)
class Neg(Node):
    arg: Node

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class _Binary(Node):
    left: Node
    right: Node

    def children(self):
        return (self.left, self.right)


class Add(_Binary):
    pass


class Sub(_Binary):
    pass


class Mul(_Binary):
    pass


class Div(_Binary):
    pass


@dataclass(frozen=True)
class Pow(Node):
    base: Node
    exponent: int

    def children(self):
        return (self.base,)


@dataclass(frozen=True)
class _Unary(Node):
    arg: Node

    def children(self):
        return (self.arg,)


class Exp(_Unary):
    pass


class Sin(_Unary):
    pass


class Cos(_Unary):
    pass


@dataclass(frozen=True)
class Named(Node):
    """Reference to a named sub-expression.

    ``target`` is either another :class:`FunctionExpr` or a compiled block
    (see :mod:`escfatou.funcexpr.blocks`) such as a fitted rational function.
    """

    name: str
    target: Any = field(compare=False)


FUNCTIONS = {"exp": Exp, "sin": Sin, "cos": Cos}


# -- pole registry entries ---------------------------------------------------

@dataclass(frozen=True)
class PointPole:
    location: complex
    multiplicity: int = 1

    def within(self, radius):
        if abs(self.location) < radius:
            yield self.location, self.multiplicity

    def count_within(self, radius) -> int:
        return self.multiplicity if abs(self.location) < radius else 0

    def integrated(self, r) -> float:
        a = abs(self.location)
        if a >= r:
            return 0.0
        if a == 0:
            return self.multiplicity * math.log(r)
        return self.multiplicity * math.log(r / a)

    def near(self, z, tol):
        return np.abs(np.asarray(z) - self.location) <= tol

    def on_circle(self, r, rel=1e-9):
        if abs(abs(self.location) - r) <= rel * (1 + r):
            return [(self.location, self.multiplicity)]
        return []

    def to_json(self):
        return {"kind": "point", "re": self.location.real, "im": self.location.imag,
                "multiplicity": self.multiplicity}


@dataclass(frozen=True)
class RingPoles:
    """``count`` poles at ``radius * exp(i*(phase + 2*pi*k/count))``."""

    radius: float
    count: int
    phase: float = 0.0
    multiplicity: int = 1

    def within(self, radius):
        if self.radius < radius:
            for j in range(self.count):
                t = self.phase + 2 * math.pi * j / self.count
                yield self.radius * complex(math.cos(t), math.sin(t)), self.multiplicity

    def count_within(self, radius) -> int:
        return self.count * self.multiplicity if self.radius < radius else 0

    def integrated(self, r) -> float:
        if self.radius >= r:
            return 0.0
        return self.count * self.multiplicity * math.log(r / self.radius)

    def on_circle(self, r, rel=1e-9):
        if abs(self.radius - r) <= rel * (1 + r):
            return list(self.within(math.inf))
        return []

    def near(self, z, tol):
        z = np.asarray(z, complex)
        k = np.round((np.angle(z) - self.phase) * self.count / (2 * np.pi))
        p = self.radius * np.exp(1j * (self.phase + 2 * np.pi * k / self.count))
        return np.abs(z - p) <= tol

    def to_json(self):
        return {"kind": "ring", "radius": self.radius, "count": self.count,
                "phase": self.phase, "multiplicity": self.multiplicity}


@dataclass(frozen=True)
class RayPoles:
    """Poles at ``(offset + k) * step`` for ``k = 0, 1, 2, ...`` with ``offset > 0``.

    All poles lie on one ray from the origin, so the counting function has
    a closed form through ``lgamma``.
    """

    step: complex
    offset: float
    multiplicity: int = 1

    def _n(self, radius) -> int:
        # number of k with (offset + k)|step| < radius
        s = abs(self.step)
        if radius <= self.offset * s:
            return 0
        return int(math.ceil(radius / s - self.offset))

    def within(self, radius):
        for k in range(self._n(radius)):
            yield (self.offset + k) * self.step, self.multiplicity

    def count_within(self, radius) -> int:
        return self._n(radius) * self.multiplicity

    def integrated(self, r) -> float:
        n = self._n(r)
        if n == 0:
            return 0.0
        s = abs(self.step)
        # sum_{k<n} log(r / ((offset+k) s))
        total = n * math.log(r / s) - (math.lgamma(self.offset + n) - math.lgamma(self.offset))
        return self.multiplicity * total

    def on_circle(self, r, rel=1e-9):
        s = abs(self.step)
        k = round(r / s - self.offset)
        if k >= 0 and abs((self.offset + k) * s - r) <= rel * (1 + r):
            return [((self.offset + k) * self.step, self.multiplicity)]
        return []

    def near(self, z, tol):
        z = np.asarray(z, complex)
        k = np.maximum(0.0, np.round((z / self.step).real - self.offset))
        return np.abs(z - (self.offset + k) * self.step) <= tol

    def to_json(self):
        return {"kind": "ray", "step_re": self.step.real, "step_im": self.step.imag,
                "offset": self.offset, "multiplicity": self.multiplicity}


PoleFamily = Union[PointPole, RingPoles, RayPoles]


def pole_family_from_json(d) -> PoleFamily:
    kind = d.get("kind", "point")
    if kind == "point":
        return PointPole(complex(d["re"], d.get("im", 0.0)), int(d.get("multiplicity", 1)))
    if kind == "ring":
        return RingPoles(float(d["radius"]), int(d["count"]), float(d.get("phase", 0.0)),
                         int(d.get("multiplicity", 1)))
    if kind == "ray":
        return RayPoles(complex(d["step_re"], d.get("step_im", 0.0)), float(d["offset"]),
                        int(d.get("multiplicity", 1)))
    raise ValueError(f"unknown pole family kind {kind!r}")
