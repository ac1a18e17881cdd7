"""The :class:`FunctionExpr` container, point evaluation and JSON AST I/O."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import nodes as N
from .evaluate import EPS, OVERFLOW, eval_tree, log_abs_tree
from .parser import parse_tree, to_text

SCHEMA_VERSION = 1
POLE_REL_TOL = 1e-9


def _as_family(p):
    if isinstance(p, (N.PointPole, N.RingPoles, N.RayPoles)):
        return p
    if isinstance(p, dict):
        return N.pole_family_from_json(p)
    loc, mult = p
    return N.PointPole(complex(loc), int(mult))


@dataclass(frozen=True)
class FunctionExpr:
    """An immutable meromorphic function given by an expression tree.

    ``pole_registry`` is ``None`` (unknown, resolved by the argument
    principle when needed) or a tuple of pole families.  A plain list of
    ``(location, multiplicity)`` pairs is accepted as well.
    """

    root: N.Node
    pole_registry: Optional[tuple] = None
    tag: str = ""

    def __post_init__(self):
        if self.pole_registry is not None:
            object.__setattr__(self, "pole_registry",
                               tuple(_as_family(p) for p in self.pole_registry))

    @property
    def text(self) -> str:
        return to_text(self.root)

    def __call__(self, z):
        """Vectorised values; poles come back as ``inf``."""
        z = np.asarray(z, complex)
        with np.errstate(all="ignore"):
            v, _, p = eval_tree(self.root, np.atleast_1d(z))
        v = np.where(p | self.registry_mask(np.atleast_1d(z)), np.inf, v)
        return v.reshape(z.shape) if z.shape else v[0]

    def registry_mask(self, z, rel_tol=POLE_REL_TOL):
        z = np.asarray(z, complex)
        mask = np.zeros(z.shape, bool)
        for fam in self.pole_registry or ():
            mask |= fam.near(z, rel_tol * (1 + np.abs(z)))
        return mask

    def with_poles(self, registry) -> "FunctionExpr":
        return FunctionExpr(self.root, tuple(registry), self.tag)

    def to_json(self) -> dict:
        d = {"schema_version": SCHEMA_VERSION, "tag": self.tag,
             "text": self.text, "root": node_to_json(self.root)}
        if self.pole_registry is not None:
            d["pole_registry"] = [p.to_json() for p in self.pole_registry]
        return d


@dataclass(frozen=True)
class EvalResult:
    kind: str  # "finite", "pole" or "overflow"
    value: Optional[complex] = None
    condition_estimate: float = 0.0

    def to_json(self):
        d = {"kind": self.kind, "condition_estimate": self.condition_estimate}
        if self.value is not None:
            d["re"], d["im"] = self.value.real, self.value.imag
        return d


def parse_function(text: str, *, poles=None, tag: str = "", names=None) -> FunctionExpr:
    """Parse DSL text such as ``"(exp(z)-1)/(exp(-z)+1)"``.

    ``names`` maps ``@name`` references to other functions or blocks.
    """
    return FunctionExpr(parse_tree(text, names), poles, tag or text)


def as_function(f) -> FunctionExpr:
    return f if isinstance(f, FunctionExpr) else parse_function(str(f))


def evaluate_array(f: FunctionExpr, z, pole_rel_tol=POLE_REL_TOL):
    """Vectorised evaluation.

    Returns ``(values, kind, cond)`` where ``kind`` is 0 finite, 1 pole,
    2 overflow and ``cond`` a relative forward error estimate.
    """
    z = np.atleast_1d(np.asarray(z, complex))
    with np.errstate(all="ignore"):
        v, s, p = eval_tree(f.root, z)
        a = np.abs(v)
        cond = np.where(a > 0, EPS * s / np.where(a > 0, a, 1.0), np.where(s > 0, np.inf, 0.0))
    pole = p | f.registry_mask(z, pole_rel_tol)
    over = ~pole & (~np.isfinite(v) | (a > OVERFLOW) | (s > OVERFLOW))
    kind = np.where(pole, 1, np.where(over, 2, 0))
    return v, kind, cond


def evaluate(f, z, pole_rel_tol=POLE_REL_TOL) -> EvalResult:
    f = as_function(f)
    v, kind, cond = evaluate_array(f, complex(z), pole_rel_tol)
    k = int(kind[0])
    if k == 1:
        return EvalResult("pole")
    if k == 2:
        return EvalResult("overflow")
    return EvalResult("finite", complex(v[0]), float(cond[0]))


def log_abs(f, z) -> np.ndarray:
    """``log|f(z)|`` without forming ``f(z)``; ``+inf`` at poles."""
    f = as_function(f)
    z = np.asarray(z, complex)
    zz = np.atleast_1d(z)
    with np.errstate(all="ignore"):
        L, _ = log_abs_tree(f.root, zz)
    L = np.where(f.registry_mask(zz), np.inf, L)
    return L.reshape(z.shape) if z.shape else float(L[0])


# -- JSON AST -----------------------------------------------------------------

_BIN = {"add": N.Add, "sub": N.Sub, "mul": N.Mul, "div": N.Div}
_UN = {"exp": N.Exp, "sin": N.Sin, "cos": N.Cos}


def node_to_json(node) -> dict:
    if isinstance(node, N.Var):
        return {"op": "var"}
    if isinstance(node, N.Const):
        d = {"op": "const", "re": node.value.real, "im": node.value.imag}
        if node.name:
            d["name"] = node.name
        return d
    if isinstance(node, N.Neg):
        return {"op": "neg", "arg": node_to_json(node.arg)}
    for op, cls in _BIN.items():
        if type(node) is cls:
            return {"op": op, "left": node_to_json(node.left), "right": node_to_json(node.right)}
    if isinstance(node, N.Pow):
        return {"op": "pow", "base": node_to_json(node.base), "exponent": node.exponent}
    for op, cls in _UN.items():
        if type(node) is cls:
            return {"op": op, "arg": node_to_json(node.arg)}
    if isinstance(node, N.Named):
        t = node.target
        if isinstance(t, FunctionExpr):
            return {"op": "named", "name": node.name, "function": t.to_json()}
        return {"op": "named", "name": node.name, "block": t.to_json()}
    raise TypeError(f"unknown node {node!r}")


def node_from_json(d) -> N.Node:
    op = d["op"]
    if op == "var":
        return N.Var()
    if op == "const":
        return N.Const(complex(d["re"], d.get("im", 0.0)), d.get("name"))
    if op == "neg":
        return N.Neg(node_from_json(d["arg"]))
    if op in _BIN:
        return _BIN[op](node_from_json(d["left"]), node_from_json(d["right"]))
    if op == "pow":
        return N.Pow(node_from_json(d["base"]), int(d["exponent"]))
    if op in _UN:
        return _UN[op](node_from_json(d["arg"]))
    if op == "named":
        if "function" in d:
            return N.Named(d["name"], function_from_json(d["function"]))
        from .blocks import block_from_json
        return N.Named(d["name"], block_from_json(d["block"]))
    raise ValueError(f"unknown op {op!r} in function JSON")


def function_from_json(d) -> FunctionExpr:
    if "root" in d:
        root = node_from_json(d["root"])
    elif "text" in d:
        root = parse_tree(d["text"])
    else:
        raise ValueError("function JSON needs 'root' or 'text'")
    reg = d.get("pole_registry")
    return FunctionExpr(root, reg, d.get("tag", ""))


def save_function(f: FunctionExpr, path) -> None:
    with open(path, "w") as fh:
        json.dump(f.to_json(), fh, indent=1)


def load_function(path) -> FunctionExpr:
    with open(path) as fh:
        return function_from_json(json.load(fh))
