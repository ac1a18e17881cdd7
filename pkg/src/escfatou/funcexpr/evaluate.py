"""Vectorised evaluation of expression trees.

Two evaluators are provided:

* :func:`eval_tree` returns values together with a magnitude *scale* per
  sample (a forward bound on the size of the intermediate terms).  The
  scale gives a relative condition estimate and lets a denominator that
  vanishes to rounding level be recognised as a pole.
* :func:`log_abs_tree` works in log-polar form ``value = exp(L) * u`` with
  ``|u| = 1`` so that ``log|f|`` stays finite where ``f`` itself overflows,
  e.g. ``exp(z)`` on ``|z| = 10**4``.
"""

from __future__ import annotations

import numpy as np

from .nodes import Add, Const, Cos, Div, Exp, Mul, Named, Neg, Pow, Sin, Sub, Var

EPS = np.finfo(float).eps
OVERFLOW = 1e300
UNDERFLOW = 1e-280
# a denominator within this many rounding units of its own scale is a zero
ZERO_ULPS = 16.0


def eval_tree(node, z):
    """Return ``(value, scale, pole_mask)`` arrays for ``node`` at ``z``."""
    if isinstance(node, Var):
        a = np.abs(z)
        return z, a, np.zeros(z.shape, bool)
    if isinstance(node, Const):
        v = np.full(z.shape, node.value, complex)
        return v, np.abs(v), np.zeros(z.shape, bool)
    if isinstance(node, Neg):
        v, s, p = eval_tree(node.arg, z)
        return -v, s, p
    if isinstance(node, (Add, Sub)):
        va, sa, pa = eval_tree(node.left, z)
        vb, sb, pb = eval_tree(node.right, z)
        v = va + vb if isinstance(node, Add) else va - vb
        return v, sa + sb, pa | pb
    if isinstance(node, Mul):
        va, sa, pa = eval_tree(node.left, z)
        vb, sb, pb = eval_tree(node.right, z)
        return va * vb, sa * sb, pa | pb
    if isinstance(node, Div):
        va, sa, pa = eval_tree(node.left, z)
        vb, sb, pb = eval_tree(node.right, z)
        ab = np.abs(vb)
        zero = (ab <= UNDERFLOW) | (ab <= ZERO_ULPS * EPS * sb)
        safe = np.where(zero, 1.0, vb)
        v = np.where(zero, np.inf, va / safe)
        s = np.where(zero, np.inf, sa / np.where(zero, 1.0, ab) + np.abs(v) * sb / np.where(zero, 1.0, ab))
        return v, s, pa | pb | zero
    if isinstance(node, Pow):
        v, s, p = eval_tree(node.base, z)
        n = node.exponent
        if n >= 0:
            return v ** n, s ** n, p
        zero = np.abs(v) <= np.maximum(UNDERFLOW, ZERO_ULPS * EPS * s)
        safe = np.where(zero, 1.0, v)
        out = np.where(zero, np.inf, safe ** n)
        return out, np.where(zero, np.inf, np.abs(out) * (1 + s / np.abs(safe)) ** (-n)), p | zero
    if isinstance(node, Exp):
        g, s, p = eval_tree(node.arg, z)
        v = np.exp(g)
        return v, np.abs(v) * (1.0 + s), p
    if isinstance(node, (Sin, Cos)):
        g, s, p = eval_tree(node.arg, z)
        v = np.sin(g) if isinstance(node, Sin) else np.cos(g)
        return v, np.cosh(g.imag) * (1.0 + s), p
    if isinstance(node, Named):
        t = node.target
        if hasattr(t, "root"):  # FunctionExpr
            return eval_tree(t.root, z)
        v, s = t.eval_scaled(z)
        p = ~np.isfinite(v)
        if hasattr(t, "pole_mask"):
            p = p | t.pole_mask(z)
        return v, s, p
    raise TypeError(f"unknown node {node!r}")


def _combine(La, ua, Lb, ub):
    """log-polar sum of two log-polar numbers."""
    m = np.maximum(La, Lb)
    finite = np.isfinite(m)
    mm = np.where(finite, m, 0.0)
    with np.errstate(invalid="ignore", over="ignore"):
        s = ua * np.exp(np.where(np.isneginf(La), -np.inf, La - mm)) + \
            ub * np.exp(np.where(np.isneginf(Lb), -np.inf, Lb - mm))
    a = np.abs(s)
    with np.errstate(divide="ignore"):
        L = np.where(finite, mm + np.log(a), m)
    u = np.where(a > 0, s / np.where(a > 0, a, 1.0), 0.0)
    # both operands +inf: magnitude unknown but infinite
    both_inf = np.isposinf(La) & np.isposinf(Lb)
    L = np.where(both_inf, np.inf, L)
    one_inf = np.isposinf(La) ^ np.isposinf(Lb)
    L = np.where(one_inf, np.inf, L)
    u = np.where(one_inf, np.where(np.isposinf(La), ua, ub), u)
    return L, u


def _polar(v):
    a = np.abs(v)
    with np.errstate(divide="ignore"):
        L = np.log(a)
    u = np.where(a > 0, v / np.where(a > 0, a, 1.0), 0.0)
    u = np.where(np.isfinite(a), u, 1.0)
    return L, u


def _exp_polar(Lg, ug):
    """log-polar form of exp(g) from the log-polar form of g."""
    with np.errstate(over="ignore", invalid="ignore"):
        mag = np.exp(Lg)
        g = mag * ug
    re = np.where(np.isfinite(mag), g.real, np.where(ug.real > 0, np.inf, np.where(ug.real < 0, -np.inf, 0.0)))
    im = np.where(np.isfinite(mag), g.imag, 0.0)
    return re, np.exp(1j * im)


def log_abs_tree(node, z):
    """Return ``(L, u)`` with ``value = exp(L) * u``; poles give ``L = +inf``."""
    if isinstance(node, (Var, Const)):
        v = z if isinstance(node, Var) else np.full(z.shape, node.value, complex)
        return _polar(v)
    if isinstance(node, Neg):
        L, u = log_abs_tree(node.arg, z)
        return L, -u
    if isinstance(node, (Add, Sub)):
        La, ua = log_abs_tree(node.left, z)
        Lb, ub = log_abs_tree(node.right, z)
        return _combine(La, ua, Lb, ub if isinstance(node, Add) else -ub)
    if isinstance(node, Mul):
        La, ua = log_abs_tree(node.left, z)
        Lb, ub = log_abs_tree(node.right, z)
        with np.errstate(invalid="ignore"):
            L = La + Lb
        return np.where(np.isnan(L), np.inf, L), ua * ub
    if isinstance(node, Div):
        La, ua = log_abs_tree(node.left, z)
        Lb, ub = log_abs_tree(node.right, z)
        # rounding-level denominators are poles, as in eval_tree
        with np.errstate(all="ignore"):
            _, sb, _ = eval_tree(node.right, z)
        with np.errstate(invalid="ignore"):
            L = La - Lb
        L = np.where(np.isneginf(Lb), np.inf, L)
        zero = np.exp(np.minimum(Lb, 700)) <= ZERO_ULPS * EPS * sb
        L = np.where(zero & np.isfinite(sb), np.inf, L)
        return np.where(np.isnan(L), np.inf, L), ua * np.conj(ub)
    if isinstance(node, Pow):
        L, u = log_abs_tree(node.base, z)
        n = node.exponent
        with np.errstate(invalid="ignore"):
            Ln = n * L
        return Ln, u ** n
    if isinstance(node, Exp):
        Lg, ug = log_abs_tree(node.arg, z)
        return _exp_polar(Lg, ug)
    if isinstance(node, (Sin, Cos)):
        Lg, ug = log_abs_tree(node.arg, z)
        # e^{iw} and e^{-iw}
        L1, u1 = _exp_polar(Lg, 1j * ug)
        L2, u2 = _exp_polar(Lg, -1j * ug)
        if isinstance(node, Sin):
            L, u = _combine(L1, u1, L2, -u2)
            return L - np.log(2.0), u / 1j
        L, u = _combine(L1, u1, L2, u2)
        return L - np.log(2.0), u
    if isinstance(node, Named):
        t = node.target
        if hasattr(t, "root"):
            return log_abs_tree(t.root, z)
        if hasattr(t, "log_abs"):
            return t.log_abs(z)
        return _polar(t.eval_scaled(z)[0])
    raise TypeError(f"unknown node {node!r}")

