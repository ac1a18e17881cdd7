"""Pole location: explicit registries and an argument-principle fallback."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import nodes as N
from .evaluate import eval_tree

MAX_LISTED = 200_000


class PreconditionError(ValueError):
    """Raised when a precondition on the input function is not met."""


@dataclass
class PoleList:
    """Poles in a disk.  ``status`` is ``"exact"`` (registry or entire),
    ``"numerical"`` (argument principle, stable under refinement) or
    ``"undetermined"`` (the fallback could not decide)."""

    poles: list = field(default_factory=list)
    status: str = "exact"
    source: str = "registry"
    families: tuple = ()  # registry families, when the registry was used
    note: str = ""

    @property
    def determined(self) -> bool:
        return self.status != "undetermined"

    def total(self) -> int:
        return sum(m for _, m in self.poles)

    def to_json(self):
        return {"status": self.status, "source": self.source, "note": self.note,
                "poles": [{"re": p.real, "im": p.imag, "multiplicity": m} for p, m in self.poles]}


# -- tree inspection ----------------------------------------------------------

def denominators(node):
    """Sub-expressions whose zeros may be poles of ``node``, and block pole families."""
    dens, fams = [], []

    def walk(n):
        if isinstance(n, N.Div):
            dens.append(n.right)
        elif isinstance(n, N.Pow) and n.exponent < 0:
            dens.append(n.base)
        elif isinstance(n, N.Named):
            t = n.target
            if hasattr(t, "root"):
                if t.pole_registry is not None:
                    fams.extend(t.pole_registry)
                else:
                    walk(t.root)
            elif hasattr(t, "pole_families"):
                fams.extend(t.pole_families())
            return
        for c in n.children():
            walk(c)

    walk(node)
    return dens, fams


def is_entire(f) -> bool:
    dens, fams = denominators(f.root)
    return not dens and not fams


def is_transcendental(f) -> bool:
    """True when ``f`` involves exp, sin or cos of a nonconstant argument."""
    def has_var(n):
        if isinstance(n, N.Var):
            return True
        if isinstance(n, N.Named):
            return True
        return any(has_var(c) for c in n.children())

    def walk(n):
        if isinstance(n, (N.Exp, N.Sin, N.Cos)) and has_var(n.arg):
            return True
        if isinstance(n, N.Named):
            t = n.target
            if hasattr(t, "root"):
                return walk(t.root)
            return bool(getattr(t, "transcendental", False))
        return any(walk(c) for c in n.children())

    return walk(f.root)


def require_transcendental(f):
    if not is_transcendental(f):
        raise PreconditionError(
            f"{f.tag or f.text!r} is rational; a transcendental function is required")


# -- winding numbers ------------------------------------------------------------

def _contour_values(g, contour):
    with np.errstate(all="ignore"):
        return g(contour)


def winding_number(g, contour_fn, n0=64, n_max=1 << 16):
    """Winding of ``g`` about 0 along a closed curve.

    ``contour_fn(n)`` returns ``n`` points (closed curve, endpoint implicit).
    The sampling doubles until every argument step is below 1 radian and
    two successive refinements agree.  Returns ``None`` if ``g`` vanishes or
    blows up on the curve or the count does not settle.
    """
    prev = None
    n = n0
    while n <= n_max:
        v = _contour_values(g, contour_fn(n))
        a = np.abs(v)
        if not np.all(np.isfinite(v)) or np.any(a < 1e-290):
            return None
        d = np.angle(np.roll(v, -1) / v)
        w = None
        if np.max(np.abs(d)) < 1.0:
            w = int(round(d.sum() / (2 * math.pi)))
            if prev is not None and w == prev:
                return w
        prev = w
        n *= 2
    return None


def circle_contour(c, rho):
    return lambda n: c + rho * np.exp(2j * np.pi * np.arange(n) / n)


def square_contour(c, h):
    corners = np.array([c + h * (-1 - 1j), c + h * (1 - 1j), c + h * (1 + 1j), c + h * (-1 + 1j)])

    def pts(n):
        k = max(n // 4, 1)
        t = np.arange(k) / k
        return np.concatenate([a + (b - a) * t for a, b in zip(corners, np.roll(corners, -1))])
    return pts


def _fn(node):
    def g(z):
        v, _, p = eval_tree(node, z)
        return np.where(p, np.inf, v)
    return g


def _centroid(g, c, rho, k, n=256):
    """Mean of the ``k`` zeros of ``g`` inside the circle, from the Laurent
    coefficient of ``log g`` (spectrally accurate)."""
    w = np.exp(2j * np.pi * np.arange(n) / n)
    v = _contour_values(g, c + rho * w)
    lg = np.log(np.abs(v)) + 1j * np.unwrap(np.angle(v))
    lg = lg - k * 1j * 2 * np.pi * np.arange(n) / n
    coef = np.fft.fft(lg) / n
    b1 = coef[-1]  # coefficient of w^{-1}
    return c - rho * b1 / k


def _zeros_in_square(g, c, h, w, stop, out, depth=0):
    """Recursive quadtree; ``w`` is the known winding of ``g`` on the square."""
    if w == 0:
        return True
    if h <= stop(c) or depth > 60:
        if winding_number(g, circle_contour(c, 2 * h)) != w:
            return False
        out.append((_centroid(g, c, 2 * h, w), w, h))
        return True
    total = 0
    kids = []
    for s in (-0.5 - 0.5j, 0.5 - 0.5j, 0.5 + 0.5j, -0.5 + 0.5j):
        cc = c + s * h
        wk = winding_number(g, square_contour(cc, h / 2))
        if wk is None:
            return False
        total += wk
        kids.append((cc, wk))
    if total != w:
        return False
    return all(_zeros_in_square(g, cc, h / 2, wk, stop, out, depth + 1) for cc, wk in kids)


def _fallback(f, radius, dens, rel_stop=1e-4):
    candidates = []
    # a small irrational offset keeps grid lines off symmetric zeros
    c0 = radius * (0.0123456789 + 0.0098765432j)
    h0 = radius * 1.0731
    stop = lambda c: rel_stop * (1 + abs(c))  # noqa: E731
    for d in dens:
        g = _fn(d)
        w = winding_number(g, square_contour(c0, h0))
        if w is None:
            return None, "denominator vanishes on the search boundary"
        out = []
        if not _zeros_in_square(g, c0, h0, w, stop, out):
            return None, "winding inconsistent under refinement"
        candidates.extend(out)
    # merge candidates that coincide across denominators
    merged = []
    for z, k, h in candidates:
        if all(abs(z - m[0]) > 4 * h for m in merged):
            merged.append((z, k, h))
    poles = []
    fval = lambda z: f(z)  # noqa: E731
    for z, _, h in merged:
        others = [abs(z - m[0]) for m in merged if m[0] != z]
        rho = min([2 * h] + [0.3 * o for o in others])
        wf = winding_number(fval, circle_contour(z, rho))
        if wf is None:
            return None, f"cannot resolve the order of f near {z}"
        if wf < 0 and abs(z) < radius:
            poles.append((complex(z), -wf))
    poles.sort(key=lambda p: (abs(p[0]), math.atan2(p[0].imag, p[0].real)))
    return poles, ""


def poles_within(f, radius: float, *, use_registry: bool = True) -> PoleList:
    """Poles of ``f`` in ``|z| < radius`` with multiplicity."""
    if use_registry and f.pole_registry is not None:
        fams = tuple(f.pole_registry)
        poles, note = [], ""
        if sum(fam.count_within(radius) for fam in fams) <= MAX_LISTED:
            for fam in fams:
                poles.extend(fam.within(radius))
        else:
            note = "too many poles to list; counts come from the families"
        return PoleList(sorted(poles, key=lambda p: abs(p[0])), "exact", "registry", fams, note)
    dens, fams = denominators(f.root)
    block_poles = []
    if sum(fam.count_within(radius) for fam in fams) <= MAX_LISTED:
        for fam in fams:
            block_poles.extend(fam.within(radius))
    if not dens:
        return PoleList(block_poles, "exact", "entire" if not fams else "registry", tuple(fams))
    poles, why = _fallback(f, radius, dens)
    if poles is None:
        return PoleList([], "undetermined", "argument_principle", note=why)
    return PoleList(poles + block_poles, "numerical", "argument_principle")


def counting(pl: PoleList, t: float) -> int:
    """``n(t, f)`` from a resolved pole list (poles with ``|p| < t``)."""
    if pl.families:
        return sum(fam.count_within(t) for fam in pl.families)
    return sum(m for p, m in pl.poles if abs(p) < t)


def integrated_counting(pl: PoleList, r: float) -> float:
    """``N(r, f) = sum log(r/|p|) + n(0) log r`` over poles with ``|p| < r``."""
    if pl.families:
        return float(sum(fam.integrated(r) for fam in pl.families))
    s = 0.0
    for p, m in pl.poles:
        a = abs(p)
        if a < r:
            s += m * (math.log(r) if a == 0 else math.log(r / a))
    return s


def check_registry(f, radius: float = math.inf, per_family: int = 64, tol: float = 1e-10):
    """Registered poles that do not make any denominator vanish.

    Each denominator is tested as ``|D(p)| <= tol * scale(D, p)``.
    """
    dens, fams = denominators(f.root)
    bad = []
    for fam in f.pole_registry or ():
        lim = radius if math.isfinite(radius) else 1e6
        for j, (p, _) in enumerate(fam.within(lim)):
            if j >= per_family:
                break
            z = np.array([p])
            ok = any(fb.near(z, 1e-9 * (1 + abs(p)))[0] for fb in fams)
            for d in dens:
                with np.errstate(all="ignore"):
                    v, s, pm = eval_tree(d, z)
                if pm[0] or abs(v[0]) <= tol * max(s[0], 1e-300):
                    ok = True
                    break
            if not ok:
                bad.append(p)
    return bad
