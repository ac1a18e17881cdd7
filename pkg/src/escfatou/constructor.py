"""Finite-stage synthesis of the constructed examples: the Runge cascade
with a multiply connected wandering annulus chain, the pole cloud with
vanishing deficiency and the escape-rate gadget built from entire
plateau interpolants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .funcexpr import FunctionExpr, PreconditionError, as_function, iterate_orbit, parse_function
from .funcexpr.blocks import PlateauBlock, PlateauTerm, RationalBlock, RingTerm, ring_minus_limit
from .funcexpr.expr import evaluate_array
from .funcexpr.nodes import RingPoles
from .funcexpr.poles import counting, integrated_counting, poles_within

SCHEMA_VERSION = 1
E2 = math.exp(2.0)


class ConstructionError(RuntimeError):
    """A construction step or its verification failed."""


# -- cascade plan ------------------------------------------------------------------

@dataclass
class ConstructionPlan:
    """Radii ``(r_n, r'_n, R'_n, R_n)``, guard radii ``(a_n, b_n)`` and the
    tolerance schedule for stages ``1..N``.  One extra stage of radii is kept
    so that the last target map ``T_N`` is defined."""

    stages: int
    radii: list   # (r, rp, Rp, R) for n = 1..N+1
    guard: list   # (a, b) for n = 1..N
    eps: list     # eps_n for n = 1..N
    gap: float = 10.0

    @property
    def eps_tail(self):
        return [math.fsum(self.eps[i:]) for i in range(len(self.eps))]

    def T_coeff(self, n: int) -> float:
        """``c_n = r'_{n+1} / r_n`` (``n`` is 1-based)."""
        return self.radii[n][1] / self.radii[n - 1][0]

    def violations(self, guard_bands=None) -> list:
        out = []
        rad = self.radii
        for i, (r, rp, Rp, R) in enumerate(rad):
            n = i + 1
            if not 10 < r < rp < Rp < R:
                out.append(f"stage {n}: 10 < r < r' < R' < R")
            if not 2 <= rp / r <= 3:
                out.append(f"stage {n}: r'/r = {rp / r:.6g} outside [2, 3]")
            if not 2 <= R / Rp <= 3:
                out.append(f"stage {n}: R/R' = {R / Rp:.6g} outside [2, 3]")
            if i + 1 < len(rad):
                r2, rp2, Rp2, R2 = rad[i + 1]
                if not 9 * R < r2:
                    out.append(f"stage {n}: 9 R_n < r_(n+1)")
                if not math.isclose(R / r, Rp2 / rp2, rel_tol=1e-12):
                    out.append(f"stage {n}: R_n/r_n = R'_(n+1)/r'_(n+1)")
        for i, (a, b) in enumerate(self.guard):
            n = i + 1
            r, _, _, R = rad[i]
            if not b > R + n:
                out.append(f"stage {n}: b_n > R_n + n")
            if not a < r - n:
                out.append(f"stage {n}: a_n < r_n - n")
            if not a > r / 4:
                out.append(f"stage {n}: a_n > r_n/4 (guard circle outside B_n)")
            if guard_bands is not None:
                lo, hi = guard_bands
                if not (lo <= b / R <= hi and lo <= r / a <= hi):
                    out.append(f"stage {n}: guard ratios outside band {guard_bands}")
        e = self.eps
        if e and not e[0] < 0.5:
            out.append("eps_1 < 1/2")
        for i in range(len(e) - 1):
            if not e[i + 1] < e[i] / 2:
                out.append(f"stage {i + 2}: eps_(n+1) < eps_n / 2")
        return out

    def to_json(self):
        return {"schema_version": SCHEMA_VERSION, "stages": self.stages, "radii": self.radii,
                "guard": self.guard, "eps": self.eps, "eps_tail": self.eps_tail, "gap": self.gap}

    @classmethod
    def from_json(cls, d):
        return cls(int(d["stages"]), [tuple(x) for x in d["radii"]], [tuple(x) for x in d["guard"]],
                   list(d["eps"]), float(d.get("gap", 10.0)))


def default_eps(N: int) -> list:
    """``eps_n = 2^{-n-1}`` with a hair of slack so that halving is strict."""
    return [2.0 ** (-n - 1) * (1 - 1e-9 * n) for n in range(1, N + 1)]


def plan_theorem1(N: int, seed=(20.0, 40.0, 80.0, 160.0), gap: float = 10.0, eps=None,
                  guard=None) -> ConstructionPlan:
    """Radii for ``N`` stages from the seed ``(r_1, r'_1, R'_1, R_1)``.

    Later stages reuse the seed ratios ``r'/r`` and ``R/R'``; ``r_{n+1} =
    gap * R_n`` and ``R'_{n+1} = (R_n/r_n) r'_{n+1}``.  Guard circles default
    to ``a_n = r_n - n - 1`` and ``b_n = R_n + n + 1`` (offset floored at
    ``1e-12`` of the radius); ``guard`` may be a
    callable ``(n, r, R) -> (a, b)``.
    """
    if N < 1:
        raise PreconditionError("need at least one stage")
    r, rp, Rp, R = map(float, seed)
    if not r > 10:
        raise PreconditionError("seed violates 10 < r_1")
    if not (2 <= rp / r <= 3 and 2 <= R / Rp <= 3 and r < rp < Rp < R):
        raise PreconditionError("seed ratio targets outside the [2, 3] bands")
    if not gap > 9:
        raise PreconditionError("gap must exceed 9 so that 9 R_n < r_(n+1)")
    inner, outer = rp / r, R / Rp
    radii = [(r, rp, Rp, R)]
    for _ in range(N):
        r0, _, _, R0 = radii[-1]
        r2 = gap * R0
        rp2 = inner * r2
        Rp2 = (R0 / r0) * rp2
        radii.append((r2, rp2, Rp2, outer * Rp2))
    # the offset gets a relative floor so that it survives rounding at huge radii
    g = guard or (lambda n, r, R: (r - max(n + 1.0, 1e-12 * r), R + max(n + 1.0, 1e-12 * R)))
    guards = [tuple(map(float, g(n, radii[n - 1][0], radii[n - 1][3]))) for n in range(1, N + 1)]
    plan = ConstructionPlan(N, radii, guards, list(eps) if eps is not None else default_eps(N), gap)
    bad = plan.violations()
    if bad:
        raise PreconditionError("infeasible plan: " + "; ".join(bad))
    return plan


# -- Runge fitting -----------------------------------------------------------------

@dataclass(frozen=True)
class Piece:
    """A compact set centred at 0: ``disk`` (``|z| <= outer``), ``annulus``
    (``inner <= |z| <= outer``) or ``circle`` (``|z| = outer``)."""

    kind: str
    outer: float
    inner: float = 0.0

    def boundary_radii(self):
        return [self.outer] if self.kind in ("disk", "circle") else [self.inner, self.outer]

    @property
    def lo(self):
        return self.inner if self.kind == "annulus" else (0.0 if self.kind == "disk" else self.outer)

    def to_json(self):
        return {"kind": self.kind, "inner": self.inner, "outer": self.outer}


def disk(r):
    return Piece("disk", float(r))


def annulus(a, b):
    return Piece("annulus", float(b), float(a))


def circle(r):
    return Piece("circle", float(r))


def _target_fn(t):
    if isinstance(t, (int, float, complex)):
        return lambda z: np.full(np.shape(z), complex(t))
    if isinstance(t, (str, FunctionExpr)):
        f = as_function(t)
        return lambda z: evaluate_array(f, z)[0]
    return t


def _gaps(pieces):
    """Bounded complementary components of the union as ``(lo, hi)`` radius pairs."""
    ps = sorted(pieces, key=lambda p: p.lo)
    for a, b in zip(ps, ps[1:]):
        if not b.lo > a.outer:
            raise PreconditionError("pieces must be pairwise disjoint with positive separation")
    gaps = []
    if ps[0].kind != "disk":
        gaps.append((0.0, ps[0].lo))
    gaps.extend((a.outer, b.lo) for a, b in zip(ps, ps[1:]))
    return gaps


@dataclass
class RationalApproximant:
    poles: list                 # (location, order)
    poly: np.ndarray
    scale: float
    rings: list                 # RingTerm
    achieved_error: list        # certified sup error per piece (dense resample)
    fit_error: list             # sup error on the fitting samples
    degrees: dict
    accepted: bool
    eps: float

    def block(self) -> RationalBlock:
        return RationalBlock(self.poly, self.scale, self.rings)

    def function(self, name="approx") -> FunctionExpr:
        b = self.block()
        return parse_function(f"@{name}", names={name: b}, poles=b.pole_families(), tag=name)

    def __call__(self, z):
        return self.block()(z)

    def to_json(self):
        return {"schema_version": SCHEMA_VERSION, "block": self.block().to_json(),
                "poles": [{"re": p.real, "im": p.imag, "order": k} for p, k in self.poles],
                "achieved_error": self.achieved_error, "fit_error": self.fit_error,
                "degrees": self.degrees, "accepted": self.accepted, "eps": self.eps}


def _circle_pts(radii, n):
    th = 2 * np.pi * (np.arange(n) + 0.5) / n
    return np.concatenate([r * np.exp(1j * th) for r in radii])


def runge_fit(pieces, eps: float, allowed_poles=None, max_degree: int = 128,
              samples_per_term: int = 8) -> RationalApproximant:
    """Least-squares rational approximation of piecewise targets.

    ``pieces`` is a list of ``(Piece, target)``.  Poles are rings of ``m``
    equally spaced points on the circles in ``allowed_poles`` (default: one
    circle at the geometric centre of every bounded gap).  The error is
    analytic on each piece, so sampling its boundary circles suffices.  The
    polynomial degree and ring size double until the sup error on a 4x
    denser resample is below ``eps`` and exceeds the fitting error by less
    than ``0.1 eps``.
    """
    geo = [p for p, _ in pieces]
    tf = [_target_fn(t) for _, t in pieces]
    gaps = _gaps(geo)
    if allowed_poles is None:
        allowed_poles = [math.sqrt(lo * hi) if lo > 0 else hi / 2 for lo, hi in gaps]
    allowed_poles = [float(x) for x in allowed_poles]
    for lo, hi in gaps:
        if not any(lo < x < hi for x in allowed_poles):
            raise PreconditionError(f"no allowed pole circle in the gap {lo:g} < |z| < {hi:g}")
    s = max(p.outer for p in geo)
    best = None
    d = 0
    while True:
        m = d if allowed_poles else 0
        n_s = max(64, samples_per_term * (d + 1 + m * len(allowed_poles)))
        fit = _lsq(geo, tf, allowed_poles, d, m, s, n_s)
        dense = _piece_errors(geo, tf, fit, 4 * n_s)
        ok = all(e < eps for e in dense) and all(de - fe < 0.1 * eps for de, fe in zip(dense, fit["err"]))
        cand = (max(dense), fit, dense)
        if best is None or cand[0] < best[0]:
            best = cand
        if ok or d >= max_degree:
            break
        d = 1 if d == 0 else 2 * d
    _, fit, dense = best
    poles = []
    for rt in fit["rings"]:
        if np.any(rt.coeffs != 0):
            poles.extend(RingPoles(rt.rho, rt.m).within(rt.rho * 1.5))
    accepted = all(e < eps for e in dense) and all(de - fe < 0.1 * eps for de, fe in zip(dense, fit["err"]))
    ra = RationalApproximant(poles, fit["poly"], s, fit["rings"], [float(x) for x in dense],
                             [float(x) for x in fit["err"]], {"poly": fit["d"], "ring": fit["m"]},
                             accepted, eps)
    if not accepted:
        raise ConstructionError(f"fit stagnated: best certified error {max(dense):.3e} > eps {eps:.3e}")
    return ra


def _design(z, d, m, rhos, s):
    cols = [(z / s)[:, None] ** np.arange(d + 1)]
    from .funcexpr.blocks import ring_basis
    for rho in rhos if m else []:
        cols.append(ring_basis(z, rho, m, np.arange(m)))
    return np.concatenate(cols, axis=1)


def _lsq(geo, tf, rhos, d, m, s, n):
    zs, ys = [], []
    for p, t in zip(geo, tf):
        z = _circle_pts(p.boundary_radii(), n)
        zs.append(z)
        ys.append(t(z))
    Z, Y = np.concatenate(zs), np.concatenate(ys)
    A = _design(Z, d, m, rhos, s)
    w = np.max(np.abs(A), axis=0)
    w[w == 0] = 1
    c = np.linalg.lstsq(A / w, Y, rcond=None)[0] / w
    poly = c[: d + 1]
    rings = [RingTerm(rho, m, np.arange(m), c[d + 1 + j * m: d + 1 + (j + 1) * m])
             for j, rho in enumerate(rhos if m else [])]
    fit = {"poly": poly, "rings": rings, "d": d, "m": m}
    blk = RationalBlock(poly, s, rings)
    fit["err"] = [float(np.max(np.abs(blk(z) - y))) for z, y in zip(zs, ys)]
    return fit


def _piece_errors(geo, tf, fit, n):
    blk = RationalBlock(fit["poly"], max(p.outer for p in geo), fit["rings"])
    out = []
    for p, t in zip(geo, tf):
        z = _circle_pts(p.boundary_radii(), n)
        out.append(float(np.max(np.abs(blk(z) - t(z)))))
    return out


# -- cascade assembly --------------------------------------------------------------

@dataclass
class StageFit:
    """``f_k(z) = c z [Q(z; rho_o, m) - Q(z; rho_i, m)]`` with ``Q = 1/(1 - (z/rho)^m)``.

    Between the two rings ``f_k`` is close to ``c z``; inside and outside both
    it is small.  ``residual`` is ``f_k - c z [rho_i < |z| < rho_o]``,
    formed from :func:`ring_minus_limit` without cancellation.
    """

    c: float
    rho_i: float
    rho_o: float
    m: int
    errors: dict = field(default_factory=dict)

    def residual(self, z):
        z = np.asarray(z, complex)
        return self.c * z * (ring_minus_limit(z, self.rho_o, self.m) - ring_minus_limit(z, self.rho_i, self.m))

    def rings(self):
        return [RingTerm(self.rho_o, self.m, np.array([1]), np.array([self.c * self.rho_o + 0j])),
                RingTerm(self.rho_i, self.m, np.array([1]), np.array([-self.c * self.rho_i + 0j]))]

    def to_json(self):
        return {"c": self.c, "rho_i": self.rho_i, "rho_o": self.rho_o, "m": self.m, "errors": self.errors}


def _sup_on(radii, fn, n):
    return max(float(np.max(np.abs(fn(_circle_pts([r], n))))) for r in radii)


def fit_stage(plan: ConstructionPlan, k: int, previous: list, n_samples: int = 256,
              m_start: int = 8, m_cap: int = 1 << 62) -> StageFit:
    """Smallest doubling ``m`` for which stage ``k`` meets its three
    requirements, certified on a 4x denser resample:

    ``|sum_{j<=k} f_j - T_k| < eps_k`` on ``A_k``, ``|f_k| < eps_k`` on
    ``B_k = B(0, r_k/4)`` and ``|sum_{j<=k} f_j| < eps_k`` on the guard
    circles ``C_k``.
    """
    r, _, _, R = plan.radii[k - 1]
    a, b = plan.guard[k - 1]
    eps = plan.eps[k - 1]
    c = plan.T_coeff(k)
    st = StageFit(c, math.sqrt(a * r), math.sqrt(R * b), m_start)

    def total(z):
        return sum((p.residual(z) for p in previous), np.zeros(np.shape(z), complex)) + st.residual(z)

    checks = {"A": ([r, R], total), "B": ([r / 4], st.residual), "C": ([a, b], total)}
    while True:
        errs = {}
        for key, (radii, fn) in checks.items():
            e1 = _sup_on(radii, fn, n_samples)
            e4 = _sup_on(radii, fn, 4 * n_samples)
            errs[key] = {"fit": e1, "certified": e4}
        ok = all(v["certified"] < eps and v["certified"] - v["fit"] < 0.1 * eps for v in errs.values())
        st.errors = errs
        if ok:
            return st
        if st.m >= m_cap:
            raise ConstructionError(f"stage {k}: fit stagnated at m={st.m}, errors {errs}")
        st.m *= 2


def assemble_theorem1(plan: ConstructionPlan, n_samples: int = 256, ratio_pairs: int = 16,
                      seed: int = 0):
    """``f^(N) = sum_{k<=N} f_k`` and its stage-qualified verification report."""
    N = plan.stages
    stages = []
    for k in range(1, N + 1):
        stages.append(fit_stage(plan, k, stages, n_samples))
    rings = [rt for s in stages for rt in s.rings()]
    block = RationalBlock(np.zeros(0, complex), 1.0, rings)
    f = parse_function("@cascade", names={"cascade": block}, poles=block.pole_families(),
                       tag=f"runge_cascade_N{N}")

    def resid(z):
        return sum((s.residual(z) for s in stages), np.zeros(np.shape(z), complex))

    tail = plan.eps_tail
    n4 = 4 * n_samples
    rep = {"schema_version": SCHEMA_VERSION, "stages": N, "plan": plan.to_json(),
           "stage_fits": [s.to_json() for s in stages], "A": [], "C": [], "containment": []}
    for n in range(1, N + 1):
        r, _, _, R = plan.radii[n - 1]
        a, b = plan.guard[n - 1]
        dev = _sup_on([r, R], resid, n4)
        rep["A"].append({"n": n, "sup_deviation": dev, "eps_tail": tail[n - 1], "holds": dev < tail[n - 1],
                         "margin": tail[n - 1] - dev})
        cv = _sup_on([a, b], resid, n4)
        rep["C"].append({"n": n, "sup_abs": cv, "holds": cv < 1, "margin": 1 - cv})
        r2, rp2, Rp2, R2 = plan.radii[n]
        lo = rp2 - dev   # |f| >= c r_n - dev on |z| = r_n
        hi = Rp2 + dev
        rep["containment"].append({"n": n, "image_lower": lo, "image_upper": hi, "target": [r2, R2],
                                   "holds": r2 < lo and hi < R2 and dev <= tail[n - 1]})
    b1 = _sup_on([plan.radii[0][0] / 4], resid, n4)
    rep["B1"] = {"sup_abs": b1, "holds": b1 < 1}
    # ratio product bound with the finite tail sums
    prods = []
    for n in range(1, N + 1):
        p = 1.0
        for k in range(1, N - n + 2):
            rp, e = plan.radii[n + k - 1][1], tail[n + k - 2]
            p *= (rp + e) / (rp - e)
        prods.append(p)
    rep["ratio_products"] = prods
    rep["ratio_product_holds"] = all(p < E2 for p in prods)
    rep["orbit_ratios"] = _orbit_ratio_check(f, plan, ratio_pairs, seed)
    rep["spot_check"] = _spot_check(block, plan)
    rep["all_hold"] = bool(all(x["holds"] for key in ("A", "C", "containment") for x in rep[key])
                           and rep["B1"]["holds"] and rep["ratio_product_holds"]
                           and rep["orbit_ratios"]["holds"] and rep["spot_check"]["holds"])
    return f, rep


def _orbit_ratio_check(f, plan, pairs, seed):
    """``|f^m(a)|/|f^m(b)| <= (|a|/|b|) e^2`` for random ``a, b`` in ``A_1``, ``m <= N-1``."""
    rng = np.random.default_rng(seed)
    r, _, _, R = plan.radii[0]
    worst = 0.0
    for _ in range(pairs):
        pts = np.exp(rng.uniform(math.log(r), math.log(R), 2) + 1j * rng.uniform(0, 2 * np.pi, 2))
        a, b = complex(pts[0]), complex(pts[1])
        for _ in range(plan.stages - 1):
            a, b = complex(f(a)), complex(f(b))
            q = (abs(a) / abs(b)) / (abs(pts[0]) / abs(pts[1]))
            worst = max(worst, q, 1 / q)
    return {"pairs": pairs, "worst_normalised_ratio": float(worst), "bound": E2,
            "holds": bool(worst < E2)}


def _spot_check(block, plan, n=10_000):
    """Direct evaluation of ``f^(N)`` on boundary samples of every ``A_n``:
    the image must land in ``A(r_{n+1}, R_{n+1})``."""
    per = max(n // (2 * plan.stages), 8)
    rows = []
    for k in range(plan.stages):
        r, _, _, R = plan.radii[k]
        r2, _, _, R2 = plan.radii[k + 1]
        v = np.abs(block(_circle_pts([r, R], per)))
        rows.append({"n": k + 1, "min": float(v.min()), "max": float(v.max()),
                     "holds": bool(v.min() > r2 and v.max() < R2)})
    return {"samples": per * 2 * plan.stages, "rows": rows, "holds": all(x["holds"] for x in rows)}


# -- pole cloud ------------------------------------------------------------------

def pole_cloud(f_base, radii, eps, scan_radii=None, samples: int = 512):
    """``g = f + sum_n (eps_n / (2^n m_n)) sum_k 1/(z - r_n w_n^k)`` with
    ``m_n = floor(r_{n+1}) + 1`` and ``w_n = exp(2 pi i / m_n)``.

    ``radii`` holds ``r_1..r_{N+1}``; the last radius only fixes ``m_N``.
    Each ring is a single closed-form term, so rings with ~1e11 poles are
    never expanded.
    """
    from .nevanlinna import deficiency_scan

    f = as_function(f_base)
    radii = [float(r) for r in radii]
    N = len(radii) - 1
    if N < 1 or len(eps) < N:
        raise PreconditionError("need r_1..r_{N+1} and eps_1..eps_N")
    ms = [int(math.floor(radii[n + 1])) + 1 for n in range(N)]
    growth = [radii[n + 1] > 2 * radii[n] ** 2 for n in range(N)]
    fams = [RingPoles(radii[n], ms[n]) for n in range(N)]
    for fam in f.pole_registry or ():
        for cf in fams:
            pts = [p for p, _ in fam.within(cf.radius * 1.01)]
            if pts and np.any(cf.near(np.array(pts), 1e-9 * cf.radius)):
                raise ConstructionError(f"pole collision between the base function and the ring r={cf.radius:g}")
    # sum_k 1/(z - rho w^k) = -(m/rho) w^(m-1)/(1 - w^m) in w = z/rho
    rings = [RingTerm(radii[n], ms[n], np.array([ms[n] - 1]),
                      np.array([-eps[n] / (2.0 ** (n + 1) * radii[n]) + 0j])) for n in range(N)]
    cloud = RationalBlock(np.zeros(0, complex), 1.0, rings)
    g = parse_function(f"({f.text}) + @cloud", names={"cloud": cloud},
                       poles=list(f.pole_registry or ()) + fams, tag="pole_cloud")

    rep = {"schema_version": SCHEMA_VERSION, "radii": radii, "m": ms, "eps": list(eps[:N]),
           "growth_ok": growth, "difference": [], "counting": [], "integrated_counting": []}
    # |f - g| on circles strictly between consecutive rings
    for k in range(N):
        lo, hi = (1 + eps[k]) * radii[k], (1 - eps[k]) * radii[k + 1]
        for r in np.geomspace(lo, hi, 5):
            z = _circle_pts([r], samples)
            actual = float(np.max(np.abs(cloud(z))))
            est = math.fsum(eps[n] / (2.0 ** (n + 1) * abs(r - radii[n])) for n in range(N))
            rep["difference"].append({"r": float(r), "sup_abs": actual, "estimate": est,
                                      "holds": bool(actual < 1 and est < 1)})
    pl = poles_within(g, radii[-1] * 1.5)
    for k in range(N):
        t = radii[k] + 1
        n_t = counting(pl, t)
        rep["counting"].append({"t": t, "n": n_t, "expected": sum(ms[: k + 1]),
                                "holds": bool(n_t == sum(ms[: k + 1]))})
        # n(t) >= m_k >= r_{k+1} beyond r_k, so N(r) >= r once r >= e r_k
        for r in np.geomspace(math.e * radii[k], (1 - eps[k]) * radii[k + 1], 4):
            Nr = integrated_counting(pl, r)
            rep["integrated_counting"].append({"r": float(r), "N": Nr, "holds": bool(Nr >= r)})
    if scan_radii is None:
        scan_radii = [math.sqrt(radii[k] * radii[k + 1]) for k in range(N) if radii[k + 1] < 1e7]
    if scan_radii:
        scan = deficiency_scan(g, scan_radii)
        rep["deficiency"] = scan.to_json()
        ratios = [x for x in scan.ratios if x == x]
        rep["deficiency_trend_decreasing"] = all(b <= a for a, b in zip(ratios, ratios[1:]))
    ok = [x["holds"] for key in ("difference", "counting", "integrated_counting") for x in rep[key]]
    rep["all_hold"] = bool(all(ok) and all(growth))
    return g, rep


# -- escape-rate gadget --------------------------------------------------------------

PLATEAU_HALF_WIDTH = 0.365   # in units of alpha_n; sqrt(2)/4 < 0.365 < 3/8
K_ALPHA = 2000.0             # plateau steepness k_n * alpha_n
BETA_MAX = 0.004             # beta_n <= BETA_MAX * alpha_n


def _big_exp(a, rho, n):
    """``e^{a^rho}`` (``rho = inf`` means ``e^{e^{(log a)^2}}``), refusing overflow."""
    x = math.exp(math.log(a) ** 2) if math.isinf(rho) else a ** rho
    if not x < 690:
        raise ConstructionError(f"stage {n}: e^(a_n^rho) with a_n={a:g} exceeds double range")
    return math.exp(x)


@dataclass
class GadgetPlan:
    a: list        # a_0..a_{N+2}
    rho: float
    N: int
    alpha: list    # alpha_n, n = 1..N+1 (index n-1)
    beta: list     # beta_n, n = 1..N
    eps: list      # eps_n, n = 1..N

    def phi(self, n, z):
        """``phi_n(z) = (alpha_{n+1}/alpha_n)(z - a_n) + a_{n+1}``."""
        return self.alpha[n] / self.alpha[n - 1] * (z - self.a[n]) + self.a[n + 1]

    def varphi_shift(self, n):
        return _big_exp(self.a[n], self.rho, n)

    def sets(self):
        """``G_n``, ``H_n`` (disks) and ``C_n`` (rectangles) for ``n = 1..N``."""
        out = []
        for n in range(1, self.N + 1):
            a, al, b = self.a[n], self.alpha[n - 1], self.beta[n - 1]
            out.append(("G", n, ("disk", a, al / 4)))
            out.append(("H", n, ("disk", -a, al / 4)))
            out.append(("C", n, ("rect", a + 3 * al / 8, a + 5 * al / 8, b)))
        return out

    def disjointness(self):
        """Pairwise gaps of all gadget sets and ``B(0,1)``; negative means overlap."""
        shapes = self.sets() + [("B", 0, ("disk", 0.0, 1.0))]
        worst = math.inf
        bad = []
        for i in range(len(shapes)):
            for j in range(i + 1, len(shapes)):
                g = _gap(shapes[i][2], shapes[j][2])
                worst = min(worst, g)
                if g <= 0:
                    bad.append((shapes[i][:2], shapes[j][:2]))
        return worst, bad

    def to_json(self):
        return {"schema_version": SCHEMA_VERSION, "a": self.a, "rho": "inf" if math.isinf(self.rho) else self.rho,
                "N": self.N, "alpha": self.alpha, "beta": self.beta, "eps": self.eps}


def _gap(s, t):
    if s[0] == "rect" and t[0] == "disk":
        s, t = t, s
    if s[0] == "disk" and t[0] == "disk":
        return abs(s[1] - t[1]) - s[2] - t[2]
    if s[0] == "disk":
        _, c, r = s
        _, x0, x1, h = t
        dx = max(x0 - c, 0.0, c - x1)
        return math.hypot(dx, 0.0) - r
    _, x0, x1, h = s
    _, y0, y1, k = t
    return max(y0 - x1, x0 - y1)


def plan_gadget(a, rho, N: int, eps=None) -> GadgetPlan:
    a = [float(x) for x in a]
    if len(a) < N + 3:
        raise PreconditionError(f"need a_0..a_{N + 2} ({N + 3} points), got {len(a)}")
    if not (a[0] > 1 and all(y > x for x, y in zip(a, a[1:]))):
        raise PreconditionError("need 1 < a_0 < a_1 < ... increasing")
    alpha = [min(a[n] - a[n - 1], a[n + 1] - a[n]) for n in range(1, N + 2)]
    d = [a[n] - a[n - 1] for n in range(1, N + 1)]
    base = BETA_MAX / 2 * min(alpha[n - 1] / d[n - 1] for n in range(1, N + 1))
    beta = [base * (1 + n / (N + 1)) * d[n - 1] for n in range(1, N + 1)]
    eps = list(eps) if eps is not None else [1e-3 * 2.0 ** -n for n in range(1, N + 1)]
    plan = GadgetPlan(a[: N + 3], float(rho), N, alpha, beta, eps)
    worst, bad = plan.disjointness()
    if bad:
        raise PreconditionError(f"gadget sets intersect: {bad[:3]}")
    return plan


def _defect(t: PlateauTerm, z):
    """``plateau - 1`` without cancellation."""
    from scipy.special import erfc
    return -0.5 * (erfc(t.k * (z - t.lo)) + erfc(t.k * (t.hi - z)))


def escape_rate_gadget(a, rho, N: int, eps=None, samples: int = 256):
    """Entire ``f`` with ``f ~ phi_n`` on ``G_n``, ``f ~ varphi_n`` on ``H_n``,
    ``|f| < 1/2`` on ``C_n`` and ``B(0,1)``, and the Hermite data
    ``f(a_n) = a_{n+1}``, ``f'(a_n) = alpha_{n+1}/alpha_n``, ``f(-a_n) =
    e^{a_n^rho}``, ``f'(-a_n) = 1``.

    Each piece is an affine map times a smooth erf plateau.  Interpolation is
    enforced by a per-plateau 2x2 correction of the affine coefficients.
    """
    plan = plan_gadget(a, rho, N, eps)
    terms, meta = [], []
    for n in range(1, N + 1):
        al = plan.alpha[n - 1]
        w, k = PLATEAU_HALF_WIDTH * al, K_ALPHA / al
        an = plan.a[n]
        terms.append(PlateauTerm(an, complex(plan.a[n + 1]), complex(plan.alpha[n] / al), an - w, an + w, k))
        meta.append(("G", n, an, plan.a[n + 1], plan.alpha[n] / al))
        big = plan.varphi_shift(n)
        terms.append(PlateauTerm(-an, complex(big), 1 + 0j, -an - w, -an + w, k))
        meta.append(("H", n, -an, big, 1.0))
    block = PlateauBlock(terms)
    for _ in range(2):
        for t, (_, _, p, v, d) in zip(block.terms, meta):
            z = np.array([p + 0j])
            P = t.plateau(z)[0]
            r0 = v - block(z)[0]
            r1 = d - block.derivative(z)[0]
            t.c0 += r0 / P
            t.c1 += r1 / P
    f = parse_function("@gadget", names={"gadget": block}, tag=f"escape_gadget_N{N}")
    rep = _gadget_report(plan, block, f, meta, samples)
    return f, rep


def _gadget_report(plan, block, f, meta, samples):
    th = 2 * np.pi * (np.arange(samples) + 0.5) / samples
    rep = {"schema_version": SCHEMA_VERSION, "plan": plan.to_json(), "interpolation": [], "G": [], "H": [],
           "C": []}
    rep["disjointness_min_gap"] = plan.disjointness()[0]
    for t, (kind, n, p, v, d) in zip(block.terms, meta):
        z = np.array([p + 0j])
        fv, fd = block(z)[0], block.derivative(z)[0]
        scale = max(1.0, abs(v))
        res = max(abs(fv - v) / scale, abs(fd - d) / max(1.0, abs(d)))
        rep["interpolation"].append({"set": kind, "n": n, "point": p, "residual_scaled": float(res),
                                     "holds": bool(res <= 1e-10)})
        al = plan.alpha[n - 1]
        zc = p + al / 4 * np.exp(1j * th)
        others = sum((o(zc) for o in block.terms if o is not t), np.zeros(samples, complex))
        own = (t.c0 + t.c1 * (zc - t.p)) * _defect(t, zc) + (t.c0 - v) + (t.c1 - d) * (zc - t.p)
        dev = float(np.max(np.abs(own + others)))
        eps = plan.eps[n - 1]
        rep[kind].append({"n": n, "sup_deviation": dev, "eps": eps, "holds": dev < eps})
    for n in range(1, plan.N + 1):
        an, al, b = plan.a[n], plan.alpha[n - 1], plan.beta[n - 1]
        x0, x1 = an + 3 * al / 8, an + 5 * al / 8
        s = np.linspace(0, 1, samples)
        edge = np.concatenate([x0 + (x1 - x0) * s - 1j * b, x1 + 1j * b * (2 * s - 1),
                               x1 - (x1 - x0) * s + 1j * b, x0 - 1j * b * (2 * s - 1)])
        v = float(np.max(np.abs(block(edge))))
        rep["C"].append({"n": n, "sup_abs": v, "holds": v < 0.5})
    b0 = float(np.max(np.abs(block(np.exp(1j * th)))))
    f0, d0 = block(np.array([0j]))[0], block.derivative(np.array([0j]))[0]
    rep["B0"] = {"sup_abs": b0, "f0": float(abs(f0)), "df0": float(abs(d0)), "holds": bool(b0 < 0.5 and f0 == 0 and d0 == 0)}
    orb = iterate_orbit(f, plan.a[1], plan.N, escape_radius=math.inf)
    pts = np.asarray(orb.points).real
    errs = [abs(pts[n] - plan.a[n + 1]) / plan.a[n + 1] for n in range(len(pts))]
    tube = all(abs(orb.points[n] - plan.a[n + 1]) < plan.alpha[n] / 4 for n in range(min(len(pts), plan.N)))
    rep["orbit"] = {"points": [float(x) for x in pts], "max_rel_error": float(max(errs)),
                    "holds": bool(len(pts) == plan.N + 1 and max(errs) <= 1e-10 and tube)}
    wit = []
    for n in range(1, plan.N + 1):
        lf = math.log(abs(block(np.array([-plan.a[n] + 0j]))[0]))
        target = math.log(plan.varphi_shift(n))
        lo = math.log(lf) / math.log(plan.a[n]) if lf > 0 else -math.inf
        wit.append({"n": n, "log_abs_f_minus_a": lf, "a_rho": target, "loglogM_over_log_a_lower": lo,
                    "holds": lf >= target * (1 - 1e-12)})
    rep["H_witness"] = wit
    ok = [x["holds"] for key in ("interpolation", "G", "H", "C", "H_witness") for x in rep[key]]
    rep["all_hold"] = bool(all(ok) and rep["B0"]["holds"] and rep["orbit"]["holds"])
    return rep
