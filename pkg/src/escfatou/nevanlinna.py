"""Circle statistics of meromorphic functions and their growth inequalities.

Notation: ``M(r)`` and ``mhat(r)`` are the max and min of ``|f|`` on
``|z| = r``; ``m(r)`` is the circle mean of ``log+|f|``; ``n(t)`` counts
poles in ``|z| < t``; ``N(r) = int_0^r (n(t) - n(0))/t dt + n(0) log r``;
``T = m + N``; ``That(r) = exp T(r)`` and ``That_n``, ``M_n`` are the
iterates in the radius variable.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .funcexpr import (PreconditionError, as_function, log_abs, poles_within,
                       require_transcendental)
from .funcexpr.evaluate import OVERFLOW
from .funcexpr.poles import circle_contour, counting, integrated_counting, is_entire, winding_number
from .hypgeom import Annulus
from .towers import Tower, margin

SCHEMA_VERSION = 1
QUAD_REL_TOL = 1e-8
QUAD_N0 = 256
QUAD_N_CAP = 1 << 19
SCAN_N = 1024
GOLDEN = (math.sqrt(5) - 1) / 2
R0_DEFAULT = 10.0


@dataclass
class CircleProfile:
    r: float
    max_mod: float
    min_mod: float
    proximity: float
    counting: int
    integrated_counting: float
    characteristic: float
    samples_used: int
    quadrature_error_estimate: float
    converged: bool = True
    log_max_mod: float = 0.0
    log_min_mod: float = 0.0
    poles_on_circle: int = 0
    pole_status: str = "exact"

    def to_json(self):
        d = asdict(self)
        d["schema_version"] = SCHEMA_VERSION
        for k in ("max_mod", "log_max_mod", "min_mod", "log_min_mod"):
            if not math.isfinite(d[k]):
                d[k] = "inf" if d[k] > 0 else "-inf"
        return d


def _golden(fn, a, b, maximize, iters=60):
    sgn = -1.0 if maximize else 1.0
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = sgn * fn(c), sgn * fn(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = sgn * fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = sgn * fn(d)
    return fn((a + b) / 2)


def modulus_extremes(f, r, n=SCAN_N, n_refine=3):
    """``(log M(r), log mhat(r))`` by a coarse scan plus golden-section refinement."""
    f = as_function(f)
    th = 2 * np.pi * np.arange(n) / n
    L = np.asarray(log_abs(f, r * np.exp(1j * th)), float)
    g = lambda t: float(log_abs(f, complex(r * math.cos(t), r * math.sin(t))))  # noqa: E731
    h = 2 * np.pi / n
    finite = np.where(np.isfinite(L), L, np.nan)
    lmax = math.inf if np.any(np.isposinf(L)) else -math.inf
    if lmax < math.inf:
        for i in np.argsort(-np.nan_to_num(finite, nan=-np.inf))[:n_refine]:
            lmax = max(lmax, L[i], _golden(g, th[i] - h, th[i] + h, True))
    lmin = math.inf
    for i in np.argsort(np.nan_to_num(finite, nan=np.inf))[:n_refine]:
        lmin = min(lmin, L[i], _golden(g, th[i] - h, th[i] + h, False))
    return float(lmax), float(lmin)


def _pole_angles(pl, r, rel=1e-9):
    """Poles on the circle ``|z| = r`` as ``(angle, multiplicity)``."""
    out = []
    for p, mlt in pl.poles:
        if abs(abs(p) - r) <= rel * (1 + r):
            out.append((math.atan2(p.imag, p.real), mlt))
    return out


def proximity(f, r, tol=QUAD_REL_TOL, singular=(), n0=QUAD_N0, n_cap=QUAD_N_CAP):
    """``m(r, f)`` by dyadic trapezoid refinement.

    ``singular`` lists ``(angle, multiplicity)`` of poles on the circle; the
    periodic model ``-k log|2 sin((t - t0)/2)|``, whose mean is zero, is
    subtracted so the remaining integrand is bounded.

    Returns ``(value, samples, error_estimate, converged)``.
    """
    f = as_function(f)
    # shift the grid by an irrational fraction of a step off any singular angle
    t0 = (singular[0][0] if singular else 0.0) + 2 * np.pi * GOLDEN / n0

    def g(th):
        L = np.asarray(log_abs(f, r * np.exp(1j * th)), float)
        if np.any(np.isnan(L)) or np.any(np.isposinf(L) & (len(singular) == 0)):
            raise FloatingPointError(f"log|f| not finite on |z|={r}")
        v = np.maximum(L, 0.0)
        for ts, k in singular:
            v = v + k * np.log(np.abs(2 * np.sin((th - ts) / 2)))
        return v

    n = n0
    vals = g(t0 + 2 * np.pi * np.arange(n) / n)
    total = math.fsum(vals)
    est = total / n
    err = math.inf
    while n < n_cap:
        new = g(t0 + 2 * np.pi * (np.arange(n) + 0.5) / n)
        total += math.fsum(new)
        n *= 2
        nxt = total / n
        err = abs(nxt - est) / 3
        est = nxt
        if err * 3 < tol * (1 + abs(est)):
            return est, n, err, True
    return est, n, err, False


def circle_profile(f, r: float, quad_rel_tol: float = QUAD_REL_TOL, pole_list=None) -> CircleProfile:
    """All circle statistics of ``f`` at radius ``r``."""
    f = as_function(f)
    if not r > 0:
        raise ValueError("radius must be positive")
    pl = pole_list if pole_list is not None else poles_within(f, r * (1 + 1e-9) + 1e-12)
    if not pl.determined:
        raise PreconditionError(f"poles of f in |z|<{r} undetermined: {pl.note}")
    on = _pole_angles(pl, r) if not pl.families else _family_angles(pl.families, r)
    inside = r * (1 - 1e-9)
    n_r = counting(pl, inside)
    N_r = integrated_counting(pl, r)
    m_r, samples, err, ok = proximity(f, r, quad_rel_tol, on)
    lmax, lmin = modulus_extremes(f, r)
    if on:
        lmax = math.inf
    max_mod = math.inf if on else min(math.exp(min(lmax, 709.0)), OVERFLOW)
    min_mod = math.exp(lmin) if lmin < 709 else OVERFLOW
    return CircleProfile(float(r), max_mod, min(min_mod, max_mod), m_r, int(n_r), N_r,
                         m_r + N_r, samples, err, ok, lmax, min(lmin, lmax),
                         sum(k for _, k in on), pl.status)


def _family_angles(families, r, rel=1e-9):
    out = []
    for fam in families:
        for p, k in fam.on_circle(r, rel):
            out.append((math.atan2(p.imag, p.real), k))
    return out


def characteristic(f, r, quad_rel_tol=QUAD_REL_TOL) -> float:
    return circle_profile(f, r, quad_rel_tol).characteristic


# -- deficiency ----------------------------------------------------------------

@dataclass
class DeficiencyReport:
    radii: list
    ratios: list
    liminf_estimate: float
    profiles: list = field(default_factory=list)

    def to_json(self):
        return {"schema_version": SCHEMA_VERSION, "radii": self.radii, "ratios": self.ratios,
                "liminf_estimate": self.liminf_estimate,
                "profiles": [p.to_json() for p in self.profiles]}


def deficiency_scan(f, radii, quad_rel_tol=QUAD_REL_TOL) -> DeficiencyReport:
    """``m(r)/T(r)`` per radius; the liminf estimate is the min over the trailing half."""
    f = as_function(f)
    radii = [float(r) for r in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be increasing")
    profs = [circle_profile(f, r, quad_rel_tol) for r in radii]
    ratios = [min(1.0, p.proximity / p.characteristic) if p.characteristic > 0 else 1.0 for p in profs]
    tail = ratios[len(ratios) // 2:]
    return DeficiencyReport(radii, ratios, min(tail), profs)


# -- growth models and threshold ladders ---------------------------------------------

@dataclass(frozen=True)
class GrowthModel:
    """Closed-form growth data valid at tower scale.

    ``characteristic(r)`` and ``log_max_modulus(r)`` map a tower radius to
    a tower value; ``real_map`` continues a real positive orbit.
    """

    name: str
    characteristic: Callable[[Tower], Tower]
    log_max_modulus: Callable[[Tower], Tower]
    real_map: Optional[Callable[[Tower], Tower]] = None


# T(r, e^z) = r/pi and log M(r, e^z) = r
EXP_MODEL = GrowthModel("exp", lambda r: r.mul(1 / math.pi), lambda r: r, lambda x: x.exp())

MODELS = {"exp": EXP_MODEL}


def model_for(f) -> Optional[GrowthModel]:
    """The built-in model matching ``f``, if any."""
    f = as_function(f)
    if "".join(f.text.split()) in ("exp(z)",):
        return EXP_MODEL
    return None


def K_const() -> float:
    """``prod_{k>=1} (1 + 4/(k+1)^2)^2 = (sinh(2 pi)/(10 pi))^2``."""
    return (math.sinh(2 * math.pi) / (10 * math.pi)) ** 2


def K_n(n: int) -> float:
    """``K / prod_{k=1..n} (1 + 4/(k+1)^2)``; decreases to ``sqrt(K)``."""
    p = 1.0
    for k in range(1, n + 1):
        p *= 1 + 4 / (k + 1) ** 2
    return K_const() / p


class FloorError(PreconditionError):
    pass


@dataclass
class ThresholdTable:
    R: float
    horizon: int
    that_values: list
    maxmod_values: list
    K: float
    K_n: list
    source: str = "quadrature"
    computed_horizon: int = 0
    note: str = ""

    def to_json(self):
        return {"schema_version": SCHEMA_VERSION, "R": self.R, "horizon": self.horizon,
                "computed_horizon": self.computed_horizon, "source": self.source,
                "that_values": [t.to_json() for t in self.that_values],
                "maxmod_values": [t.to_json() if t is not None else None for t in self.maxmod_values],
                "K": self.K, "K_n": self.K_n, "note": self.note}


def _that_step(f, model, r: Tower, quad_rel_tol) -> Optional[Tower]:
    if model is not None:
        return model.characteristic(r).exp()
    x = r.to_float()
    if not math.isfinite(x):
        return None
    return Tower.from_log(circle_profile(f, x, quad_rel_tol).characteristic)


def _maxmod_step(f, model, r: Tower) -> Optional[Tower]:
    if model is not None:
        return model.log_max_modulus(r).exp()
    x = r.to_float()
    if not math.isfinite(x):
        return None
    lmax, _ = modulus_extremes(f, x)
    return Tower.from_log(lmax) if math.isfinite(lmax) else None


def check_that_floor(f, R, model=None, quad_rel_tol=QUAD_REL_TOL):
    """``That(R) >= 9 R^2``, i.e. ``T(R) >= log 9 + 2 log R``; returns the margin."""
    T = model.characteristic(Tower.of(R)).to_float() if model else circle_profile(f, R, quad_rel_tol).characteristic
    return T - (math.log(9) + 2 * math.log(R))


def iterate_thresholds(f, R: float, horizon: int, model: GrowthModel | None | str = "auto",
                       quad_rel_tol: float = QUAD_REL_TOL, check_floor: bool = True) -> ThresholdTable:
    """Ladders ``That_n(R)`` and ``M_n(R)`` for ``n = 0..horizon`` as towers."""
    f = as_function(f)
    if model == "auto":
        model = model_for(f)
    if horizon > 0 and check_floor:
        mg = check_that_floor(f, R, model, quad_rel_tol)
        if mg < 0:
            raise FloorError(f"That(R,f) >= 9R^2 fails at R={R}: T(R) - log(9R^2) = {mg:.6g}")
    that = [Tower.of(R)]
    mm = [Tower.of(R)]
    entire = is_entire(f)
    note = ""
    for _ in range(horizon):
        t = _that_step(f, model, that[-1], quad_rel_tol)
        if t is None:
            note = "That ladder left double range without a growth model"
            break
        that.append(t)
        if entire:
            m = _maxmod_step(f, model, mm[-1]) if mm[-1] is not None else None
            mm.append(m)
    if not entire:
        mm = [mm[0]] + [None] * (len(that) - 1)
    while len(mm) < len(that):
        mm.append(None)
    return ThresholdTable(float(R), horizon, that, mm, K_const(),
                          [K_n(n) for n in range(horizon + 1)],
                          f"model:{model.name}" if model else "quadrature", len(that) - 1, note)


# -- inequality checks -----------------------------------------------------------------

@dataclass
class InequalityReport:
    name: str
    holds: bool
    samples: list  # dicts with r and margins
    first_violation: Optional[float] = None
    tol: float = 0.0

    def to_json(self):
        return {"schema_version": SCHEMA_VERSION, **asdict(self)}


def check_growth_condition(f, C: float = 1.0, c: float = 1.0, r_range=(20.0, 80.0),
                           variant: str = "eq_1_5", n_samples: int = 16, tol: float = 1e-9,
                           quad_rel_tol: float = QUAD_REL_TOL) -> InequalityReport:
    """``log M(Cr) >= (1 - c/log r) T(r)`` (``eq_1_5``) or with ``c`` replaced by
    ``log log r`` (``eq_3_7``), on a geometric grid of ``r``."""
    f = as_function(f)
    require_transcendental(f)
    if C < 1 or c <= 0:
        raise ValueError("need C >= 1 and c > 0")
    rs = np.geomspace(r_range[0], r_range[1], n_samples)
    out, first = [], None
    for r in rs:
        T = circle_profile(f, r, quad_rel_tol).characteristic
        lM, _ = modulus_extremes(f, C * r)
        lr = math.log(r)
        fac = 1 - (c if variant == "eq_1_5" else math.log(lr)) / lr
        mg = lM - fac * T
        out.append({"r": float(r), "log_M": lM, "T": T, "rhs": fac * T, "margin": mg})
        if mg < -tol * (1 + abs(fac * T)) and first is None:
            first = float(r)
    return InequalityReport(f"growth_{variant}", first is None, out, first, tol)


def check_convexity(f, r: float, R: float, r0: float = R0_DEFAULT, n_max: int = 2,
                    tol: float = 1e-6, quad_rel_tol: float = QUAD_REL_TOL) -> InequalityReport:
    """Margins ``T(R) - (log R/log r) T(r)`` and, for ``n <= n_max``,
    ``log That_n(R) - (log R/log r) log That_n(r)``.  Margins are also given
    normalised by ``1 + |rhs|``; ``holds`` uses the normalised margin."""
    f = as_function(f)
    if not (r0 <= r <= R):
        raise PreconditionError(f"need r0={r0} <= r={r} <= R={R}")
    q = math.log(R) / math.log(r)
    model = model_for(f)
    out = []
    ok = True
    a, b = Tower.of(R), Tower.of(r)
    for n in range(1, n_max + 1):
        # log That_n(x) = T(That_{n-1}(x))
        if model is not None:
            TA, TB = model.characteristic(a).to_float(), model.characteristic(b).to_float()
        else:
            TA = circle_profile(f, a.to_float(), quad_rel_tol).characteristic
            TB = TA if R == r else circle_profile(f, b.to_float(), quad_rel_tol).characteristic
        mg = TA - q * TB
        norm = mg / (1 + abs(q * TB))
        ok &= norm >= -tol
        out.append({"n": n, "lhs": TA, "rhs": q * TB, "margin": mg, "normalized_margin": norm})
        a, b = Tower.from_log(TA), Tower.from_log(TB)
        if not (math.isfinite(a.to_float()) or model):
            break
    return InequalityReport("convexity", bool(ok), out, None if ok else r, tol)


def poisson_jensen_interior_bound(f, r, rp, Rp, R, quad_rel_tol=QUAD_REL_TOL) -> dict:
    """Bound ``((R'+r')/(R'-r') + log(R'/(r'-r))/log(R/r)) T(R)`` on ``log+|f|`` over ``|z| = r'``."""
    f = as_function(f)
    if not (0 < r < R / 4 and r + 1 < rp < Rp <= R):
        raise PreconditionError("need 0 < r < R/4 and r+1 < r' < R' <= R")
    pl = poles_within(f, R * (1 + 1e-9))
    if not pl.determined:
        raise PreconditionError("poles of f undetermined")
    bad = [p for p, _ in pl.poles if r * (1 - 1e-12) <= abs(p)]
    if bad:
        raise PreconditionError(f"pole {bad[0]} lies in the closed annulus A({r},{R})")
    T = circle_profile(f, R, quad_rel_tol).characteristic
    factor = (Rp + rp) / (Rp - rp) + math.log(Rp / (rp - r)) / math.log(R / r)
    lmax, _ = modulus_extremes(f, rp)
    emp = max(0.0, lmax)
    return {"schema_version": SCHEMA_VERSION, "factor": factor, "T_R": T, "bound": factor * T,
            "empirical_max_log_plus": emp, "dominates": factor * T >= emp - 1e-9 * (1 + emp)}


def min_modulus_annulus_bound(h, B: Annulus, rho: float, check_hypothesis: bool = True,
                              tol: float = 1e-6, grid=(32, 256)) -> dict:
    """Check ``log mhat(rho) >= exp(-(pi^2/2) max{1/log(R/rho), 1/log(rho/r)}) log M(rho)``.

    The hypothesis ``|h| > 1`` on ``B`` is tested on a polar grid plus an
    argument-principle zero count; with
    ``check_hypothesis=False`` the inequality is evaluated regardless.
    """
    h = as_function(h)
    r, R = B.inner, B.outer
    if not r < rho < R:
        raise PreconditionError("rho must lie strictly inside the annulus")
    nr, nt = grid
    rs = np.geomspace(r, R, nr + 2)[1:-1]
    th = 2 * np.pi * np.arange(nt) / nt
    Z = rs[:, None] * np.exp(1j * th)[None, :]
    grid_min = float(np.min(log_abs(h, Z.ravel())))
    # zeros inside the annulus escape any grid; count them by the argument principle
    w_in = winding_number(h, circle_contour(0, r))
    w_out = winding_number(h, circle_contour(0, R))
    zeros = None if w_in is None or w_out is None or not is_entire(h) else w_out - w_in
    if check_hypothesis and not grid_min > 0:
        raise PreconditionError(f"|h| <= 1 detected on the annulus (min log|h| = {grid_min:.4g})")
    if check_hypothesis and zeros != 0:
        raise PreconditionError(f"h has zeros in the annulus (argument-principle count {zeros})")
    lM, lm = modulus_extremes(h, rho)
    a, b = math.log(R / rho), math.log(rho / r)
    factor = math.exp(-(math.pi ** 2 / 2) * max(1 / a, 1 / b))
    weak = min((b - math.pi) / (b + math.pi), (a - math.pi) / (a + math.pi))
    slack = lm - factor * lM
    return {"schema_version": SCHEMA_VERSION, "log_min": lm, "log_max": lM, "factor": factor,
            "slack": slack, "holds": slack >= -tol, "weak_factor": weak,
            "weak_slack": lm - weak * lM, "weak_holds": lm - weak * lM >= -tol,
            "branches": [1 / a, 1 / b], "grid_min_log_abs": grid_min,
            "zeros_in_annulus": zeros}


# -- export ------------------------------------------------------------------------

CSV_COLUMNS = ["r", "max_mod", "min_mod", "proximity", "integrated_counting", "characteristic",
               "log_max_mod", "log_min_mod", "counting"]


def profiles_to_csv(profiles) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for p in profiles:
        w.writerow([repr(float(getattr(p, c))) for c in CSV_COLUMNS])
    return buf.getvalue()


__all__ = ["CircleProfile", "DeficiencyReport", "ThresholdTable", "GrowthModel", "EXP_MODEL",
           "InequalityReport", "FloorError", "circle_profile", "deficiency_scan",
           "iterate_thresholds", "check_growth_condition", "check_convexity",
           "poisson_jensen_interior_bound", "min_modulus_annulus_bound", "modulus_extremes",
           "proximity", "K_const", "K_n", "check_that_floor", "profiles_to_csv", "model_for", "margin"]
