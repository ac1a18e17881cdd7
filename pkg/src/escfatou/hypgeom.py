"""Hyperbolic geometry of round annuli and covering certificates.

The annulus ``A(r, R)`` has universal cover the strip ``0 < Re s < mod``
(``s = log z - log r``); rotating and exponentiating the strip lands in
the upper half-plane, where distances are explicit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .funcexpr import as_function, log_abs, poles_within
from .funcexpr.evaluate import log_abs_tree

SCHEMA_VERSION = 1
# sqrt(3) pi (pi + 1) / 3: bound for the sigma = 1/3, tau = 2/3 instance once mod >= 2
THIRD_SPLIT_DISTANCE_CAP = math.sqrt(3) * math.pi * (math.pi + 1) / 3


@dataclass(frozen=True)
class Annulus:
    inner: float
    outer: float

    def __post_init__(self):
        if not (0 < self.inner < self.outer):
            raise ValueError(f"need 0 < inner < outer, got ({self.inner}, {self.outer})")

    @property
    def modulus(self) -> float:
        return math.log(self.outer / self.inner)

    def contains(self, z) -> bool:
        return self.inner < abs(z) < self.outer

    def to_json(self):
        return {"inner": self.inner, "outer": self.outer}


def kappa() -> float:
    """``Gamma(1/4)^4 / (4 pi^2)``."""
    return math.gamma(0.25) ** 4 / (4 * math.pi ** 2)


def annulus_density(A: Annulus, z) -> float:
    """Hyperbolic density ``pi / (|z| mod sin(pi log(R/|z|)/mod))``."""
    a = abs(z)
    if not A.inner < a < A.outer:
        raise ValueError("point outside the annulus")
    m = A.modulus
    return math.pi / (a * m * math.sin(math.pi * math.log(A.outer / a) / m))


def outside_disk_density(z) -> float:
    """Density of ``{|z| > 1}``: ``1/(|z| log|z|)``."""
    a = abs(z)
    if a <= 1:
        raise ValueError("point outside {|z| > 1}")
    return 1.0 / (a * math.log(a))


@dataclass
class DistanceBounds:
    lower: float
    upper: float
    sigma: float
    tau: float
    K0: float
    K1: float

    def to_json(self):
        return dict(self.__dict__)


def _check_inside(A, *zs):
    for z in zs:
        if not A.inner < abs(z) < A.outer:
            raise ValueError(f"point {z} is not inside A({A.inner}, {A.outer})")


def exponent_bounds(sigma: float, tau: float, mod: float):
    """Bounds in exponent form, ``R/|z1| = (R/r)**sigma``, ``R/|z2| = (R/r)**tau``."""
    if not 0 < sigma <= tau < 1:
        raise ValueError("need 0 < sigma <= tau < 1")
    s0, s1 = math.sin(sigma * math.pi), math.sin(tau * math.pi)
    K0, K1 = max(s0, s1), min(s0, s1)
    lower = max((tau - sigma) * math.pi, math.log(tau / sigma))
    upper = math.pi ** 2 / (K0 * mod) + (tau - sigma) * math.pi / K1
    return DistanceBounds(lower, upper, sigma, tau, K0, K1)


def annulus_distance_bounds(A: Annulus, z1, z2) -> DistanceBounds:
    """Two-sided bound on ``d_A(z1, z2)``; the points are ordered so ``|z2| <= |z1|``."""
    _check_inside(A, z1, z2)
    if abs(z2) > abs(z1):
        z1, z2 = z2, z1
    m = A.modulus
    sigma = math.log(A.outer / abs(z1)) / m
    tau = math.log(A.outer / abs(z2)) / m
    return exponent_bounds(sigma, tau, m)


def third_split_instance(mod: float = 2 * math.pi) -> dict:
    """The ``sigma = 1/3, tau = 2/3`` instance: sharp bounds and the cap."""
    b = exponent_bounds(1 / 3, 2 / 3, mod)
    return {"lower": b.lower, "upper": b.upper, "upper_cap": THIRD_SPLIT_DISTANCE_CAP,
            "cap_valid": mod >= 2, "mod": mod}


def annulus_distance(A: Annulus, z1, z2) -> float:
    """Exact hyperbolic distance in ``A`` (minimised over deck translates)."""
    _check_inside(A, z1, z2)
    m = A.modulus
    b1 = math.pi * math.log(abs(z1) / A.inner) / m
    b2 = math.pi * math.log(abs(z2) / A.inner) / m
    z1, z2 = complex(z1), complex(z2)
    darg = math.remainder(math.atan2(z1.imag, z1.real) - math.atan2(z2.imag, z2.real), 2 * math.pi)
    db = b1 - b2
    best = math.inf
    for k in (-1, 0, 1):
        da = math.pi * (darg + 2 * math.pi * k) / m
        s = (math.sinh(da / 2) ** 2 + math.sin(db / 2) ** 2) / (math.sin(b1) * math.sin(b2))
        best = min(best, 2 * math.asinh(math.sqrt(s)))
    return best


# -- covering certificates -------------------------------------------------------------

def _log_polar(f, z):
    with np.errstate(all="ignore"):
        L, u = log_abs_tree(f.root, np.atleast_1d(np.asarray(z, complex)))
    L = np.where(f.registry_mask(np.atleast_1d(z)), np.inf, L)
    return L, u


def _windings(L, u, logw, argw):
    """Winding numbers of ``f - w`` for many ``w`` along one sampled closed curve.

    ``f = exp(L) u`` on the curve, ``w = exp(logw + i argw)``.  Returns
    ``(winding, ok)`` with ``ok`` false where some argument step reaches 1 rad.
    """
    s = np.maximum(L[None, :], logw[:, None])
    with np.errstate(all="ignore"):
        v = u[None, :] * np.exp(L[None, :] - s) - np.exp(logw[:, None] - s + 1j * argw[:, None])
        d = np.angle(np.roll(v, -1, axis=1) / v)
    ok = np.all(np.abs(d) < 1.0, axis=1) & np.all(np.isfinite(d), axis=1)
    return np.rint(d.sum(axis=1) / (2 * np.pi)).astype(int), ok


def boundary_winding(f, radius, logw, argw, n0=256, n_cap=1 << 16, chunk=1 << 22, per_point=False):
    """Stable winding numbers of ``f - w`` on ``|z| = radius`` (ccw).

    Sampling doubles; a test point ``w`` is settled once two successive
    levels give the same count with every argument step below 1 rad.
    Returns ``(windings, samples, stable)``; ``windings`` is ``None`` if
    ``f`` is not finite on the circle.  ``stable`` is a per-point mask when
    ``per_point`` is set.
    """
    logw, argw = np.atleast_1d(logw), np.atleast_1d(argw)
    P = len(logw)
    prev = np.full(P, np.iinfo(int).min)
    done = np.zeros(P, bool)
    n = n0
    while n <= n_cap and not done.all():
        z = radius * np.exp(2j * np.pi * np.arange(n) / n)
        L, u = _log_polar(f, z)
        if not np.all(np.isfinite(L)):
            return None, n, False
        todo = np.flatnonzero(~done)
        step = max(1, chunk // n)
        for j in range(0, len(todo), step):
            idx = todo[j:j + step]
            w, ok = _windings(L, u, logw[idx], argw[idx])
            settle = ok & (w == prev[idx])
            done[idx[settle]] = True
            prev[idx] = np.where(ok, w, np.iinfo(int).min)
        n *= 2
    w = np.where(prev == np.iinfo(int).min, 0, prev)
    return w, n // 2, (done if per_point else bool(done.all()))


@dataclass
class CoveringCertificate:
    map: dict
    domain: Annulus
    witnesses: dict
    predicted_log: tuple  # (log inner, log outer) of the predicted annulus
    route: str
    hypothesis_met: bool
    verification: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return self.verification.get("verdict", "fail")

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    @property
    def predicted(self) -> Optional[Annulus]:
        a, b = self.predicted_log
        if b < 709 and a < b:
            return Annulus(math.exp(a), math.exp(b))
        return None

    def contains_annulus(self, other: Annulus) -> bool:
        a, b = self.predicted_log
        return a <= math.log(other.inner) + 1e-12 and math.log(other.outer) <= b + 1e-12

    def to_json(self):
        return {"schema_version": SCHEMA_VERSION, "map": self.map, "domain": self.domain.to_json(),
                "witnesses": self.witnesses, "predicted_log": list(self.predicted_log),
                "predicted": self.predicted.to_json() if self.predicted else None,
                "route": self.route, "hypothesis_met": self.hypothesis_met,
                "verification": self.verification, "verdict": self.verdict}


def analytic_nonvanishing(f, A: Annulus) -> dict:
    """Sampled check that ``f`` has no poles or zeros on the closed annulus."""
    pl = poles_within(f, A.outer * (1 + 1e-9))
    bad = [p for p, _ in pl.poles if abs(p) >= A.inner * (1 - 1e-9)]
    if not pl.determined or bad:
        return {"ok": False, "reason": "pole in domain" if bad else "poles undetermined"}
    wo, _, so = boundary_winding(f, A.outer, np.array([-np.inf]), np.array([0.0]))
    wi, _, si = boundary_winding(f, A.inner, np.array([-np.inf]), np.array([0.0]))
    if wo is None or wi is None or not (so and si):
        return {"ok": False, "reason": "winding of f not stable on the boundary"}
    return {"ok": bool(wo[0] == wi[0]), "winding_outer": int(wo[0]), "winding_inner": int(wi[0]),
            "reason": "" if wo[0] == wi[0] else "f has zeros in the domain",
            "caveat": "sampled necessary condition; zero-free status is not proven"}


def verify_cover(f, domain: Annulus, log_inner: float, log_outer: float, n_radii: int = 16,
                 n_points: int = 64) -> dict:
    """Every test point ``w`` of ``n_radii`` circles strictly inside the target
    must satisfy ``#{f = w in domain} = wind(outer) - wind(inner) >= 1``."""
    if not log_inner < log_outer:
        return {"verdict": "fail", "reason": "empty target annulus", "winding_checks": []}
    t = log_inner + (log_outer - log_inner) * (np.arange(n_radii) + 0.5) / n_radii
    ang = 2 * np.pi * np.arange(n_points) / n_points
    logw = np.repeat(t, n_points)
    argw = np.tile(ang, n_radii)

    def counts(lw, aw):
        wo, no, so = boundary_winding(f, domain.outer, lw, aw, per_point=True)
        wi, ni, si = boundary_winding(f, domain.inner, lw, aw, per_point=True)
        if wo is None or wi is None:
            return None, None, (no, ni)
        return wo - wi, so & si, (no, ni)

    count, stable, samples = counts(logw, argw)
    if count is None:
        return {"verdict": "fail", "reason": "f not finite on the boundary", "winding_checks": []}
    # a test point whose preimage sits on a boundary circle cannot settle;
    # it is replaced by a slightly rotated one
    jittered = 0
    for attempt in range(1, 4):
        idx = np.flatnonzero(~stable)
        if len(idx) == 0:
            break
        jittered += len(idx)
        shift = (-1) ** attempt * 0.29 * attempt * 2 * np.pi / n_points
        c2, s2, _ = counts(logw[idx], argw[idx] + shift)
        count[idx], stable[idx] = c2, s2
    count = count.reshape(n_radii, n_points)
    stable = stable.reshape(n_radii, n_points)
    checks = [{"log_radius": float(t[i]), "min_count": int(count[i].min()),
               "max_count": int(count[i].max()), "stable": bool(stable[i].all())} for i in range(n_radii)]
    ok = bool(stable.all() and np.all(count >= 1))
    Lo, _ = _log_polar(f, domain.outer * np.exp(1j * ang))
    Li, _ = _log_polar(f, domain.inner * np.exp(1j * ang))
    return {"verdict": "pass" if ok else "fail", "winding_checks": checks,
            "boundary_min_log_mod": float(min(Lo.min(), Li.min())),
            "boundary_samples": [int(x) for x in samples], "jittered_points": int(jittered),
            "reason": "" if ok else "some test point is not surrounded"}


def _path_witness(f, z2, z1, target, iters=80):
    """Point on a polar path from ``z2`` to ``z1`` where ``log|f| = target`` (bisection)."""
    a2, a1 = math.log(abs(z2)), math.log(abs(z1))
    t2 = math.atan2(z2.imag, z2.real)
    dt = math.remainder(math.atan2(z1.imag, z1.real) - t2, 2 * math.pi)
    pt = lambda s: complex(np.exp(a2 + s * (a1 - a2) + 1j * (t2 + s * dt)))  # noqa: E731
    g = lambda s: float(log_abs(f, pt(s))) - target  # noqa: E731
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        mid = (lo + hi) / 2
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    z = pt((lo + hi) / 2)
    return z, float(log_abs(f, z))


def covering_certificate(f, domain: Annulus, z1, z2, route: str = "auto",
                         verify: bool = True, n_radii: int = 16, n_points: int = 64) -> Optional[CoveringCertificate]:
    """Certificate that ``f(domain)`` contains a predicted annulus.

    Routes: ``ratio_gap`` (target ``A(|f(z2)|, |f(z1)|)`` when
    ``delta < 1`` and ``|f(z1)| >= e^(kappa delta/(1-delta)) |f(z2)|``),
    ``zhat`` (the ``z-hat`` annulus when ``|f(z1)| > e^(kappa delta) |f(z2)|``),
    ``direct`` (target ``A(|f(z2)|, |f(z1)|)`` checked by winding only) and
    ``boundary_modulus`` (target ``A(M(r), mhat(R))``).  ``delta`` is the upper
    distance bound.  ``auto`` tries the lemma routes and falls back to
    ``direct``.  Returns ``None`` when no candidate annulus exists.
    """
    f = as_function(f)
    z1, z2 = complex(z1), complex(z2)
    _check_inside(domain, z1, z2)
    L1, L2 = float(log_abs(f, z1)), float(log_abs(f, z2))
    if L1 < L2:
        z1, z2, L1, L2 = z2, z1, L2, L1
    k = kappa()
    if z1 == z2:
        delta = 0.0
    else:
        delta = annulus_distance_bounds(domain, z1, z2).upper
    gap = L1 - L2
    wit = {"z1": [z1.real, z1.imag], "z2": [z2.real, z2.imag], "log_f_z1": L1, "log_f_z2": L2,
           "delta": delta, "kappa": k}
    pred, used, met = None, None, False
    if route in ("auto", "ratio_gap") and 0 < delta < 1 and gap >= k * delta / (1 - delta):
        pred, used, met = (L2, L1), "ratio_gap", True
    elif route in ("auto", "zhat") and delta > 0 and gap > k * delta:
        zh, Lh = _path_witness(f, z2, z1, (L1 + L2) / 2)
        wit.update(zhat=[zh.real, zh.imag], log_f_zhat=Lh)
        pred, used, met = (k - gap / delta + Lh, -k + gap / delta + Lh), "zhat", True
    elif route in ("auto", "direct"):
        pred, used = (L2, L1), "direct"
    elif route == "boundary_modulus":
        from .nevanlinna import modulus_extremes
        lM_in, _ = modulus_extremes(f, domain.inner)
        _, lm_out = modulus_extremes(f, domain.outer)
        pred, used = (lM_in, lm_out), "boundary_modulus"
        wit.update(log_M_inner=lM_in, log_mhat_outer=lm_out)
    if pred is None or not pred[0] < pred[1]:
        return None
    cert = CoveringCertificate(f.to_json(), domain, wit, (float(pred[0]), float(pred[1])), used, met)
    if verify:
        nv = analytic_nonvanishing(f, domain)
        ver = verify_cover(f, domain, pred[0], pred[1], n_radii, n_points)
        ver["analytic_nonvanishing"] = nv
        if not nv["ok"]:
            ver["verdict"] = "fail"
            ver["reason"] = nv["reason"]
        cert.verification = ver
    return cert
