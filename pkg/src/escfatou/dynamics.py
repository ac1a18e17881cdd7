"""Orbit diagnostics: ratio and ``h_n`` profiles, certified annulus chains,
fast-escape membership, the induction claim on threshold ladders, the
annulus threshold for wandering-domain exclusion and escape-rate classes.

All "for all n" statements are horizon-qualified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .funcexpr import (PreconditionError, as_function, iterate_orbit, log_abs,
                       require_transcendental)
from .funcexpr.expr import evaluate_array
from .funcexpr.poles import is_entire
from .hypgeom import Annulus, CoveringCertificate, covering_certificate, kappa
from .nevanlinna import (EXP_MODEL, GrowthModel, K_n, K_const, check_that_floor, circle_profile,
                         iterate_thresholds, model_for)
from .towers import Tower, margin

SCHEMA_VERSION = 1
DIVERGENCE_RATIO = 1e3


def _c(z):
    return [float(np.real(z)), float(np.imag(z))]


# -- ratio and h_n profiles -------------------------------------------------------------

@dataclass
class RatioDiagnostic:
    a: complex
    b: complex
    ratios: list
    M_estimate: float
    verdict: str  # "bounded", "diverging" or "undetermined"
    note: str = ""

    def to_json(self):
        return {"schema_version": SCHEMA_VERSION, "a": _c(self.a), "b": _c(self.b),
                "ratios": self.ratios, "M_estimate": self.M_estimate, "verdict": self.verdict,
                "note": self.note}


def _escaping(mod):
    tail = mod[len(mod) // 2:]
    return len(tail) >= 2 and bool(np.all(np.diff(tail) > 0)) and mod[-1] > mod[0]


def ratio_diagnostic(f, a, b, N: int, escape_radius: float = 1e300) -> RatioDiagnostic:
    """Ratios ``|f^n(a)|/|f^n(b)|``; ``M_estimate`` is the tail max of ``max(q, 1/q)``."""
    f = as_function(f)
    oa = iterate_orbit(f, a, N, escape_radius)
    ob = iterate_orbit(f, b, N, escape_radius)
    for o, name in ((oa, "a"), (ob, "b")):
        if o.status in ("hit_pole", "overflow"):
            n = min(len(oa.points), len(ob.points))
            q = list(np.abs(oa.points[:n]) / np.abs(ob.points[:n]))
            return RatioDiagnostic(complex(a), complex(b), q, math.nan, "undetermined",
                                   f"orbit of {name}: {o.status} at step {o.step}")
    n = min(len(oa.points), len(ob.points))
    ma, mb = np.abs(oa.points[:n]), np.abs(ob.points[:n])
    q = ma / mb
    sym = np.maximum(q, 1 / q)
    tail = sym[n // 2:]
    M = float(tail.max())
    if M > DIVERGENCE_RATIO and np.all(np.diff(tail) > 0):
        verdict = "diverging"
    elif n == N + 1 and _escaping(ma) and _escaping(mb):
        verdict = "bounded"
    else:
        verdict = "undetermined"
    return RatioDiagnostic(complex(a), complex(b), [float(x) for x in q], M, verdict)


@dataclass
class HProfile:
    c: complex
    probes: list
    start: int
    h_rows: list  # h_rows[j][i] = h_{start+j}(probe_i)
    oscillation: list
    valid: list

    def to_json(self):
        return {"schema_version": SCHEMA_VERSION, "c": _c(self.c), "probes": [_c(p) for p in self.probes],
                "start": self.start, "h_rows": self.h_rows, "oscillation": self.oscillation,
                "valid": self.valid}

    def limits(self):
        return [row for row in self.h_rows[-1]] if self.h_rows else []


def h_profile(f, c, probes, N: int, escape_radius: float = 1e300) -> HProfile:
    """``h_n(p) = log|f^n(p)| / log|f^n(c)|`` from the first ``n`` with ``|f^n(c)| > 1``."""
    f = as_function(f)
    oc = iterate_orbit(f, c, N, escape_radius)
    if oc.status in ("hit_pole", "overflow"):
        raise PreconditionError(f"orbit of c: {oc.status} at step {oc.step}")
    lc = np.log(np.abs(oc.points))
    above = np.flatnonzero(lc > 0)
    if len(above) == 0:
        raise PreconditionError("|f^n(c)| never exceeds 1 within the horizon")
    # first index after which |f^n(c)| stays above 1
    s = int(above[0])
    while s < len(lc) and np.any(lc[s:] <= 0):
        s += 1
    n_end = len(lc)
    rows = np.full((n_end - s, len(probes)), np.nan)
    valid = []
    for i, p in enumerate(probes):
        op = iterate_orbit(f, p, n_end - 1, escape_radius)
        ok = op.status not in ("hit_pole", "overflow")
        k = min(len(op.points), n_end)
        lp = np.log(np.abs(op.points[:k]))
        if k > s:
            rows[: k - s, i] = lp[s:k] / lc[s:k]
        valid.append(bool(ok and k == n_end))
    tail = rows[len(rows) // 2:]
    osc = [float(np.nanmax(tail[:, i]) - np.nanmin(tail[:, i])) if valid[i] else math.nan
           for i in range(len(probes))]
    return HProfile(complex(c), [complex(p) for p in probes], s,
                    [[float(x) for x in r] for r in rows], osc, valid)


# -- annulus chains -------------------------------------------------------------

def circle_argmax(f, r, n=1024):
    """Point of ``|z| = r`` with the largest sampled ``|f|``."""
    th = 2 * np.pi * np.arange(n) / n
    L = np.asarray(log_abs(f, r * np.exp(1j * th)), float)
    i = int(np.nanargmax(np.where(np.isfinite(L), L, -np.inf)))
    return complex(r * np.exp(1j * th[i]))


@dataclass
class ChainLink:
    annulus: Annulus
    certificate: CoveringCertificate
    preimage_trials: int = 0
    preimage_successes: int = 0

    def to_json(self):
        return {"annulus": self.annulus.to_json(), "certificate": self.certificate.to_json(),
                "preimage_trials": self.preimage_trials, "preimage_successes": self.preimage_successes}


@dataclass
class AnnulusChain:
    annuli: list
    links: list
    exponents: list
    stop_reason: str
    ladder: list = field(default_factory=list)

    def to_json(self):
        return {"schema_version": SCHEMA_VERSION, "annuli": [a.to_json() for a in self.annuli],
                "links": [lk.to_json() for lk in self.links], "exponents": self.exponents,
                "stop_reason": self.stop_reason, "ladder": self.ladder}

    def disjoint_forward(self) -> bool:
        return all(b.inner > a.outer for a, b in zip(self.annuli, self.annuli[1:]))


def _newton_preimage(f, w, A: Annulus, z0, iters=60):
    """Solve ``f(z) = w`` near ``z0`` with damped Newton on ``f/w - 1``."""
    lw = math.log(abs(w))
    uw = w / abs(w)

    def F(z):
        from .funcexpr.evaluate import log_abs_tree
        with np.errstate(all="ignore"):
            L, u = log_abs_tree(f.root, np.atleast_1d(np.asarray(z, complex)))
        return np.exp(np.minimum(L - lw, 700)) * u / uw - 1.0

    z = complex(z0)
    for _ in range(iters):
        v = F(z)[0]
        if not np.isfinite(v):
            return None
        if abs(v) < 1e-11:
            return z if A.contains(z) else None
        h = 1e-7 * max(abs(z), 1.0)
        d = (F(z + h)[0] - F(z - h)[0]) / (2 * h)
        if d == 0 or not np.isfinite(d):
            return None
        step = v / d
        lam = 1.0
        while lam > 1e-4:
            zn = z - lam * step
            vn = F(zn)[0]
            if np.isfinite(vn) and abs(vn) < abs(v):
                break
            lam /= 2
        z = zn
    return z if abs(F(z)[0]) < 1e-9 and A.contains(z) else None


def preimage_search(f, A: Annulus, target: Annulus, trials: int = 64, rng=None, grid=(8, 64)):
    """Random points of ``target`` and whether each has a preimage in ``A``."""
    f = as_function(f)
    rng = np.random.default_rng(0) if rng is None else rng
    nr, nt = grid
    rs = np.geomspace(A.inner, A.outer, nr + 2)[1:-1]
    th = 2 * np.pi * (np.arange(nt) + 0.5) / nt
    starts = (rs[:, None] * np.exp(1j * th)[None, :]).ravel()
    from .funcexpr.evaluate import log_abs_tree
    with np.errstate(all="ignore"):
        Ls, us = log_abs_tree(f.root, starts)
    ok = 0
    for _ in range(trials):
        lw = rng.uniform(math.log(target.inner), math.log(target.outer))
        w = complex(np.exp(lw + 1j * rng.uniform(0, 2 * np.pi)))
        # start from the grid points whose value is closest to w in log-polar distance
        dist = np.abs(Ls - lw) + np.abs(np.angle(us * np.conj(w / abs(w))))
        found = False
        for j in np.argsort(dist)[:12]:
            if _newton_preimage(f, w, A, starts[j]) is not None:
                found = True
                break
        ok += found
    return trials, ok


def tower_ladder(model: GrowthModel, r0: float, D: float, links: int = 3) -> list:
    """Radii ``r_{n+1} >= exp(log M(S r_n))`` with ``S = D**(1/3)`` and the check
    ``r_{n+1} >= That(r_n)``, all as towers."""
    S = D ** (1 / 3)
    r = Tower.of(r0)
    out = []
    for n in range(links):
        nxt = model.log_max_modulus(r.mul(S)).exp()
        that = model.characteristic(r).exp()
        k, mg = margin(nxt, that)
        out.append({"n": n, "r_n": r.to_json(), "r_next": nxt.to_json(), "That_r_n": that.to_json(),
                    "level": k, "margin": mg, "holds": mg >= 0})
        r = nxt
    return out


def annulus_chain(f, A0: Annulus, N: int, preimage_trials: int = 64, seed: int = 0,
                  model="auto", ladder_links: int = 3) -> AnnulusChain:
    """Chain ``A_0, A_1, ...`` with ``A_{n+1}`` inside ``f(A_n)`` certified per link.

    Witnesses follow the recipe ``S = (R/r)**(1/3)``: ``z2`` maximises ``|f|``
    on ``|z| = S r`` and ``z1`` on ``|z| = S^2 r``.  Routes are tried in the
    order lemma, boundary modulus, direct; the first passing certificate
    defines the next annulus.
    """
    f = as_function(f)
    rng = np.random.default_rng(seed)
    annuli, links, expo = [A0], [], [math.log(A0.outer) / math.log(A0.inner) if A0.inner > 1 else math.nan]
    reason = "horizon"
    for _ in range(N):
        A = annuli[-1]
        S = (A.outer / A.inner) ** (1 / 3)
        z2 = circle_argmax(f, S * A.inner)
        z1 = circle_argmax(f, S * S * A.inner)
        # the predicted outer radius is about |f(z1)|; past double range no
        # winding check can be run, so stop before trying to certify
        if not float(np.asarray(log_abs(f, np.array([z1])), float)[0]) < 709:
            reason = "unrepresentable"
            break
        cert = None
        attempts = []
        for route in ("lemma", "boundary_modulus", "direct"):
            if route == "lemma":
                c = covering_certificate(f, A, z1, z2, route="auto")
                if c is not None and not c.hypothesis_met:
                    c = None
            else:
                c = covering_certificate(f, A, z1, z2, route=route)
            if c is not None:
                attempts.append(c.route + ":" + c.verdict)
                if c.passed:
                    cert = c
                    break
        if cert is None:
            reason = "certificate_failed"
            break
        a, b = cert.predicted_log
        if not b < 709:
            links.append(ChainLink(A, cert))
            reason = "unrepresentable"
            break
        nxt = Annulus(math.exp(a), math.exp(b))
        link = ChainLink(A, cert)
        if preimage_trials:
            link.preimage_trials, link.preimage_successes = preimage_search(f, A, nxt, preimage_trials, rng)
        links.append(link)
        annuli.append(nxt)
        expo.append(math.log(nxt.outer) / math.log(nxt.inner) if nxt.inner > 1 else math.nan)
    if model == "auto":
        model = model_for(f)
    ladder = tower_ladder(model, A0.inner, A0.outer / A0.inner, ladder_links) if model else []
    return AnnulusChain(annuli, links, expo, reason, ladder)


def chain_svg(chain: AnnulusChain, path) -> None:
    """Nested annuli on a log-radius axis, one row per chain element."""
    import matplotlib
    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "escfatou"
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 1 + 0.5 * len(chain.annuli)))
    for i, A in enumerate(chain.annuli):
        ax.barh(i, math.log10(A.outer) - math.log10(A.inner), left=math.log10(A.inner), height=0.6,
                color="C0" if i == 0 else "C1")
    ax.set_yticks(range(len(chain.annuli)), [f"A_{i}" for i in range(len(chain.annuli))])
    ax.set_xlabel("log10 radius")
    ax.invert_yaxis()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


# -- fast escape membership ------------------------------------------------------------

@dataclass
class MembershipVerdict:
    z: complex
    R: float
    L: Optional[int]
    horizon: int
    verdict: str  # member_up_to_horizon, not_member, undetermined
    threshold_kind: str
    computable_through: int = 0

    def to_json(self):
        return {"schema_version": SCHEMA_VERSION, "z": _c(self.z), "R": self.R, "L": self.L,
                "horizon": self.horizon, "verdict": self.verdict, "threshold_kind": self.threshold_kind,
                "computable_through": self.computable_through}


def tower_orbit(f, z, n: int, model: Optional[GrowthModel] = None) -> list:
    """``|f^k(z)|`` as towers for ``k = 0..n`` while computable.

    Double precision is used until overflow; a real positive point is then
    continued with ``model.real_map``.
    """
    out = []
    z = complex(z)
    tower = None
    for k in range(n + 1):
        if tower is not None:
            out.append(tower)
            tower = model.real_map(tower)
            continue
        out.append(Tower.of(abs(z)) if z != 0 else None)
        if out[-1] is None:
            return out[:-1]
        if k == n:
            break
        v, kind, _ = evaluate_array(f, z)
        if kind[0] == 0:
            z = complex(v[0])
            continue
        if kind[0] == 2 and model is not None and model.real_map is not None and z.imag == 0 and z.real > 0:
            tower = model.real_map(Tower.of(z.real))
            continue
        break
    return out


def fast_escape_membership(f, z, R: float, L_max: int, horizon: int, threshold_kind: str = "that",
                           table=None, model="auto") -> MembershipVerdict:
    """Smallest ``L <= L_max`` with ``|f^{n+L}(z)| >= threshold_n`` for every computable
    ``n <= horizon - L``."""
    f = as_function(f)
    require_transcendental(f)
    if threshold_kind not in ("that", "maxmod"):
        raise ValueError("threshold_kind must be 'that' or 'maxmod'")
    if threshold_kind == "maxmod" and not is_entire(f):
        raise PreconditionError("maxmod thresholds require an entire function")
    if model == "auto":
        model = model_for(f)
    if table is None:
        table = iterate_thresholds(f, R, horizon, model)
    thr = table.that_values if threshold_kind == "that" else table.maxmod_values
    orb = tower_orbit(f, z, horizon, model)
    K = len(orb) - 1
    for L in range(L_max + 1):
        last = min(K, horizon) - L
        ns = [n for n in range(0, last + 1) if n < len(thr) and thr[n] is not None]
        if not ns:
            return MembershipVerdict(complex(z), R, None, horizon, "undetermined", threshold_kind, K)
        if all(margin(orb[n + L], thr[n])[1] >= 0 for n in ns):
            return MembershipVerdict(complex(z), R, L, horizon, "member_up_to_horizon", threshold_kind, K)
    return MembershipVerdict(complex(z), R, None, horizon, "not_member", threshold_kind, K)


# -- induction claim on the threshold ladder -----------------------------------------------

def claim_4_1_check(f, R: float, n_max: int, model="auto") -> dict:
    """``That_n(R^K) >= (n+1)^2 M_{n-1}(R)^{K_{n-1}}`` for ``n = 2..n_max`` on towers."""
    f = as_function(f)
    if not is_entire(f):
        raise PreconditionError("the claim concerns entire functions")
    if model == "auto":
        model = model_for(f)
    K = K_const()
    floors = {"that_floor_margin": check_that_floor(f, R, model)}
    if floors["that_floor_margin"] < 0:
        raise PreconditionError(f"That(R) >= 9R^2 fails at R={R}")
    mm = iterate_thresholds(f, R, n_max, model).maxmod_values
    fl = []
    for n in range(2, n_max + 1):
        logM = mm[n].log()
        k, mg = margin(logM, Tower.of(2 ** n * math.log(R)))
        second = 2 ** n * math.log(R) - 2 * (n + 1) ** 2 * math.log(n + 2) / K_n(n)
        fl.append({"n": n, "margin_logMn_vs_2n_logR": mg, "level": k, "margin_2n_logR_vs_rhs": second})
        if mg <= 0 or second <= 0:
            raise PreconditionError(f"floor log M_n(R) > 2^n log R > 2(n+1)^2 log(n+2)/K_n fails at n={n}")
    floors["maxmod"] = fl
    RK = Tower.of(R).pow(K)
    that = [RK]
    for _ in range(n_max):
        that.append(model.characteristic(that[-1]).exp() if model else
                    Tower.from_log(circle_profile(f, that[-1].to_float()).characteristic))
    rows = []
    for n in range(2, n_max + 1):
        rhs = mm[n - 1].pow(K_n(n - 1)).mul((n + 1) ** 2)
        k, mg = margin(that[n], rhs)
        rows.append({"n": n, "lhs": that[n].to_json(), "rhs": rhs.to_json(), "level": k, "margin": mg,
                     "holds": mg > 0})
    chain = base_case_chain(f, R, model)
    return {"schema_version": SCHEMA_VERSION, "R": R, "K": K, "K_n": [K_n(n) for n in range(n_max + 1)],
            "floors": floors, "claims": rows, "base_case": chain,
            "all_hold": all(r["holds"] for r in rows) and chain["holds"]}


def base_case_chain(f, R: float, model=None) -> dict:
    """The ``n = 2`` chain in logarithms:

    ``log That_2(R^K) >= q log M(R^K) >= (3/4) log M(R^K) >= K_1 (5/4) log M(R)
    >= log 9 + K_1 log M(R)`` with ``q = (That - R^K)/(That + R^K)``,
    ``That = That(R^K)``.
    """
    K = K_const()
    K1 = K_n(1)
    RK = Tower.of(R).pow(K)
    if model is None:
        raise PreconditionError("the base-case chain needs a growth model (values exceed double range)")
    that1 = model.characteristic(RK).exp()           # That(R^K)
    s0 = model.characteristic(that1)                  # log That_2(R^K)
    logM_RK = model.log_max_modulus(RK)               # log M(R^K)
    # q = (That - R^K)/(That + R^K) = 1 - 2/(That/R^K + 1)
    k, lr = margin(that1, RK)
    ratio_log = that1.log().to_float() - RK.log().to_float() if that1.level <= 1 else math.inf
    q = 1 - 2 / (math.exp(min(ratio_log, 700)) + 1)
    s1 = logM_RK.mul(q)
    s2 = logM_RK.mul(0.75)
    logM_R = model.log_max_modulus(Tower.of(R)).to_float()
    s3 = Tower.of(K1 * 1.25 * logM_R)
    s4 = Tower.of(math.log(9) + K1 * logM_R)
    steps = [s0, s1, s2, s3, s4]
    margins = [margin(a, b)[1] for a, b in zip(steps, steps[1:])]
    return {"q": q, "steps": [s.to_json() for s in steps], "margins": margins,
            "holds": all(m >= 0 for m in margins), "K1": K1}


# -- annulus threshold --------------------------------------------------------------

def threshold_rhs(D: float, c: float) -> float:
    """``22.56 (kappa + log D) / (log D - 3c)``."""
    return 22.56 * (kappa() + math.log(D)) / (math.log(D) - 3 * c)


def theorem6_threshold(f, D: float, c: float, C: float = 1.0, r_min: float = 10.0,
                       r_max: float = 1e6, n_grid: int = 400, model="auto",
                       quad_rel_tol: float = 1e-8) -> dict:
    """Smallest ``R0`` on a grid (refined by bisection) with ``T(r)/log r > rhs``
    for all grid ``r >= R0``."""
    f = as_function(f)
    require_transcendental(f)
    if not D > math.exp(3 * c):
        raise PreconditionError(f"need D > e^(3c); got D={D}, c={c}")
    if model == "auto":
        model = model_for(f)
    rhs = threshold_rhs(D, c)

    def T(r):
        if model is not None:
            return model.characteristic(Tower.of(r)).to_float()
        return circle_profile(f, r, quad_rel_tol).characteristic

    g = lambda r: T(r) / math.log(r) - rhs  # noqa: E731
    rs = np.geomspace(r_min, r_max, n_grid)
    vals = np.array([g(r) for r in rs])
    bad = np.flatnonzero(vals <= 0)
    if len(bad) == 0:
        R0, idx = float(rs[0]), 0
    elif bad[-1] == len(rs) - 1:
        return {"schema_version": SCHEMA_VERSION, "rhs": rhs, "R0": None, "verdict": "undetermined",
                "D": D, "c": c, "C": C}
    else:
        lo, hi = float(rs[bad[-1]]), float(rs[bad[-1] + 1])
        for _ in range(60):
            mid = math.sqrt(lo * hi)
            if g(mid) > 0:
                hi = mid
            else:
                lo = mid
        R0 = hi
    return {"schema_version": SCHEMA_VERSION, "rhs": rhs, "R0": R0, "verdict": "found", "D": D, "c": c,
            "C": C, "seed_annulus": [R0, D * R0], "grid_margin_min": float(vals[rs >= R0].min()),
            "source": f"model:{model.name}" if model else "quadrature"}


# -- escape-rate classes -------------------------------------------------------------

def escape_rate_classify(orbit, reference=None, tol: float = 0.05) -> dict:
    """Classify the growth of ``|f^n(z0)|`` along an orbit.

    ``linear``: ``|f^n| ~ s n``; ``exponential``: ``log|f^n|`` linear in
    ``n``; ``tower``: ``log|f^n|`` grows by a factor above 2 per step (or the
    orbit overflowed in that regime); ``prescribed``: ``|f^n|/a_n -> 1``
    within ``tol`` on the tail.
    """
    pts = np.asarray(orbit.points)
    mod = np.abs(pts)
    n = np.arange(len(mod))
    res = {"schema_version": SCHEMA_VERSION, "n": int(len(mod) - 1), "status": orbit.status}
    tail = slice(len(mod) // 2, None)
    if len(mod) < 3 or not np.all(np.diff(mod[tail]) > 0):
        res["class"] = "undetermined"
        return res
    if reference is not None:
        a = np.asarray(reference[: len(mod)], float)
        q = mod / a
        res["reference_sup_tail_deviation"] = float(np.max(np.abs(q[tail] - 1)))
        if res["reference_sup_tail_deviation"] <= tol:
            res["class"] = "prescribed"
            res["ratio_last"] = float(q[-1])
            return res
    logm = np.log(mod)
    pos = logm > 0
    g = logm[pos]
    if len(g) >= 3:
        growth = g[1:] / g[:-1]
        if np.all(growth[-2:] > 2):
            res["class"] = "tower"
            res["log_growth_factors"] = [float(x) for x in growth]
            return res
    nt, mt = n[tail], mod[tail]
    slope, icpt = np.polyfit(nt, mt, 1)
    lin_res = float(np.sqrt(np.mean((mt - (slope * nt + icpt)) ** 2)) / np.mean(mt))
    es, ei = np.polyfit(nt, logm[tail], 1)
    exp_res = float(np.sqrt(np.mean((logm[tail] - (es * nt + ei)) ** 2)) / np.mean(np.abs(logm[tail])))
    res.update(linear_slope=float(slope), linear_residual=lin_res, exp_rate=float(es),
               exp_residual=exp_res, slope_ratio_last=float(mod[-1] / (slope * n[-1])))
    res["class"] = "linear" if lin_res <= exp_res else "exponential"
    return res
