"""Acceptance criteria: each test prints one PASS/FAIL line with its runtime."""
import math
import time

import mpmath
import numpy as np
import pytest

from escfatou.funcexpr import iterate_orbit, parse_function, resolve
from escfatou.hypgeom import (Annulus, annulus_distance, annulus_distance_bounds, covering_certificate, kappa,
                              third_split_instance)
from escfatou.nevanlinna import (EXP_MODEL, K_const, K_n, check_convexity, check_growth_condition,
                                 circle_profile, iterate_thresholds, min_modulus_annulus_bound)

EXP = parse_function("exp(z)")
QUOT = resolve("quotient")  # (e^z - 1)/(e^-z + 1) with its pole registry


def _report(num, name, ok, t0, limit, detail=""):
    dt = time.perf_counter() - t0
    ok = bool(ok) and dt < limit
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {num:2d} {name}: {detail} ({dt:.2f}s, limit {limit:g}s)")
    assert ok, f"criterion {num} failed: {detail}"


def test_01_kappa():
    t0 = time.perf_counter()
    with mpmath.workdps(40):
        oracle = float(mpmath.gamma(mpmath.mpf(1) / 4) ** 4 / (4 * mpmath.pi ** 2))
    k = kappa()
    ok = abs(k - 4.376879) <= 1e-6 and abs(k - oracle) <= 1e-6
    _report(1, "kappa", ok, t0, 1, f"kappa={k:.9f} oracle={oracle:.9f}")


def test_02_distance_sandwich():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    bad = 0
    for _ in range(1000):
        a = rng.uniform(0.5, 50)
        A = Annulus(a, a * math.exp(rng.uniform(2, 30)))
        u = rng.uniform(0.01, 0.99, 2)
        th = rng.uniform(-math.pi, math.pi, 2)
        z1, z2 = (A.inner * math.exp(ui * A.modulus) * complex(math.cos(t), math.sin(t)) for ui, t in zip(u, th))
        if abs(abs(z1) - abs(z2)) <= 1e-9 * abs(z1):
            continue
        b = annulus_distance_bounds(A, z1, z2)
        d = annulus_distance(A, z1, z2)
        bad += not (b.lower - 1e-9 <= d <= b.upper + 1e-9)
    inst = third_split_instance()
    ok = bad == 0 and abs(inst["lower"] - math.pi / 3) < 1e-12 and abs(inst["upper_cap"] - 7.5120) <= 1e-4
    _report(2, "distance sandwich", ok, t0, 10,
            f"violations={bad}/1000 lower={inst['lower']:.6f} cap={inst['upper_cap']:.6f}")


def test_03_deficiency_anchors():
    t0 = time.perf_counter()
    ratios = [circle_profile(QUOT, r) for r in (40.0, 60.0, 80.0)]
    rq = [p.proximity / p.characteristic for p in ratios]
    re = [circle_profile(EXP, r) for r in (20.0, 50.0)]
    rexp = [p.proximity / p.characteristic for p in re]
    T50 = re[1].characteristic
    ok = (all(abs(x - 0.5) <= 0.05 for x in rq) and all(abs(x - 1) < 1e-9 for x in rexp)
          and abs(T50 / (50 / math.pi) - 1) < 0.01)
    _report(3, "deficiency anchors", ok, t0, 30,
            f"quotient m/T={[round(x, 4) for x in rq]} exp m/T={[round(x, 9) for x in rexp]} T(50)={T50:.6f}")


def test_04_convexity_growth():
    t0 = time.perf_counter()
    worst = math.inf
    for f in (EXP, QUOT):
        for r, R in ((20.0, 40.0), (30.0, 60.0), (40.0, 80.0), (20.0, 80.0)):
            rep = check_convexity(f, r, R, n_max=2)
            worst = min(worst, min(s["normalized_margin"] for s in rep.samples))
    g = check_growth_condition(QUOT, 1.0, 1.0, (20.0, 80.0))
    ok = worst >= -1e-6 and g.holds
    _report(4, "convexity and growth", ok, t0, 30, f"min margin={worst:.3g} growth holds={g.holds}")


def _min_modulus_family(rng, n):
    """Shifted exponentials and polynomials with |h| > 1 on a random annulus."""
    cases = []
    while len(cases) < n:
        r = rng.uniform(0.5, 5)
        R = r * math.exp(rng.uniform(2 * math.pi + 0.5, 12))
        rho = math.exp(rng.uniform(math.log(r) + math.pi, math.log(R) - math.pi))
        kind = len(cases) % 3
        if kind == 0:
            b = rng.uniform(-1, 1) / R
            c = math.exp(abs(b) * R) * rng.uniform(1.5, 4)
            text = f"{c!r}*exp({b!r}*z)"
        elif kind == 1:
            k = int(rng.integers(1, 4))
            p = complex(*(rng.uniform(-0.4, 0.4, 2) * r))
            c = rng.uniform(1.5, 4) / (r / 2) ** k
            text = f"{c!r}*(z-({p.real!r}+{p.imag!r}*i))^{k}"
        else:
            k = int(rng.integers(1, 3))
            b = rng.uniform(-0.5, 0.5) / R
            c = rng.uniform(1.5, 4) * math.exp(abs(b) * R) / r ** k
            text = f"{c!r}*z^{k}*exp({b!r}*z)"
        cases.append((parse_function(text), Annulus(r, R), rho, text))
    return cases


def test_05_min_modulus_lemma():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    slacks = []
    for h, B, rho, _ in _min_modulus_family(rng, 100):
        slacks.append(min_modulus_annulus_bound(h, B, rho, tol=1e-6)["slack"])
    ok = min(slacks) >= -1e-6
    _report(5, "min-modulus inequality", ok, t0, 60, f"100 functions, min slack={min(slacks):.4g}")


def test_06_cube_cover():
    t0 = time.perf_counter()
    c = covering_certificate(parse_function("z^3"), Annulus(1, 16), 8, 2)
    checks = c.verification["winding_checks"]
    ok = c.passed and c.contains_annulus(Annulus(8, 512)) and len(checks) == 16 and all(x["stable"] for x in checks)
    _report(6, "z^3 covering certificate", ok, t0, 10,
            f"predicted=A({c.predicted.inner:.4g},{c.predicted.outer:.4g}) stable={sum(x['stable'] for x in checks)}/16")


def _mp_cascade_deviation(stages, z, coeff):
    """|sum_k f_k(z) - coeff z| from the closed-form stage terms in 60-digit arithmetic."""
    with mpmath.workdps(60):
        z = mpmath.mpc(z)
        tot = mpmath.mpc(0)
        for s in stages:
            for rho, sign in ((s["rho_o"], 1), (s["rho_i"], -1)):
                tot += sign * mpmath.mpf(s["c"]) * z / (1 - (z / mpmath.mpf(rho)) ** s["m"])
        return float(abs(tot - mpmath.mpf(coeff) * z))


def test_07_runge_cascade():
    from escfatou.constructor import E2, ConstructionPlan, StageFit, assemble_theorem1, plan_theorem1
    t0 = time.perf_counter()
    f, rep = assemble_theorem1(plan_theorem1(4, seed=(20.0, 40.0, 80.0, 160.0)), ratio_pairs=20)
    plan = ConstructionPlan.from_json(rep["plan"])
    fits = [StageFit(s["c"], s["rho_i"], s["rho_o"], s["m"]) for s in rep["stage_fits"]]
    rng = np.random.default_rng(7)
    worst = []
    for n in range(1, 5):
        r, _, _, R = plan.radii[n - 1]
        z = np.exp(rng.uniform(math.log(r), math.log(R), 10_000) + 1j * rng.uniform(0, 2 * np.pi, 10_000))
        dev = np.max(np.abs(sum(s.residual(z) for s in fits)))
        # independent high-precision route on a handful of the samples
        mp = max(_mp_cascade_deviation(rep["stage_fits"], complex(w), plan.T_coeff(n)) for w in z[:4])
        worst.append(max(dev, mp) / plan.eps_tail[n - 1])
    # orbit ratios, m = 1..3, on 20 seeded pairs in A_1
    r1, _, _, R1 = plan.radii[0]
    ratio = 0.0
    for _ in range(20):
        a, b = np.exp(rng.uniform(math.log(r1), math.log(R1), 2) + 1j * rng.uniform(0, 2 * np.pi, 2))
        q0 = abs(a) / abs(b)
        fa, fb = complex(a), complex(b)
        for _ in range(3):
            fa, fb = complex(f(fa)), complex(f(fb))
            ratio = max(ratio, (abs(fa) / abs(fb)) / q0)
    contain = all(c["holds"] for c in rep["containment"])
    ok = max(worst) < 1 and contain and ratio <= E2 and rep["all_hold"]
    _report(7, "Runge cascade N=4", ok, t0, 600,
            f"max dev/eps'={max(worst):.3g} containment={contain} max ratio/(|a|/|b|)={ratio:.6f} <= e^2")


def test_08_claim_41_and_K():
    from escfatou.dynamics import claim_4_1_check
    t0 = time.perf_counter()
    r = claim_4_1_check(EXP, 50.0, 4)
    K_oracle = (math.sinh(2 * math.pi) / (10 * math.pi)) ** 2
    with mpmath.workdps(30):
        tail = float(mpmath.nprod(lambda k: 1 + 4 / (k + 1) ** 2, [1, mpmath.inf]))
    kn_ok = all(K_n(n) > math.sqrt(K_const()) for n in range(1, 11))
    ok = (r["all_hold"] and [c["n"] for c in r["claims"]] == [2, 3, 4]
          and all(m >= 0 for m in r["base_case"]["margins"]) and abs(K_const() - 72.63) <= 0.01
          and abs(K_const() - K_oracle) < 1e-9 and abs(math.sqrt(K_const()) - tail) < 1e-9 and kn_ok)
    _report(8, "claim (4.1) and K", ok, t0, 5, f"K={K_const():.6f} oracle={K_oracle:.6f} K_n>sqrt(K): {kn_ok}")


def test_09_membership_agreement():
    from escfatou.dynamics import fast_escape_membership
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    table = iterate_thresholds(EXP, 50.0, 6, EXP_MODEL)
    disagree, tally = 0, {}
    for _ in range(200):
        z = complex(rng.uniform(-5, 120), rng.uniform(-0.3, 0.3) if rng.random() < 0.25 else 0.0)
        a = fast_escape_membership(EXP, z, 50.0, 4, 6, "that", table)
        b = fast_escape_membership(EXP, z, 50.0, 4, 6, "maxmod", table)
        disagree += a.verdict != b.verdict
        tally[a.verdict] = tally.get(a.verdict, 0) + 1
    _report(9, "M(f)=A(f) spot agreement", disagree == 0, t0, 60, f"disagreements={disagree}/200 verdicts={tally}")


def test_10_escape_rates():
    from escfatou.dynamics import escape_rate_classify
    t0 = time.perf_counter()
    o = iterate_orbit(parse_function("z+sin(z)+2*pi"), math.pi, 200)
    pts = np.asarray(o.points, complex)
    exact = (2 * np.arange(len(pts)) + 1) * math.pi
    rel = float(np.max(np.abs(pts - exact) / exact))
    slope = abs(abs(pts[200]) / (2 * math.pi * 200) - 1)
    cls = escape_rate_classify(o)["class"]
    o2 = iterate_orbit(parse_function("z+exp(-z)+2*pi*i"), 10.0, 200)
    lim = abs(complex(o2.points[200])) / (2 * math.pi * 200)
    ok = rel <= 1e-10 and slope <= 0.01 and cls == "linear" and abs(lim - 1) <= 0.05
    _report(10, "escape-rate anchors", ok, t0, 5,
            f"rel err={rel:.2e} slope dev={slope:.4f} class={cls} |f^200(10)|/(400 pi)={lim:.4f}")


def test_11_gadget():
    from escfatou.constructor import escape_rate_gadget
    t0 = time.perf_counter()
    a = [10.0 * 2 ** n for n in range(8)]
    f, rep = escape_rate_gadget(a, 1.0, 5)
    plan_json = rep["plan"]
    from escfatou.constructor import plan_gadget
    plan = plan_gadget(a, 1.0, 5)
    interp = max(abs(complex(f(a[n])) - a[n + 1]) / a[n + 1] for n in range(1, 6))
    rng = np.random.default_rng(11)
    gdev = 0.0
    for n in range(1, 6):
        rad = plan.alpha[n - 1] / 4 * np.sqrt(rng.random(400))  # G_n = B(a_n, alpha_n/4)
        z = a[n] + rad * np.exp(2j * np.pi * rng.random(400))
        d = np.max(np.abs(f(z) - plan.phi(n, z)))
        gdev = max(gdev, d / plan.eps[n - 1])
    orbit = iterate_orbit(f, a[1], 4).points
    exact = all(complex(p) == a[k + 1] for k, p in enumerate(orbit))
    ok = interp <= 1e-10 and gdev < 1 and exact and rep["all_hold"] and plan_json["N"] == 5
    _report(11, "escape-rate gadget", ok, t0, 60,
            f"interp residual={interp:.2e} max |f-phi|/eps={gdev:.3g} orbit exact={exact}")


def test_12_pole_cloud():
    from escfatou.constructor import pole_cloud
    t0 = time.perf_counter()
    radii, eps = [10.0, 300.0, 2e5, 8.1e10], [0.1, 0.05, 0.025]
    base = parse_function("exp(z/1000)")
    g, rep = pole_cloud(base, radii, eps)
    # direct subtraction where f_base is representable; beyond that exp(z/1000)
    # overflows and only the cancellation-free ring sum in the report applies
    diff, direct = 0.0, 0
    for row in rep["difference"]:
        z = row["r"] * np.exp(2j * np.pi * np.arange(512) / 512)
        with np.errstate(over="ignore"):
            fb = base(z)
        keep = np.isfinite(fb)
        direct += int(keep.sum())
        if keep.any():
            diff = max(diff, float(np.max(np.abs(fb[keep] - g(z[keep])))))
    diff_report = max(row["sup_abs"] for row in rep["difference"])
    # counting function from the ring data alone: N(r) = sum_k m_k log(r / r_k)
    from escfatou.funcexpr.poles import integrated_counting, poles_within
    ms = [math.floor(r) + 1 for r in radii[1:]]
    pl = poles_within(g, 1e11)
    count_ok = True
    for k in range(3):
        lo, hi = math.e * radii[k], (1 - eps[k]) * radii[k + 1]
        for r in np.geomspace(lo * 1.0001, hi, 6):
            oracle = sum(m * math.log(r / rk) for m, rk in zip(ms, radii) if r > rk)
            lib = integrated_counting(pl, r)
            count_ok &= abs(lib - oracle) <= 1e-9 * oracle and oracle >= r
    ratios = rep["deficiency"]["ratios"]
    ok = diff < 1 and diff_report < 1 and count_ok and ratios[-1] < ratios[-2] and rep["all_hold"]
    _report(12, "pole cloud", ok, t0, 60,
            f"sup |f_base-g| direct={diff:.3g} ({direct} pts) ring-sum={diff_report:.3g} "
            f"N(r)>=r: {count_ok} m/T={[f'{x:.3g}' for x in ratios]}")
