"""Command-line driver.

Every command emits a JSON report carrying ``schema_version``; runs are
described by a :class:`RunConfig` that can be written with
``--emit-config`` and replayed with ``--config``.

Exit codes: 0 success, 2 verification failure (reports still written),
1 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field

import numpy as np

SCHEMA_VERSION = 1
EXIT_OK, EXIT_USAGE, EXIT_VERIFY = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    out: str | None = None
    svg: str | None = None
    csv: str | None = None
    seed: int = 0
    schema_version: int = SCHEMA_VERSION

    def to_json(self):
        return asdict(self)

    @classmethod
    def from_json(cls, d):
        if not isinstance(d, dict) or "command" not in d:
            raise UsageError("config must be an object with a 'command' field")
        if d.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
            raise UsageError(f"unsupported config schema_version {d.get('schema_version')}")
        unknown = set(d) - {"command", "params", "out", "svg", "csv", "seed", "schema_version"}
        if unknown:
            raise UsageError(f"unknown config fields: {sorted(unknown)}")
        if d["command"] not in COMMANDS:
            raise UsageError(f"unknown command {d['command']!r}")
        return cls(d["command"], dict(d.get("params", {})), d.get("out"), d.get("svg"), d.get("csv"),
                   int(d.get("seed", 0)))


# -- helpers ------------------------------------------------------------------------

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(x, (complex, np.complexfloating)):
        return [_jsonable(x.real), _jsonable(x.imag)]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def atomic_write(path, text: str):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _svg(fig, path):
    import io

    import matplotlib.pyplot as plt
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    atomic_write(path, buf.getvalue())


def _figure():
    import matplotlib
    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "escfatou"
    import matplotlib.pyplot as plt
    return plt.subplots(figsize=(6, 4))


def _complex(text) -> complex:
    """A complex constant written in the function language, e.g. ``pi`` or ``3+4*i``."""
    from .funcexpr import evaluate, parse_function
    if isinstance(text, (int, float)):
        return complex(text)
    try:
        return complex(evaluate(parse_function(str(text)), 0).value)
    except Exception as exc:  # parse errors surface as usage errors
        raise UsageError(f"bad complex value {text!r}: {exc}") from exc


def _floats(text):
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"bad number list {text!r}") from exc


def _function(p, key="f"):
    from .funcexpr import load_function
    from .funcexpr.corpus import resolve
    if p.get(key + "_file"):
        try:
            return load_function(p[key + "_file"])
        except OSError as exc:
            raise UsageError(f"cannot read {p[key + '_file']}: {exc}") from exc
    if not p.get(key):
        raise UsageError(f"--{key.replace('_', '-')} or --{key.replace('_', '-')}-file is required")
    try:
        return resolve(p[key])
    except Exception as exc:
        raise UsageError(f"cannot parse function {p[key]!r}: {exc}") from exc


# -- command handlers: each returns (report, passed) ---------------------------------

def cmd_orbit(cfg):
    from .dynamics import escape_rate_classify
    from .funcexpr import iterate_orbit
    p = cfg.params
    f = _function(p)
    o = iterate_orbit(f, _complex(p.get("z0", 0)), int(p.get("n", 100)), float(p.get("escape_radius", 1e300)))
    rep = {"schema_version": SCHEMA_VERSION, "orbit": o.to_json(), "rate": escape_rate_classify(o)}
    if cfg.svg:
        fig, ax = _figure()
        mod = np.abs(np.asarray(o.points))
        ax.plot(np.arange(len(mod)), np.log10(np.maximum(mod, 1e-300)), "o-", ms=3)
        ax.set_xlabel("n")
        ax.set_ylabel("log10 |f^n(z0)|")
        _svg(fig, cfg.svg)
    return rep, True


def cmd_circle_stats(cfg):
    from .nevanlinna import circle_profile
    p = cfg.params
    prof = circle_profile(_function(p), float(p["r"]), float(p.get("tol", 1e-8)))
    rep = prof.to_json()
    rep["ratio_m_over_T"] = prof.proximity / prof.characteristic if prof.characteristic > 0 else None
    return rep, bool(prof.converged)


def cmd_deficiency(cfg):
    from .nevanlinna import deficiency_scan, profiles_to_csv
    p = cfg.params
    scan = deficiency_scan(_function(p), _floats(p["radii"]), float(p.get("tol", 1e-8)))
    if cfg.csv:
        atomic_write(cfg.csv, profiles_to_csv(scan.profiles))
    return scan.to_json(), all(pr.converged for pr in scan.profiles)


def cmd_hyperdist(cfg):
    from .hypgeom import Annulus, THIRD_SPLIT_DISTANCE_CAP, annulus_distance, exponent_bounds
    p = cfg.params
    a, b = _floats(p["annulus"])
    A = Annulus(a, b)
    sig, tau = float(p["sigma"]), float(p["tau"])
    if not 0 < sig < tau < 1:
        raise UsageError("need 0 < sigma < tau < 1")
    eb = exponent_bounds(sig, tau, A.modulus)
    # exponent form: R/|z1| = (R/r)^sigma, R/|z2| = (R/r)^tau
    z1, z2 = b * math.exp(-sig * A.modulus), b * math.exp(-tau * A.modulus)
    d = annulus_distance(A, z1, z2)
    # the closed-form cap applies to the one-third/two-thirds split on modulus >= 2
    cap_ok = A.modulus >= 2 and math.isclose(sig, 1 / 3, abs_tol=1e-3) and math.isclose(tau, 2 / 3, abs_tol=1e-3)
    rep = {"schema_version": SCHEMA_VERSION, "annulus": A.to_json(), "sigma": sig, "tau": tau,
           "z1": z1, "z2": z2, "distance": d, "lower": eb.lower, "upper_sharp": eb.upper,
           "upper": THIRD_SPLIT_DISTANCE_CAP if cap_ok else eb.upper}
    return rep, bool(eb.lower - 1e-12 <= d <= rep["upper"] + 1e-12)


def cmd_cover_check(cfg):
    from .hypgeom import Annulus, covering_certificate
    p = cfg.params
    A = Annulus(*_floats(p["annulus"]))
    c = covering_certificate(_function(p), A, _complex(p["z1"]), _complex(p["z2"]), p.get("route", "auto"))
    if c is None:
        return {"schema_version": SCHEMA_VERSION, "verdict": "empty_candidate"}, False
    return c.to_json(), bool(c.passed)


def cmd_annulus_chain(cfg):
    from .dynamics import annulus_chain, chain_svg
    from .hypgeom import Annulus
    p = cfg.params
    ch = annulus_chain(_function(p), Annulus(*_floats(p["annulus"])), int(p.get("links", 2)),
                       int(p.get("trials", 64)), cfg.seed)
    if cfg.svg:
        import io
        chain_svg(ch, buf := io.StringIO())
        atomic_write(cfg.svg, buf.getvalue())
    ok = (ch.stop_reason == "horizon" and all(lk.preimage_successes == lk.preimage_trials for lk in ch.links)
          and all(x["holds"] for x in ch.ladder))
    return ch.to_json(), ok


def cmd_ratio(cfg):
    from .dynamics import ratio_diagnostic
    p = cfg.params
    r = ratio_diagnostic(_function(p), _complex(p["a"]), _complex(p["b"]), int(p.get("n", 50)))
    if cfg.svg:
        fig, ax = _figure()
        ax.semilogy(np.arange(len(r.ratios)), r.ratios, "o-", ms=3)
        ax.set_xlabel("n")
        ax.set_ylabel("|f^n(a)| / |f^n(b)|")
        _svg(fig, cfg.svg)
    return r.to_json(), True


def cmd_h_profile(cfg):
    from .dynamics import h_profile
    p = cfg.params
    probes = p["probes"] if isinstance(p["probes"], list) else str(p["probes"]).split(";")
    h = h_profile(_function(p), _complex(p["c"]), [_complex(x) for x in probes], int(p.get("n", 20)))
    return h.to_json(), True


def cmd_fast_escape(cfg):
    from .dynamics import fast_escape_membership
    p = cfg.params
    v = fast_escape_membership(_function(p), _complex(p["z"]), float(p["R"]), int(p.get("l_max", 3)),
                               int(p.get("horizon", 6)), p.get("kind", "that"))
    return v.to_json(), True


def cmd_claim41(cfg):
    from .dynamics import claim_4_1_check
    p = cfg.params
    r = claim_4_1_check(_function(p), float(p.get("R", 50)), int(p.get("n_max", 4)))
    return r, bool(r["all_hold"])


def cmd_theorem6(cfg):
    from .dynamics import theorem6_threshold
    p = cfg.params
    r = theorem6_threshold(_function(p), float(p.get("D", math.e ** 4)), float(p.get("c", 1.0)),
                           float(p.get("C", 1.0)))
    return r, r["verdict"] == "found"


def cmd_construct_theorem1(cfg):
    from .constructor import assemble_theorem1, plan_theorem1
    from .funcexpr import save_function
    p = cfg.params
    plan = plan_theorem1(int(p.get("stages", 4)), tuple(_floats(p.get("seed_radii", "20,40,80,160"))),
                         float(p.get("gap", 10.0)))
    f, rep = assemble_theorem1(plan, seed=cfg.seed)
    if p.get("function_out"):
        save_function(f, p["function_out"])
    return rep, bool(rep["all_hold"])


def cmd_pole_cloud(cfg):
    from .constructor import pole_cloud
    p = cfg.params
    g, rep = pole_cloud(_function(p, "f_base") if (p.get("f_base") or p.get("f_base_file"))
                        else _function({"f": "exp(z/1000)"}),
                        _floats(p.get("radii", "10,300,2e5,8.1e10")), _floats(p.get("eps", "0.1,0.05,0.025")))
    return rep, bool(rep["all_hold"])


def cmd_escape_gadget(cfg):
    from .constructor import escape_rate_gadget
    p = cfg.params
    N = int(p.get("stages", 5))
    if p.get("a"):
        a = _floats(p["a"])
    else:
        a0, q = _floats(p.get("a_geometric", "10,2"))
        a = [a0 * q ** n for n in range(N + 3)]
    rho = p.get("rho", 1.0)
    rho = math.inf if str(rho).lower() in ("inf", "infinity") else float(rho)
    f, rep = escape_rate_gadget(a, rho, N)
    return rep, bool(rep["all_hold"])


def cmd_verify_all(cfg):
    """Quick pass over every module's anchor checks."""
    quick = [
        ("circle-stats", {"f": "(exp(z)-1)/(exp(-z)+1)", "r": 60}),
        ("hyperdist", {"annulus": "1,535.4916555247646", "sigma": 1 / 3, "tau": 2 / 3}),
        ("cover-check", {"f": "z^3", "annulus": "1,16", "z1": "8", "z2": "2"}),
        ("claim41", {"f": "exp(z)", "R": 50, "n_max": 4}),
        ("theorem6", {"f": "exp(z)"}),
        ("construct-theorem1", {"stages": 4}),
        ("pole-cloud", {}),
        ("escape-gadget", {"stages": 5}),
    ]
    rows = []
    for name, params in quick:
        try:
            rep, ok = COMMANDS[name](RunConfig(name, params, seed=cfg.seed))
        except Exception as exc:  # record and continue
            rep, ok = {"error": str(exc)}, False
        rows.append({"command": name, "passed": bool(ok)})
    return {"schema_version": SCHEMA_VERSION, "checks": rows}, all(r["passed"] for r in rows)


COMMANDS = {
    "orbit": cmd_orbit, "circle-stats": cmd_circle_stats, "deficiency": cmd_deficiency,
    "hyperdist": cmd_hyperdist, "cover-check": cmd_cover_check, "annulus-chain": cmd_annulus_chain,
    "ratio": cmd_ratio, "h-profile": cmd_h_profile, "fast-escape": cmd_fast_escape, "claim41": cmd_claim41,
    "theorem6": cmd_theorem6, "construct-theorem1": cmd_construct_theorem1, "pole-cloud": cmd_pole_cloud,
    "escape-gadget": cmd_escape_gadget, "verify-all": cmd_verify_all,
}

# flags per command (dest names become config params)
FLAGS = {
    "orbit": ["f", "f-file", "z0", "n", "escape-radius"],
    "circle-stats": ["f", "f-file", "r", "tol"],
    "deficiency": ["f", "f-file", "radii", "tol"],
    "hyperdist": ["annulus", "sigma", "tau"],
    "cover-check": ["f", "f-file", "annulus", "z1", "z2", "route"],
    "annulus-chain": ["f", "f-file", "annulus", "links", "trials"],
    "ratio": ["f", "f-file", "a", "b", "n"],
    "h-profile": ["f", "f-file", "c", "probes", "n"],
    "fast-escape": ["f", "f-file", "z", "R", "l-max", "horizon", "kind"],
    "claim41": ["f", "f-file", "R", "n-max"],
    "theorem6": ["f", "f-file", "D", "c", "C"],
    "construct-theorem1": ["stages", "seed-radii", "gap", "function-out"],
    "pole-cloud": ["f-base", "f-base-file", "radii", "eps"],
    "escape-gadget": ["a", "a-geometric", "rho", "stages"],
    "verify-all": [],
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    ap = _Parser(prog="escfatou", description="Escaping Fatou components toolkit")
    ap.add_argument("--config", help="replay a serialized RunConfig")
    sub = ap.add_subparsers(dest="command")
    for name, flags in FLAGS.items():
        sp = sub.add_parser(name)
        for fl in flags:
            sp.add_argument("--" + fl, dest=fl.replace("-", "_"))
        sp.add_argument("--out", help="report path (default: stdout)")
        sp.add_argument("--svg")
        sp.add_argument("--csv")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--emit-config", help="write the RunConfig for this run")
    return ap


def config_from_args(ns) -> RunConfig:
    params = {k: v for k, v in vars(ns).items()
              if v is not None and k not in ("command", "config", "out", "svg", "csv", "seed", "emit_config")}
    return RunConfig(ns.command, params, ns.out, ns.svg, ns.csv, ns.seed)


def execute(cfg: RunConfig) -> int:
    rep, ok = COMMANDS[cfg.command](cfg)
    text = dumps(rep)
    if cfg.out:
        atomic_write(cfg.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_VERIFY


def run(argv=None) -> int:
    from .funcexpr import PreconditionError
    try:
        ns = build_parser().parse_args(argv)
        if ns.config:
            try:
                with open(ns.config) as fh:
                    cfg = RunConfig.from_json(json.load(fh))
            except (OSError, json.JSONDecodeError) as exc:
                raise UsageError(f"cannot read config {ns.config}: {exc}") from exc
        elif ns.command:
            cfg = config_from_args(ns)
            if ns.emit_config:
                atomic_write(ns.emit_config, dumps(cfg.to_json()))
        else:
            raise UsageError("a command or --config is required")
        return execute(cfg)
    except (UsageError, PreconditionError, KeyError, ValueError) as exc:
        msg = f"missing parameter {exc}" if isinstance(exc, KeyError) else str(exc)
        print(f"escfatou: error: {msg}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
