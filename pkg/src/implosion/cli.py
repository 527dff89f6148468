"""Command-line entry point.

Exit codes: 0 pass, 1 property or condition failure, 2 usage or parse error.
"""

import argparse
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
import itertools
import json
import math
from pathlib import Path
import sys

from . import __version__
from .config import SIMULATION_SCHEMA, SWEEP_SCHEMA, read_config
from .errors import DomainError, ImplosionError, ParseError
from .pipeline import (SWEEP_COLUMNS, compute_profile, resolve_ratio_index, run_simulation,
                       run_sweep_case, setup_simulation)
from .profile import load_profile, save_profile, verify_properties
from .regimes import GAMMA_UPPER, check_regime
from .simulator import config_hash

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _clean(obj):
    """Make a structure JSON-safe: non-finite floats become strings."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else str(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item"):
        return _clean(obj.item())
    return obj


def dump_json(obj):
    return json.dumps(_clean(obj), indent=2, sort_keys=True)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def cmd_regime(args, out):
    if not args.gamma > 1:
        raise UsageError(f"gamma must exceed 1, got {args.gamma!r}")
    rep = check_regime(args.gamma, args.delta, args.lam)
    out.write(dump_json({"version": __version__, **rep.as_dict()}) + "\n")
    if args.delta is None:
        return EXIT_OK
    return EXIT_OK if rep.condition_p1 or rep.condition_p2 else EXIT_FAIL


def cmd_profile(args, out):
    if not 1 < args.gamma < GAMMA_UPPER:
        raise UsageError(f"gamma={args.gamma!r} outside (1, 1+2/sqrt(3))")
    if args.ratio_index is not None:
        m = resolve_ratio_index(args.gamma, args.delta, args.ratio_index)
    else:
        m = resolve_ratio_index(args.gamma, args.delta, "auto" if args.delta else 5)
    pr = compute_profile(args.gamma, m, match_order=args.order,
                         bracket=tuple(args.bracket) if args.bracket else None, n=args.n)
    if args.delta is not None:
        pr.profile.model = replace(pr.profile.model, delta=args.delta)
    save_profile(pr.profile, args.out)
    rep = pr.report
    summary = {
        "version": __version__,
        "path": str(args.out),
        "model": pr.profile.model.as_dict(),
        "ratio_index": m,
        "lambda": pr.shoot.lam,
        "mismatch": pr.shoot.mismatch,
        "achieved_order": pr.shoot.achieved_order,
        "eta_tilde": rep.eta_tilde,
        "residual_q": rep.residual_q,
        "residual_u": rep.residual_u,
        "passed": rep.passed,
        "failures": [list(f) for f in rep.failures],
    }
    out.write(dump_json(summary) + "\n")
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_verify(args, out):
    path = Path(args.path)
    if not path.is_file():
        raise UsageError(f"no such profile file: {path}")
    prof = load_profile(path)
    rep = verify_properties(prof, raise_on_failure=False)
    out.write(dump_json({"version": __version__, "path": str(path),
                         "model": prof.model.as_dict(), **rep.as_dict()}) + "\n")
    if not rep.passed:
        names = ", ".join(f[0] for f in rep.failures)
        print(f"verify: failed: {names}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def _load_or_compute_profile(cfg, base):
    mcfg = cfg["model"]
    if mcfg["profile"]:
        prof = load_profile(base / mcfg["profile"])
        if prof.model.gamma != mcfg["gamma"]:
            raise ParseError(f"key 'profile': file gamma {prof.model.gamma!r} differs from "
                             f"gamma={mcfg['gamma']!r}")
        return prof
    m = resolve_ratio_index(mcfg["gamma"], mcfg["delta"], mcfg["ratio_index"])
    return compute_profile(mcfg["gamma"], m).profile


def _checks(cfg, result):
    chk = cfg["checks"]
    out = {}
    if not math.isnan(chk["max_drift"]):
        drift = result.get("drift", math.nan)
        out["max_drift"] = bool(drift <= chk["max_drift"])
    fit = result.get("fit", {})
    if not math.isnan(chk["slope_tolerance"]):
        err = abs(fit.get("rho_slope", math.nan) / fit.get("rho_target", math.nan) - 1)
        out["slope_tolerance"] = bool(err <= chk["slope_tolerance"])
    if not math.isnan(chk["fdis_tolerance"]):
        err = abs(fit.get("fdis_rate", math.nan) / fit.get("fdis_target", math.nan) - 1)
        out["fdis_tolerance"] = bool(err <= chk["fdis_tolerance"])
    if chk["expect_reason"]:
        out["expect_reason"] = result["reason"] == chk["expect_reason"]
    return out


def cmd_simulate(args, out):
    path = Path(args.config)
    if not path.is_file():
        raise UsageError(f"no such config file: {path}")
    cfg, text = read_config(path, SIMULATION_SCHEMA)
    if cfg["run"]["frame"] not in ("selfsim", "eulerian"):
        raise ParseError(f"{path}: bad value for 'frame' in [run]")
    base = path.parent
    out_dir = Path(args.out_dir) if args.out_dir else base
    out_dir.mkdir(parents=True, exist_ok=True)
    prof = _load_or_compute_profile(cfg, base)
    sim, state, fm, _ = setup_simulation(cfg, prof)
    model = sim.model
    sim.meta.update(version=__version__, config_hash=config_hash(text), alpha=model.alpha,
                    a1=model.a1, a2=model.a2, c_dis=model.c_dis, delta_dis=model.delta_dis,
                    boundary=sim.boundary, viscous=sim.viscous, r_max=sim.r_max)
    series, result = run_simulation(sim, state, fm)
    series.to_csv(out_dir / cfg["output"]["diagnostics"])
    checks = _checks(cfg, result)
    report = {"version": __version__, "config_hash": config_hash(text),
              "model": model.as_dict(), "surrogates": dict(sim.meta), **result,
              "checks": checks, "passed": all(checks.values())}
    text_out = dump_json(report) + "\n"
    (out_dir / cfg["output"]["report"]).write_text(text_out, encoding="utf-8")
    out.write(text_out)
    return EXIT_OK if report["passed"] else EXIT_FAIL


def sweep_cases(cfg):
    opts = dict(cfg["sweep"])
    grid = itertools.product(opts.pop("gammas"), opts.pop("deltas"))
    return [(i, g, d, opts) for i, (g, d) in enumerate(grid)]


def format_sweep(rows, cfg, text):
    opts = cfg["sweep"]
    lines = [f"# version={__version__}", f"# config-hash={config_hash(text)}"]
    header = {k: v for k, v in opts.items() if k not in ("gammas", "deltas")}
    header["a2"] = 0.0
    lines += [f"# {k}={_fmt(v)}" for k, v in sorted(header.items())]
    lines.append(",".join(SWEEP_COLUMNS))
    for row in sorted(rows, key=lambda r: r["index"]):
        lines.append(",".join(_fmt(row[c]) for c in SWEEP_COLUMNS))
    return "\n".join(lines) + "\n"


def cmd_sweep(args, out):
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    path = Path(args.config)
    if not path.is_file():
        raise UsageError(f"no such config file: {path}")
    cfg, text = read_config(path, SWEEP_SCHEMA)
    cases = sweep_cases(cfg)
    if args.jobs == 1 or len(cases) <= 1:
        rows = [run_sweep_case(c) for c in cases]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(run_sweep_case, cases))
    csv = format_sweep(rows, cfg, text)
    if args.out:
        Path(args.out).write_text(csv, encoding="utf-8")
    else:
        out.write(csv)
    return EXIT_OK if all(r["status"] == "ok" for r in rows) else EXIT_FAIL


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="implosion", description="Self-similar implosion toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("regime", help="report the (P1)/(P2) conditions as JSON")
    r.add_argument("--gamma", type=float, required=True)
    r.add_argument("--delta", type=float)
    r.add_argument("--lambda", dest="lam", type=float)
    r.set_defaults(func=cmd_regime)

    pr = sub.add_parser("profile", help="shoot, reconstruct, verify and save a profile")
    pr.add_argument("--gamma", type=float, required=True)
    pr.add_argument("--ratio-index", help="odd eigenvalue-ratio index or 'auto'")
    pr.add_argument("--delta", type=float, help="viscosity exponent; selects the index for (P1)")
    pr.add_argument("--bracket", type=float, nargs=2, metavar=("LO", "HI"))
    pr.add_argument("--order", type=int, default=4, help="required Taylor match order")
    pr.add_argument("--n", type=int, default=4096, help="base number of table nodes")
    pr.add_argument("--out", required=True)
    pr.set_defaults(func=cmd_profile)

    v = sub.add_parser("verify", help="check the properties of a saved profile")
    v.add_argument("path")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("simulate", help="run a radial simulation from a config file")
    s.add_argument("config")
    s.add_argument("--out-dir")
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="run a (gamma, delta) grid of cases")
    w.add_argument("config")
    w.add_argument("--jobs", type=int, default=1)
    w.add_argument("--out")
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, out)
    except (UsageError, ParseError, DomainError) as exc:
        print(f"implosion: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ImplosionError as exc:
        print(f"implosion: failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
