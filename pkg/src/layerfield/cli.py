"""Command-line driver: ``layerfield {verify, epr, evolve, fock-ccr}``.

Exit codes: 0 when everything passed, 1 when a check failed, 2 for bad input.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np
import yaml

from . import epr
from .config import ConfigError, load_config
from .experiment import format_records, run_evolution
from .fock_kg import TruncatedFock, ccr_check
from .lattice import Lattice3D
from .suites import SUITES, run_suite


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    """Comma-separated angles; each item is a number or ``[k*]pi[/n]``."""
    out = []
    for item in text.split(","):
        item = item.strip().lower()
        if not item:
            continue
        if "pi" in item:
            num, _, den = item.partition("/")
            coef = num.replace("pi", "").rstrip("*") or "1"
            val = float(coef) * math.pi / (float(den) if den else 1.0)
        else:
            val = float(item)
        if not math.isfinite(val):
            raise ValueError(item)
        out.append(val)
    return out


def _write(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_verify(args) -> int:
    names = sorted(SUITES) if args.suite == "all" else [args.suite]
    if args.suite != "all" and args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; known suites: all, {', '.join(sorted(SUITES))}")
    failed = 0
    report = []
    for name in names:
        checks, secs = run_suite(name, args.seed)
        bad = sum(not c.ok for c in checks)
        failed += bad
        if args.json:
            report.append({"suite": name, "seed": args.seed, "seconds": secs,
                           "checks": [{"name": c.name, "passed": c.ok, "deviation": c.deviation, "tol": c.tol}
                                      for c in checks]})
        else:
            print(f"[{name}] seed={args.seed} {len(checks) - bad}/{len(checks)} passed in {secs:.2f}s")
            for c in checks:
                print("  " + c.line())
    if args.json:
        print(json.dumps(report, indent=1))
    return 1 if failed else 0


def _axis(v, where) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.shape != (3,) or not np.all(np.isfinite(a)) or np.linalg.norm(a) == 0:
        raise UsageError(f"{where}: an axis must be three finite numbers, not all zero")
    return a / np.linalg.norm(a)


def cmd_epr(args) -> int:
    m = epr.singlet()
    rows = []
    if args.axes:
        data = yaml.safe_load(Path(args.axes).read_text())
        if not isinstance(data, list) or not data:
            raise UsageError("axes file must hold a non-empty list of {a: [x,y,z], b: [x,y,z]}")
        for i, item in enumerate(data):
            if not isinstance(item, dict) or set(item) != {"a", "b"}:
                raise UsageError(f"axes entry {i}: expected keys a and b")
            a, b = _axis(item["a"], f"axes entry {i}.a"), _axis(item["b"], f"axes entry {i}.b")
            theta = math.acos(max(-1.0, min(1.0, float(a @ b))))
            rows.append(epr.correlation(m, a, b, theta))
    else:
        try:
            thetas = _floats(args.thetas) if args.thetas else list(SUITE_THETAS)
        except ValueError as e:
            raise UsageError(f"bad angle list: {e}") from None
        rows = epr.epr_table(thetas, m)
    lines = ["theta,E,p_pp,p_pm,p_mp,p_mm"]
    for r in rows:
        lines.append(",".join(repr(float(x)) for x in (r.theta, r.E, r.p_pp, r.p_pm, r.p_mp, r.p_mm)))
    _write("\n".join(lines) + "\n", args.output)
    return 0


SUITE_THETAS = tuple(k * math.pi / 8 for k in range(8))


def cmd_evolve(args) -> int:
    try:
        cfg = load_config(args.config)
    except FileNotFoundError:
        raise UsageError(f"config file not found: {args.config}") from None
    except ConfigError as e:
        raise UsageError(f"{args.config}: {e}") from None
    text = format_records(cfg, run_evolution(cfg))
    out = args.output or cfg.output.path
    _write(text, None if out == "-" else out)
    return 0


def cmd_fock_ccr(args) -> int:
    if args.modes < 1 or args.cutoff < 1:
        raise UsageError("--modes and --cutoff must be at least 1")
    dims = tuple(int(x) for x in args.lattice.split(","))
    lat = Lattice3D(dims)
    if args.modes > lat.site_count:
        raise UsageError(f"a {dims} lattice has only {lat.site_count} modes")
    space = TruncatedFock.for_lattice(lat, args.modes, args.cutoff, mass=args.mass)
    rep = ccr_check(space)
    print(json.dumps(rep.as_dict(), sort_keys=True))
    return 0 if rep.exact_below_cutoff and rep.boundary_matches_truncation else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="layerfield", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run a seeded property suite")
    v.add_argument("--suite", default="all", help=f"one of: all, {', '.join(sorted(SUITES))}")
    v.add_argument("--seed", type=lambda s: int(s, 0), default=0)
    v.add_argument("--json", action="store_true", help="machine-readable report")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("epr", help="singlet spin correlation table")
    g = e.add_mutually_exclusive_group()
    g.add_argument("--thetas", help="comma-separated angles for Bob's axis (x-z plane), e.g. 0,pi/4,pi/2")
    g.add_argument("--axes", help="YAML/JSON file listing {a: [x,y,z], b: [x,y,z]} pairs")
    e.add_argument("--output", help="CSV path (default stdout)")
    e.set_defaults(func=cmd_epr)

    ev = sub.add_parser("evolve", help="time evolution from a config file")
    ev.add_argument("--config", required=True)
    ev.add_argument("--output", help="override the config's output path ('-' for stdout)")
    ev.set_defaults(func=cmd_evolve)

    f = sub.add_parser("fock-ccr", help="commutator report for the truncated Fock space")
    f.add_argument("--modes", type=int, default=3)
    f.add_argument("--cutoff", type=int, default=3)
    f.add_argument("--lattice", default="8,1,1", help="lattice extents nx,ny,nz")
    f.add_argument("--mass", type=float, default=1.0)
    f.set_defaults(func=cmd_fock_ccr)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError) as e:
        print(f"layerfield {args.command}: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
