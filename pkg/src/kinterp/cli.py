"""Command line entry point: ``kinterp <command> ...``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .harness import (SUITES, SuiteConfig, UsageError, calibrate, dumps, emit, load_thresholds,
                      report_from_json, run_suite)
from .kfunctional import k_value, peetre_couple
from .measure import GridFunction, MeasureSpace, least_concave_majorant, parse_grid, rearrange
from .spaces import Couple, norm, spec_from_json


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(2)


def _floats(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.split(",") if v.strip()], dtype=float)


def _space(args, n):
    return MeasureSpace(_floats(args.weights)) if args.weights else MeasureSpace.counting(n)


def _couple(args, x):
    if not args.couple:
        return peetre_couple(_space(args, x.size))
    d = json.loads(Path(args.couple).read_text() if Path(args.couple).is_file() else args.couple)
    first, second = spec_from_json(d["first"]), spec_from_json(d["second"])
    carrier = parse_grid(args.grid) if args.grid else _space(args, x.size)
    return Couple(first, second, carrier)


def _write(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_kfunc(args):
    x = _floats(args.x)
    c = _couple(args, x)
    res = [k_value(t, x, c, args.method).to_json() for t in _floats(args.t)]
    _write(json.dumps(res, indent=1) + "\n", args.out)
    return 0


def _cmd_norm(args):
    x = _floats(args.x)
    spec = spec_from_json(json.loads(args.spec))
    carrier = parse_grid(args.grid) if args.grid else _space(args, x.size)
    _write(json.dumps({"norm": norm(x, spec, carrier)}) + "\n", args.out)
    return 0


def _cmd_lcm(args):
    grid = parse_grid(args.grid) if args.grid else None
    vals = _floats(args.values)
    if grid is None or grid.size != vals.size:
        raise UsageError("lcm needs --grid with as many points as --values")
    _write(json.dumps(least_concave_majorant(GridFunction(grid, vals)).to_json()) + "\n", args.out)
    return 0


def _cmd_rearrange(args):
    x = _floats(args.x)
    _write(json.dumps(rearrange(x, _space(args, x.size)).to_json()) + "\n", args.out)
    return 0


def _suite_config(args, suite) -> SuiteConfig:
    d = {}
    if args.config:
        d = json.loads(Path(args.config).read_text())
    d.setdefault("suite", suite)
    if suite is not None:
        d["suite"] = suite
    for key in ("seed", "n", "size", "grid", "out"):
        v = getattr(args, key, None)
        if v is not None:
            d[key] = v
    if "thresholds" in d and isinstance(d["thresholds"], str):
        d["thresholds"] = load_thresholds(d["thresholds"])
    return SuiteConfig.from_json(d)


def _cmd_verify(args):
    cfg = _suite_config(args, args.suite)
    rep = run_suite(cfg)
    text = emit(rep, cfg.out, args.format)
    if not cfg.out:
        sys.stdout.write(text)
    s = rep.summary()
    note = " (vacuous)" if s["vacuous"] else ""
    print(f"{rep.suite}: n={s['n']} failures={s['failures']} worst={s['worst']}{note}",
          file=sys.stderr)
    return 0 if rep.failures == 0 else 1


def _cmd_calibrate(args):
    table = calibrate(args.seed if args.seed is not None else 1)
    _write(json.dumps(table, indent=1, sort_keys=True) + "\n", args.out)
    return 0


def _cmd_report(args):
    rep = report_from_json(json.loads(Path(args.input).read_text()))
    _write(dumps(rep, args.format), args.out)
    return 0 if rep.failures == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kinterp", description="K-functional toolkit and verification suites")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--seed", type=int)
        sp.add_argument("--n", type=int, help="instance count")
        sp.add_argument("--grid", help="lo:hi:points")
        sp.add_argument("--config")
        sp.add_argument("--out")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--weights", help="atom measures, comma separated")

    k = sub.add_parser("kfunc", help="evaluate K(t, x) for a couple")
    k.add_argument("--x", required=True)
    k.add_argument("--t", required=True, help="comma separated t values")
    k.add_argument("--couple", help="JSON (inline or file) with first/second specs")
    k.add_argument("--method")
    common(k)
    nm = sub.add_parser("norm", help="quasi-norm of a vector")
    nm.add_argument("--x", required=True)
    nm.add_argument("--spec", required=True, help="JSON space spec")
    common(nm)
    lc = sub.add_parser("lcm", help="least concave majorant of grid values")
    lc.add_argument("--values", required=True)
    common(lc)
    ra = sub.add_parser("rearrange", help="nonincreasing rearrangement")
    ra.add_argument("--x", required=True)
    common(ra)
    ve = sub.add_parser("verify", help="run a verification suite")
    ve.add_argument("suite", choices=sorted(SUITES))
    ve.add_argument("--size", type=int, help="carrier size")
    common(ve)
    ca = sub.add_parser("calibrate", help="write the threshold table")
    common(ca)
    rp = sub.add_parser("report", help="re-emit a stored JSON report")
    rp.add_argument("input")
    common(rp)
    return p


COMMANDS = {"kfunc": _cmd_kfunc, "norm": _cmd_norm, "lcm": _cmd_lcm, "rearrange": _cmd_rearrange,
            "verify": _cmd_verify, "calibrate": _cmd_calibrate, "report": _cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, json.JSONDecodeError, KeyError, TypeError) as e:
        print(f"kinterp: error: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"kinterp: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
