"""Run every verification suite and write one JSON and one CSV report per suite."""
import argparse
import time
from pathlib import Path

from kinterp.harness import SUITES, SuiteConfig, emit, run_suite

if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--n", type=int, help="instances per suite (default: suite default)")
    ap.add_argument("--outdir", default="reports")
    ap.add_argument("suites", nargs="*", default=sorted(SUITES))
    args = ap.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for name in args.suites:
        start = time.perf_counter()
        rep = run_suite(SuiteConfig(name, seed=args.seed, n=args.n))
        emit(rep, out / f"{name}.json")
        emit(rep, out / f"{name}.csv", "csv")
        s = rep.summary()
        worst = "-" if s["worst"] is None else f"{s['worst']:.4g}"
        print(f"{name:18s} n={s['n']:4d} failures={s['failures']} worst={worst} "
              f"({time.perf_counter() - start:.1f}s)")
