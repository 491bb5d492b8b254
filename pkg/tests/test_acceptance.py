"""Acceptance criteria, one PASS/FAIL line each.

Run with ``pytest -v tests/test_acceptance.py`` or directly as a script.
Tolerances are pinned below; measured-constant criteria compare against the
packaged threshold table with the harness safety factor.
"""
import math

import numpy as np

from conftest import VERDICTS, chord_oracle
from kinterp import kfunctional as kf
from kinterp.functors import lions_peetre_norm, mutual_closed_check
from kinterp.harness import (SAFETY, SUITES, SuiteConfig, calibrate, dumps,
                             holmstedt_calibration, instance_rng, load_thresholds, rand_vector,
                             run_suite)
from kinterp.measure import (GridFunction, MeasureSpace, default_grid, least_concave_majorant,
                             log_grid, primitive_integral, rearrange)
from kinterp.spaces import HalfLineLp, norm

PEETRE_RTOL = 1e-6
LCM_ATOL = 1e-12
FUNCTOR_ATOL = 1e-6
EXACT_ONE_ATOL = 1e-12
SEED = 7

THRESHOLDS = load_thresholds()


def verdict(k: int, ok: bool, detail: str):
    line = f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}"
    VERDICTS.append(line)
    print(line)
    assert ok, line


def limit(suite):
    return SAFETY * THRESHOLDS["suites"][suite]


def test_criterion_01_peetre_oracle():
    worst = 0.0
    ts = log_grid(1e-2, 1e2, 25)
    for i in range(200):
        rng = instance_rng(SEED, i)
        n = int(rng.integers(1, 9))
        x = rand_vector(rng, n)
        sp = MeasureSpace.counting(n)
        exact = primitive_integral(rearrange(x, sp), ts)
        c = kf.peetre_couple(sp)
        got = np.array([kf.k_convex_opt(t, x, c).value for t in ts])
        worst = max(worst, float(np.max(np.abs(got - exact) / exact)))
    verdict(1, worst <= PEETRE_RTOL, f"200 instances x 25 t, worst rel err {worst:.3g} "
            f"(tol {PEETRE_RTOL:g})")


def test_criterion_02_lcm_oracle():
    worst = 0.0
    g = log_grid(1e-3, 1e3, 64)
    for i in range(100):
        rng = instance_rng(SEED, i)
        v = np.abs(rand_vector(rng, 64)) * rng.integers(0, 2, 64)
        got = least_concave_majorant(GridFunction(g, v)).values
        want = chord_oracle(g, v)
        worst = max(worst, float(np.max(np.abs(got - want) / np.maximum(1.0, np.abs(want)))))
    verdict(2, worst <= LCM_ATOL, f"100 functions, N=64, worst deviation {worst:.3g} "
            f"(tol {LCM_ATOL:g})")


def test_criterion_03_convexification_sandwich():
    rep = run_suite(SuiteConfig("convexification", seed=SEED, n=300))
    s = rep.summary()
    verdict(3, s["n"] == 300 and s["failures"] == 0,
            f"{s['n']} brute-force instances, {s['failures']} failures, "
            f"worst slack {s['worst']:.4g}")


def test_criterion_04_sum_pconvexity():
    rep = run_suite(SuiteConfig("sum-pconvex", seed=SEED, n=300))
    s = rep.summary()
    verdict(4, s["n"] == 300 and s["failures"] == 0,
            f"{s['n']} tuples, {s['failures']} failures, worst M / bound {s['worst']:.4g}")


def test_criterion_06_functor_value():
    g = default_grid()
    f = GridFunction(g, np.minimum(g, 1.0))
    got = norm(f, HalfLineLp(2, 0.5))
    c = kf.peetre_couple(MeasureSpace.counting(1))
    via_k = lions_peetre_norm([1.0], c, 0.5, 2, g)
    err = max(abs(got - math.sqrt(2)), abs(via_k - math.sqrt(2)))
    verdict(6, err <= FUNCTOR_ATOL, f"|norm - sqrt 2| = {err:.3g} on [1e-6, 1e6] x {g.size}")


def test_criterion_07_mutual_closedness():
    rep = run_suite(SuiteConfig("mutual-closed", seed=SEED, n=100, params={"couple": "l1-linf"}))
    exact = rep.summary()
    rng = np.random.default_rng(SEED)
    samples = [(i, rand_vector(rng, int(rng.integers(1, 7)))) for i in range(20)]
    direct = [mutual_closed_check(kf.peetre_couple(MeasureSpace.counting(x.size)), [(i, x)])
              for i, x in samples]
    one = max(max(abs(r.max_ratio - 1), abs(r.min_ratio - 1)) for r in direct)
    fun = run_suite(SuiteConfig("mutual-closed", seed=SEED, n=100)).summary()
    bound = THRESHOLDS["suites"]["mutual-closed"]
    ok = (exact["failures"] == 0 and one <= EXACT_ONE_ATOL and fun["failures"] == 0
          and fun["worst"] <= bound)
    verdict(7, ok, f"(l1, linf) worst |C - 1| = {one:.2g}; functor couples worst C "
            f"{fun['worst']:.4g} <= calibrated {bound:.4g} over {fun['n']} samples")


def test_criterion_08_divisibility():
    rep = run_suite(SuiteConfig("divisibility", seed=SEED, n=500))
    s = rep.summary()
    lim = limit("divisibility")
    again = calibrate(THRESHOLDS["seed"], suites=["divisibility"])
    kappa = holmstedt_calibration(THRESHOLDS["seed"])
    same = (again["suites"]["divisibility"] == THRESHOLDS["suites"]["divisibility"]
            and kappa == THRESHOLDS["holmstedt_kappa"])
    verdict(8, s["n"] == 500 and s["failures"] == 0 and s["worst"] <= lim and same,
            f"worst gamma {s['worst']:.4g} <= 2 gamma* = {lim:.4g}; calibration "
            f"{'reproduced bit-exactly' if same else 'NOT reproduced'} from seed "
            f"{THRESHOLDS['seed']}")


def test_criterion_09_additive_split():
    rep = run_suite(SuiteConfig("orbit-additivity", seed=SEED, n=200))
    s = rep.summary()
    lim = limit("orbit-additivity")
    verdict(9, s["n"] == 200 and s["failures"] == 0 and s["worst"] <= lim,
            f"200 splits, {s['failures']} failures, worst C {s['worst']:.4g} <= 2 C* = {lim:.4g}")


def test_criterion_10_lp_orbit_identity():
    rep = run_suite(SuiteConfig("lp-arazy-cwikel", seed=SEED, n=200, size=16))
    s = rep.summary()
    lim = limit("lp-arazy-cwikel")
    verdict(10, s["n"] == 200 and s["failures"] == 0 and s["worst"] <= lim,
            f"(s,p,q,r) = (0.5,1,2,inf), n=16, worst constant {s['worst']:.4g} <= {lim:.4g}")


def test_criterion_11_determinism():
    bad = []
    for name in SUITES:
        cfg = SuiteConfig(name, seed=SEED, n=4)
        a, b = run_suite(cfg), run_suite(cfg)
        if dumps(a) != dumps(b) or dumps(a, "csv") != dumps(b, "csv"):
            bad.append(name)
    verdict(11, not bad, f"{len(SUITES)} suites re-run, byte-identical JSON and CSV"
            + (f"; differing: {bad}" if bad else ""))


def test_criterion_05_profile_cone_membership():
    # runs last so that the audit covers every profile computed by the suites above
    for name in ("param-sum", "reiteration", "lorentz", "weighted-lp"):
        run_suite(SuiteConfig(name, seed=SEED, n=20))
    audit = dict(kf.PROFILE_AUDIT)
    ok = audit["profiles"] > 0 and audit["violations"] == 0
    verdict(5, ok, f"{audit['profiles']} profiles audited, {audit['violations']} violations "
            "(monotone, concave, K/t nonincreasing, pair test)")


if __name__ == "__main__":
    import pytest
    raise SystemExit(pytest.main([__file__, "-q"]))
