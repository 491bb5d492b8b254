import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import chord_oracle
from kinterp.kfunctional import (KResult, NonconvexRegime, OracleRefusal, PROFILE_AUDIT,
                                 bruteforce_values, convexification_constants,
                                 decomposition_cost, k_bruteforce, k_concave_env,
                                 k_convex_opt, k_convexified_bounds, k_holmstedt, k_peetre,
                                 k_profile, k_value, k_values, peetre_couple, route,
                                 sum_and_intersection_norms, sum_pconvex_bound, transport_signs)
from kinterp.measure import (ConvFunction, DomainError, GridFunction, MeasureSpace,
                             conv_violations, log_grid)
from kinterp.spaces import (INF, Couple, HalfLineLp, HalfLineSup, Lorentz, WeightedLp,
                            convexify_couple, gauge)

ATOM = MeasureSpace.counting


def lp(p, w=None):
    return WeightedLp(p, None if w is None else tuple(w))


def check_result(r: KResult, x, c):
    assert r.lower <= r.value * (1 + 1e-12) + 1e-300
    assert r.value <= r.upper * (1 + 1e-12) + 1e-300
    np.testing.assert_allclose(r.x0 + r.x1, x, rtol=0, atol=1e-12 * (1 + np.abs(x).max()))
    assert np.all(np.abs(r.x0) <= np.abs(x) + 1e-12)
    assert np.all(r.x0 * np.asarray(x) >= -1e-12)


# ---------------------------------------------------------------- examples


def test_peetre_examples():
    assert k_peetre(1.5, [1, 1, 0]).value == 1.5
    assert k_peetre(3, [3, 2, 1]).value == 6
    assert k_peetre(2, [3, 2, 1]).value == 5
    assert k_peetre(1, [0, 0]).value == 0
    with pytest.raises(DomainError):
        k_peetre(0, [1.0])


def test_peetre_decomposition_attains_value():
    x = np.array([3.0, -2.0, 1.0, -0.5])
    c = peetre_couple(ATOM(4))
    for t in (0.3, 1.0, 1.7, 2.5, 10.0):
        r = k_peetre(t, x)
        check_result(r, x, c)
        assert abs(decomposition_cost(c, t, r.x0, r.x1) - r.upper) <= 1e-12 * r.upper


def test_peetre_weighted_measure():
    sp = MeasureSpace([0.5, 2.0])
    # x* = 4 on (0, .5], 1 on (.5, 2.5]
    assert k_peetre(1.0, [4.0, 1.0], sp).value == 2.5


def test_concave_env_examples():
    g = log_grid(1e-2, 1e2, 41)
    h = GridFunction(g, ((g >= 1) & (g <= 2)).astype(float))
    assert abs(k_concave_env(0.5, h).value - 0.5) < 1e-12
    f = ConvFunction(g, np.minimum(g, 3.0) + np.sqrt(g))
    for t in g[::7]:
        assert abs(k_concave_env(t, f).value - f(t)) < 1e-12


@settings(max_examples=40)
@given(arrays(float, 12, elements=st.floats(0, 100)))
def test_concave_env_matches_chord_oracle(v):
    g = log_grid(1e-2, 1e2, 12)
    h = GridFunction(g, v)
    want = chord_oracle(g, v)
    got = np.array([k_concave_env(t, h).value for t in g])
    np.testing.assert_allclose(got, want, rtol=1e-10, atol=1e-10)


def test_convex_opt_matches_peetre():
    x = np.array([3.0, 2.0, 1.0])
    c = peetre_couple(ATOM(3))
    r = k_convex_opt(2.0, x, c)
    assert abs(r.value - 5.0) < 1e-7 and r.lower <= 5.0 <= r.upper * (1 + 1e-12)
    check_result(r, x, c)


@pytest.mark.parametrize("p0,p1", [(1, 2), (2, 1), (1.5, 4), (2, 2), (1, 1)])
def test_single_atom_closed_form(p0, p1):
    w0, w1 = 1.7, 0.4
    c = Couple(lp(p0, [w0]), lp(p1, [w1]), ATOM(1))
    for t in (0.1, 1.0, 4.25, 30.0):
        want = 2.5 * min(w0, t * w1)
        r = k_convex_opt(t, [-2.5], c)
        assert abs(r.value / want - 1) < 1e-8
        assert r.lower <= want * (1 + 1e-12) and r.upper >= want * (1 - 1e-12)
        assert abs(k_bruteforce(t, [-2.5], c).value / want - 1) < 1e-12


def test_single_atom_quasi_normed():
    c = Couple(lp(0.5, [2.0]), lp(INF, [1.0]), ATOM(1))
    for t in (0.5, 2.0, 5.0):
        assert k_bruteforce(t, [3.0], c).value == 3.0 * min(2.0, t)


def test_zero_vector_all_methods():
    c = Couple(lp(1.5), lp(2), ATOM(3))
    for r in (k_convex_opt(1.0, np.zeros(3), c), k_bruteforce(1.0, np.zeros(3), c)):
        assert r.value == 0 and r.lower == 0 and r.upper == 0


def test_nonconvex_regime_refused():
    with pytest.raises(NonconvexRegime):
        k_convex_opt(1.0, [1, 2], Couple(lp(0.5), lp(2), ATOM(2)))


def test_bruteforce_size_guard():
    with pytest.raises(OracleRefusal):
        k_bruteforce(1.0, np.ones(7), Couple(lp(0.5), lp(2), ATOM(7)))
    with pytest.raises(OracleRefusal):
        k_bruteforce(1.0, np.ones(2), Couple(lp(0.5), lp(2), ATOM(2)), levels=25)


def test_router_refuses_large_nonconvex():
    c = Couple(Lorentz(0.5, 2), Lorentz(2, 0.5), ATOM(8))
    with pytest.raises(OracleRefusal):
        route(c)


def test_bruteforce_matches_peetre():
    rng = np.random.default_rng(5)
    for _ in range(5):
        x = rng.standard_normal(4)
        c = Couple(lp(1), lp(INF), ATOM(4))
        for t in (0.5, 1.5, 3.0):
            exact = k_peetre(t, x).value
            r = k_bruteforce(t, x, c, levels=12)
            assert r.lower <= exact * (1 + 1e-12) and exact <= r.upper * (1 + 1e-12)


def test_bruteforce_brackets_convex_opt():
    # convex_opt upper never undercuts the rigorous brute-force lower bound,
    # and its own certified gap stays below 1e-6 relative
    rng = np.random.default_rng(6)
    for _ in range(8):
        n = int(rng.integers(1, 5))
        x = rng.standard_normal(n) * np.exp(rng.uniform(-1, 1, n))
        w = np.exp(rng.uniform(-1, 1, n))
        c = Couple(lp(rng.choice([1, 1.5, 2, INF]), w), lp(rng.choice([1, 2, 4]) * 1.0), ATOM(n))
        for t in (0.2, 1.0, 5.0):
            r = k_convex_opt(t, x, c)
            b = k_bruteforce(t, x, c, levels=12)
            assert r.upper >= b.lower * (1 - 1e-12)
            assert r.value <= b.upper * (1 + 1e-9)
            assert r.upper - r.lower <= 1e-6 * r.upper + 1e-14
            check_result(r, x, c)


def test_holmstedt_reduces_to_peetre():
    rng = np.random.default_rng(8)
    x = rng.standard_normal(6)
    c = Couple(lp(1), lp(INF), ATOM(6))
    for t in (0.25, 1.0, 2.5, 4.0, 9.0):
        assert abs(k_holmstedt(t, x, c).value - k_peetre(t, x).value) < 1e-12


def test_holmstedt_domain_error():
    with pytest.raises(DomainError):
        k_holmstedt(1.0, [1, 2], Couple(lp(2), lp(1), ATOM(2)))


def test_holmstedt_single_atom_within_bracket():
    c = Couple(lp(0.5), lp(2), ATOM(1))
    for t in (0.1, 1.0, 10.0):
        r = k_holmstedt(t, [2.0], c)
        assert r.lower <= 2.0 * min(1.0, t) <= r.upper * (1 + 1e-12)


def test_holmstedt_within_kappa_of_bruteforce():
    rng = np.random.default_rng(9)
    c = Couple(lp(0.5), lp(2), ATOM(5))
    for _ in range(3):
        x = rng.standard_normal(5)
        ts = np.array([0.1, 1.0, 10.0])
        lo, up = bruteforce_values(x, c, ts, levels=8)
        for t, bl, bu in zip(ts, lo, up):
            r = k_holmstedt(t, x, c)
            assert r.lower <= bu * (1 + 1e-12) and r.upper >= bl * (1 - 1e-12)


def test_truncation_route_exact_against_bruteforce():
    rng = np.random.default_rng(10)
    for p in (0.5, 1.5, 2.0):
        c = Couple(lp(p), lp(INF, [1.0, 2.0, 0.5]), ATOM(3))
        assert route(c) == "truncation"
        x = rng.standard_normal(3)
        for t in (0.3, 1.0, 3.0):
            r = k_value(t, x, c)
            b = k_bruteforce(t, x, c, levels=24)
            assert b.lower * (1 - 1e-9) <= r.value <= b.upper * (1 + 1e-9)
            check_result(r, x, c)


def test_kresult_json_keys():
    d = k_peetre(1.0, [1.0, 2.0]).to_json()
    assert set(d) == {"t", "value", "lower", "upper", "x0", "x1"}


# ---------------------------------------------------------------- profiles


def test_profile_of_two_ones():
    g = log_grid(1e-2, 1e2, 21)
    f = k_profile([1.0, 1.0], peetre_couple(ATOM(2)), g)
    np.testing.assert_allclose(f.values, np.minimum(g, 2.0), rtol=1e-12)


def test_profile_audit_counts():
    g = log_grid(1e-1, 1e1, 9)
    before = dict(PROFILE_AUDIT)
    k_profile([1.0, 2.0], Couple(lp(1.5), lp(3), ATOM(2)), g)
    assert PROFILE_AUDIT["profiles"] == before["profiles"] + 1
    assert PROFILE_AUDIT["violations"] == before["violations"]


COUPLES = [
    Couple(lp(1), lp(INF), ATOM(3)),
    Couple(lp(2, [1, 2, 3]), lp(1), ATOM(3)),
    Couple(lp(0.5), lp(INF, [3, 1, 2]), ATOM(3)),
    Couple(lp(0.5), lp(2), ATOM(3)),
    Couple(Lorentz(2, 1), Lorentz(1, 0.5), ATOM(3)),
]


@settings(max_examples=15)
@given(arrays(float, 3, elements=st.floats(-10, 10)), st.sampled_from(range(len(COUPLES))),
       st.floats(0.1, 10))
def test_profile_sign_invariance_and_homogeneity(x, ci, lam):
    c = COUPLES[ci]
    g = log_grid(0.1, 10, 7)
    fx = k_profile(x, c, g)
    np.testing.assert_allclose(k_profile(np.abs(x), c, g).values, fx.values, rtol=1e-9,
                               atol=1e-12)
    np.testing.assert_allclose(k_profile(lam * x, c, g).values, lam * fx.values, rtol=1e-6,
                               atol=1e-12)
    assert not conv_violations(g, fx.values)


@settings(max_examples=15)
@given(arrays(float, 3, elements=st.floats(-10, 10)), st.sampled_from(range(len(COUPLES))))
def test_k_scaling_inequality(x, ci):
    # min(1, t/s) K(s) <= K(t) for every pair of grid nodes
    c = COUPLES[ci]
    g = log_grid(0.1, 10, 7)
    v, lo, up = k_values(x, c, g)
    for i, s in enumerate(g):
        for j, t in enumerate(g):
            assert min(1.0, t / s) * lo[i] <= up[j] * (1 + 1e-9) + 1e-12


@settings(max_examples=25)
@given(arrays(float, 3, elements=st.floats(-100, 100)), st.floats(0.01, 100),
       st.sampled_from(range(len(COUPLES))))
def test_bracket_and_cost_invariants(x, t, ci):
    c = COUPLES[ci]
    r = k_value(t, x, c)
    check_result(r, x, c)
    if r.method in ("peetre", "truncation", "convex_opt", "bruteforce"):
        cost = decomposition_cost(c, t, r.x0, r.x1)
        assert abs(cost - r.upper) <= 1e-12 * max(1.0, r.upper)


@given(arrays(float, 6, elements=st.floats(-1e3, 1e3)), arrays(float, 6, elements=st.floats(0, 1)))
def test_transport_signs(x, frac):
    a = np.abs(x)
    u0 = frac * a
    z0, z1 = transport_signs(x, u0, a - u0)
    np.testing.assert_allclose(z0 + z1, x, atol=1e-9)
    assert np.all(np.abs(z0) <= u0 + 1e-12) and np.all(np.abs(z1) <= a - u0 + 1e-9)


# ---------------------------------------------------------------- convexification


def test_convexified_bounds_p_one_is_equality():
    x = [3.0, 2.0, 1.0]
    c = peetre_couple(ATOM(3))
    lo, up = k_convexified_bounds(2.0, x, c, 1.0)
    assert lo == up == 5.0
    assert convexification_constants(1.0) == (1.0, 1.0)


def test_convexified_bounds_refuse_nonconvex():
    with pytest.raises(ValueError):
        k_convexified_bounds(1.0, [1, 2], Couple(lp(0.25), lp(1), ATOM(2)), 0.5)


def test_convexification_single_atom():
    # K(t, a; l^p(w0), l^q(w1)) = a min(w0, t w1): both sides close in closed form
    p = 0.5
    c = Couple(lp(0.5, [2.0]), lp(0.5, [0.5]), ATOM(1))
    cc = convexify_couple(c, 1 / p)
    for t in (0.1, 1.0, 10.0):
        lo, up = k_convexified_bounds(t, [3.0], c, p)
        exact = 3.0 ** p * min(2.0 ** p, t * 0.5 ** p)
        assert abs(k_bruteforce(t, [3.0 ** p], cc).value - exact) < 1e-12
        assert lo <= exact <= up


def test_convexification_sandwich_bruteforce():
    rng = np.random.default_rng(12)
    p = 0.5
    for _ in range(6):
        n = int(rng.integers(1, 4))
        w = tuple(np.exp(rng.uniform(-1, 1, n)))
        c = Couple(lp(0.5), lp(0.5, w), ATOM(n))
        cc = convexify_couple(c, 1 / p)
        x = rng.standard_normal(n)
        for t in (0.2, 1.0, 4.0):
            b = k_bruteforce(t, np.abs(x) ** p, cc, levels=16)
            lo, up = k_convexified_bounds(t, x, c, p)
            assert lo <= b.upper * (1 + 1e-12) and b.lower <= up * (1 + 1e-12)


def test_sum_pconvex_bound_values():
    assert sum_pconvex_bound(1.0) == 1.0
    assert sum_pconvex_bound(0.5) == 4.0
    assert sum_pconvex_bound(2.0) == math.sqrt(2)


def test_sum_membership_is_preserved_by_convexification():
    rng = np.random.default_rng(13)
    c = Couple(lp(0.5), lp(1), ATOM(3))
    cc = convexify_couple(c, 2.0)
    for _ in range(5):
        x = rng.standard_normal(3)
        s = sum_and_intersection_norms(x, c)[0]
        sc = sum_and_intersection_norms(np.abs(x) ** 0.5, cc)[0]
        assert math.isfinite(s) and math.isfinite(sc) and (s > 0) == (sc > 0)


def test_sum_and_intersection_examples():
    g = log_grid(1e-2, 1e2, 41)
    f = ConvFunction(g, np.minimum(g, 2.0) + 0.5 * np.sqrt(g))
    env = Couple(HalfLineSup(0), HalfLineSup(1), g)
    assert abs(sum_and_intersection_norms(f, env)[0] - f(1.0)) < 1e-12
    assert sum_and_intersection_norms([3.0, 4.0], Couple(lp(1), lp(1), ATOM(2))) == (7.0, 7.0)
    assert sum_and_intersection_norms([0.0, 0.0], peetre_couple(ATOM(2))) == (0.0, 0.0)


def test_sum_of_equal_l2_endpoints():
    s, i = sum_and_intersection_norms([3.0, 4.0], Couple(lp(2), lp(2), ATOM(2)))
    assert abs(s - 5.0) < 1e-7 and i == 5.0


def test_halfline_couple_convex_route():
    g = log_grid(1e-2, 1e2, 9)
    c = Couple(HalfLineLp(2, 0.3), HalfLineLp(1, 0.7), g)
    f = np.minimum(g, 1.0)
    r = k_value(1.0, f, c)
    assert r.method == "convex_opt"
    assert r.upper <= min(gauge(c.first, g)(f), gauge(c.second, g)(f)) * (1 + 1e-9)


def test_convex_opt_survives_sparsity_changes():
    # zero coordinates change the compiled problem's sparsity between calls
    c = Couple(lp(1), lp(2), ATOM(4))
    for x in ([3.0, 1.0, 0.25, -2.0], [1.5, 0.0, 0.125, -1.0], [0.0, 0.0, 1.0, 0.0]):
        r = k_convex_opt(0.7, x, c)
        assert r.upper - r.lower <= 1e-6 * r.upper
        check_result(r, np.array(x), c)
