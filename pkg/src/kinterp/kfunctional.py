"""K-functional evaluators for lattice couples.

Routing is explicit: closed forms first (Peetre, concave envelope, truncation
against a sup-type endpoint), convex minimization when both endpoints are
normed, the Holmstedt formula for quasi-normed L^p-L^q couples, and the
exhaustive grid oracle for anything else that is small enough.  Nonconvex
couples are never handed to the convex solver.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from .measure import (ConvFunction, DomainError, GridFunction, MeasureSpace,
                      concave_majorant_values, conv_violations, primitive_integral, rearrange)
from .spaces import (INF, Couple, Gauge, HalfLineSup, Lorentz, WeightedLp,
                     couple_convexity, gauge)

CONVEX_RTOL = 1e-8
DUAL_SOLVE_GAP = 1e-6
MAX_ITERS = 100_000
BRUTE_MAX_N = 6
BRUTE_MAX_LEVELS = 24
BRUTE_MAX_POINTS = 4_000_000
DEFAULT_HOLMSTEDT_KAPPA = 4.0
GOLDEN_STEPS = 90

# running count of computed profiles and of profiles failing the cone checks
PROFILE_AUDIT = {"profiles": 0, "violations": 0}


class NonconvexRegime(ValueError):
    """Raised when a convex solver is asked to handle a quasi-normed endpoint."""


class OracleRefusal(ValueError):
    """Raised when an exhaustive oracle would exceed its size guard."""


@dataclass
class KResult:
    t: float
    value: float
    lower: float
    upper: float
    x0: np.ndarray
    x1: np.ndarray
    method: str = ""
    info: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"t": self.t, "value": self.value, "lower": self.lower, "upper": self.upper,
                "x0": np.asarray(self.x0).tolist(), "x1": np.asarray(self.x1).tolist()}


def _values(x) -> np.ndarray:
    return np.asarray(x.values if isinstance(x, GridFunction) else x, dtype=float)


def transport_signs(x, u0, u1):
    """Carry a decomposition of |x| back onto x.

    With x+ = max(x, 0) and x- = max(-x, 0) the parts are
    z_i = min(u_i, x+) - min(u_i, x-); they satisfy z0 + z1 = x and |z_i| <= u_i.
    """
    x = np.asarray(x, dtype=float)
    xp, xm = np.maximum(x, 0), np.maximum(-x, 0)
    z0 = np.minimum(u0, xp) - np.minimum(u0, xm)
    return z0, x - z0


def decomposition_cost(c: Couple, t: float, x0, x1) -> float:
    g0, g1 = c.gauges()
    return float(g0(x0) + t * g1(x1))


def _check_t(t):
    if np.any(np.asarray(t, dtype=float) <= 0):
        raise DomainError("K-functional needs t > 0")


# ---------------------------------------------------------------- closed forms


def peetre_couple(space: MeasureSpace) -> Couple:
    return Couple(WeightedLp(1), WeightedLp(INF), space)


def concave_env_couple(grid) -> Couple:
    return Couple(HalfLineSup(0.0), HalfLineSup(1.0), np.asarray(grid, dtype=float))


def _peetre_values(x, space, ts):
    f = rearrange(x, space)
    val = primitive_integral(f, ts)
    level = f(ts)
    return np.asarray(val, dtype=float), np.asarray(level, dtype=float)


def k_peetre(t: float, x, space: MeasureSpace | None = None) -> KResult:
    """K(t, x; L^1, L^inf): the integral of the rearrangement over (0, t)."""
    _check_t(t)
    x = np.asarray(x, dtype=float)
    space = space or MeasureSpace.counting(x.size)
    space.check(x)
    val, level = _peetre_values(x, space, np.array([t]))
    a = np.abs(x)
    u1 = np.minimum(a, level[0])
    z0, z1 = transport_signs(x, a - u1, u1)
    v = float(val[0])
    return KResult(float(t), v, v, v, z0, z1, "peetre")


def _hull_line(grid, env, t):
    """Intercept and slope of the envelope's supporting line at t."""
    g = np.concatenate(([0.0], grid))
    e = np.concatenate(([0.0], env))
    if t >= g[-1]:
        return float(e[-1]), 0.0
    k = int(np.searchsorted(g, t, side="right")) - 1
    slope = (e[k + 1] - e[k]) / (g[k + 1] - g[k])
    return float(e[k] - slope * g[k]), float(slope)


def k_concave_env(t: float, h) -> KResult:
    """K(t, h; L^inf, L^inf(1/t)): the least concave majorant of |h| at t."""
    _check_t(t)
    if not isinstance(h, GridFunction):
        raise TypeError("k_concave_env needs a GridFunction")
    env = concave_majorant_values(h.grid, h.values)
    value = float(ConvFunction(h.grid, env)(t))
    lam, mu = _hull_line(h.grid, env, t)
    a = np.abs(h.values)
    u0 = np.minimum(a, lam)
    return KResult(float(t), value, value, value, u0, a - u0, "concave_env",
                   {"intercept": lam, "slope": mu})


def _golden(fun, lo, hi, steps=GOLDEN_STEPS):
    """Vectorized golden-section minimization of unimodal functions."""
    r = (math.sqrt(5) - 1) / 2
    a, b = lo.copy(), hi.copy()
    c1 = b - r * (b - a)
    c2 = a + r * (b - a)
    f1, f2 = fun(c1), fun(c2)
    for _ in range(steps):
        left = f1 <= f2
        b = np.where(left, c2, b)
        a = np.where(left, a, c1)
        nc1 = np.where(left, b - r * (b - a), c2)
        nc2 = np.where(left, c1, a + r * (b - a))
        fn = fun(np.where(left, nc1, nc2))
        f2 = np.where(left, f1, fn)
        f1 = np.where(left, fn, f1)
        c1, c2 = nc1, nc2
    mid = np.where(f1 <= f2, c1, c2)
    return mid, np.minimum(f1, f2)


def truncation_curve(a, gS: Gauge, c, ts):
    """min over lam >= 0 of ||(a - lam/c)_+||_S + t lam, for every t in ``ts``.

    Returns the minimal values and the minimizing levels.  Between consecutive
    breakpoints lam = a_i c_i the first term is concave when S is an L^p gauge
    with p <= 1, so the minimum sits on a breakpoint; otherwise it is convex
    in lam and a golden-section search around the best breakpoint finishes.
    """
    a = np.abs(np.asarray(a, dtype=float))
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    bp = np.unique(np.concatenate(([0.0], a * c)))
    tails = lambda lam: gS(np.maximum(a[None, :] - lam[:, None] / c[None, :], 0.0))
    nb = np.atleast_1d(tails(bp))
    obj = nb[None, :] + ts[:, None] * bp[None, :]
    k = np.argmin(obj, axis=1)
    best = obj[np.arange(ts.size), k]
    lam = bp[k]
    if gS.kind == "lp" and gS.p <= 1:
        return best, lam
    lo = bp[np.maximum(k - 1, 0)]
    hi = bp[np.minimum(k + 1, bp.size - 1)]
    glam, gval = _golden(lambda l: np.atleast_1d(tails(l)) + ts * l, lo, hi)
    better = gval < best
    return np.where(better, gval, best), np.where(better, glam, lam)


def _sup_side(c: Couple):
    g0, g1 = c.gauges()
    if g1.kind == "sup" and g0.kind != "lorentz":
        return 1
    if g0.kind == "sup" and g1.kind != "lorentz":
        return 0
    return None


def _truncation_values(x, c: Couple, ts):
    """Exact K over all ``ts`` when one endpoint is a weighted sup norm."""
    a = np.abs(_values(x))
    g0, g1 = c.gauges()
    side = _sup_side(c)
    if side == 1:
        val, lam = truncation_curve(a, g0, g1.c, ts)
        return val, lam, side
    val, lam = truncation_curve(a, g1, g0.c, 1.0 / ts)
    return ts * val, lam, side


def k_truncation(t: float, x, c: Couple) -> KResult:
    """Exact K when one endpoint is a weighted sup norm (the other not Lorentz)."""
    _check_t(t)
    side = _sup_side(c)
    if side is None:
        raise ValueError("k_truncation needs a sup-type endpoint")
    xv = _values(x)
    a = np.abs(xv)
    val, lam, _ = _truncation_values(a, c, np.array([float(t)]))
    g0, g1 = c.gauges()
    csup = (g1 if side == 1 else g0).c
    u_sup = np.minimum(a, lam[0] / csup)
    u_other = a - u_sup
    u0, u1 = (u_other, u_sup) if side == 1 else (u_sup, u_other)
    z0, z1 = transport_signs(xv, u0, u1)
    cost = decomposition_cost(c, t, u0, u1)
    v = float(val[0])
    return KResult(float(t), v, min(v, cost), cost, z0, z1, "truncation")


# ---------------------------------------------------------------- convex solver


def _cvx_norm(g: Gauge, u):
    if g.kind == "sup":
        return cp.max(cp.multiply(g.c, u))
    if g.p == 1:
        return cp.sum(g.A @ u)
    return cp.pnorm(g.A @ u, g.p)


def _dual_radius(g: Gauge, lam, u, z=None):
    """Certified upper bound for sup{<lam, v> : ||v|| <= 1, v >= 0}, lam >= 0.

    Exact for sup and diagonal gauges.  For quadrature gauges any z >= 0 with
    A^T z >= lam certifies the bound ||z||_q; candidates are the norming
    functional of A u and an optional solver-provided z.
    """
    if g.kind == "sup":
        return float(np.sum(lam / g.c))
    A = g.A
    if A.shape[0] == A.shape[1] and A.nnz == A.shape[0]:
        r = lam / A.diagonal()
        if g.p == 1:
            return float(np.max(r))
        q = g.p / (g.p - 1)
        return float(np.sum(r ** q) ** (1 / q))
    colsum = np.asarray(A.sum(axis=0)).ravel()
    if g.p == 1:
        return float(np.max(lam / colsum))
    q = g.p / (g.p - 1)
    best = float(np.max(lam / colsum)) * float(A.shape[0] ** (1 / q))
    zs = [] if z is None else [np.maximum(z, 0.0)]
    y = A @ u
    ny = gauge_lp(y, g.p)
    if ny > 0:
        zs.append((y / ny) ** (g.p - 1))
    need = lam > 0
    for zz in zs:
        atz = A.T @ zz
        if np.all(atz[need] > 0):
            s = float(np.max(lam[need] / atz[need])) if need.any() else 0.0
            best = min(best, s * float(np.sum(zz ** q) ** (1 / q)))
    return best


_DUALS: dict = {}


def _dual_constraint(g: Gauge, lam, bound):
    """Constraint rho(lam) <= bound in conic form, plus the auxiliary z if any."""
    if g.kind == "sup":
        return [cp.sum(cp.multiply(1.0 / g.c, lam)) <= bound], None
    A = g.A
    if A.shape[0] == A.shape[1] and A.nnz == A.shape[0]:
        r = cp.multiply(1.0 / A.diagonal(), lam)
        q = INF if g.p == 1 else g.p / (g.p - 1)
        return [cp.norm(r, q) <= bound], None
    z = cp.Variable(A.shape[0], nonneg=True)
    q = INF if g.p == 1 else g.p / (g.p - 1)
    return [lam <= A.T @ z, cp.norm(z, q) <= bound], z


def _dual_problem(c: Couple):
    key = id(c)
    hit = _DUALS.get(key)
    if hit is not None and hit[0] is c:
        return hit[1:]
    g0, g1 = c.gauges()
    n = c.size
    a = cp.Parameter(n, nonneg=True)
    b0 = cp.Parameter(nonneg=True)
    b1 = cp.Parameter(nonneg=True)
    lam = cp.Variable(n, nonneg=True)
    k0, z0 = _dual_constraint(g0, lam, b0)
    k1, z1 = _dual_constraint(g1, lam, b1)
    prob = cp.Problem(cp.Maximize(a @ lam), k0 + k1)
    if len(_DUALS) > 64:
        _DUALS.clear()
    _DUALS[key] = (c, prob, a, b0, b1, lam, z0, z1)
    return prob, a, b0, b1, lam, z0, z1


def _certify(c: Couple, t, a, lam, u0, u1, z0=None, z1=None):
    g0, g1 = c.gauges()
    lam = np.maximum(lam, 0.0)
    if not np.any(lam > 0):
        return 0.0
    r = max(_dual_radius(g0, lam, u0, z0), _dual_radius(g1, lam, u1, z1) / t)
    if r > 0 and np.isfinite(r):
        return float(np.sum(lam * a)) / r
    return 0.0


def _dual_lower(c: Couple, t, a, u0, u1, upper):
    """Weak-duality lower bound for K.

    For lam >= 0 with rho_0(lam) <= 1 and rho_1(lam) <= t every splitting
    a = v0 + v1 has <lam, a> <= ||v0||_0 + t ||v1||_1.  Cheap multipliers
    from subgradients at the primal pair are tried first; if the gap stays
    above DUAL_SOLVE_GAP the dual program is solved.
    """
    g0, g1 = c.gauges()
    best = max([_certify(c, t, a, lam, u0, u1)
                for lam in _candidate_multipliers(g0, g1, t, a, u0, u1)] + [0.0])
    if best >= upper * (1 - DUAL_SOLVE_GAP):
        return best
    prob, pa, b0, b1, lam, z0, z1 = _dual_problem(c)
    m = min(1.0, t)
    scale = float(a.max())
    pa.value = a / scale
    b0.value, b1.value = 1.0 / m, t / m
    if _solve(prob, tol_feas=1e-12) != "ok":
        return best
    if lam.value is None:
        return best
    zz0 = None if z0 is None or z0.value is None else z0.value
    zz1 = None if z1 is None or z1.value is None else z1.value
    return max(best, _certify(c, t, a, lam.value, u0, u1, zz0, zz1))


def gauge_lp(y, p):
    y = np.maximum(np.asarray(y, dtype=float), 0)
    return float(np.sum(y ** p) ** (1 / p))


_PROBLEMS: dict = {}


def _solve(prob, **opts) -> str:
    """Solve a cached problem; a warm-start update is refused by the solver
    when zero parameter entries change the sparsity pattern, so retry cold."""
    opts = dict(solver=cp.CLARABEL, max_iter=MAX_ITERS, tol_gap_abs=1e-12, tol_gap_rel=1e-12,
                **opts)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for warm in (True, False):
            try:
                prob.solve(warm_start=warm, **opts)
                return "ok"
            except cp.error.SolverError:
                return "solver_error"
            except Exception:
                if not warm:
                    raise
    return "solver_error"


def _problem(c: Couple):
    """Compiled problem in the box variable v = u / |x|, reused across calls."""
    key = id(c)
    hit = _PROBLEMS.get(key)
    if hit is not None and hit[0] is c:
        return hit[1:]
    g0, g1 = c.gauges()
    n = c.size
    a = cp.Parameter(n, nonneg=True)
    s0 = cp.Parameter(nonneg=True)
    s1 = cp.Parameter(nonneg=True)
    v = cp.Variable(n)
    obj = s0 * _cvx_norm(g0, cp.multiply(a, v)) + s1 * _cvx_norm(g1, cp.multiply(a, 1 - v))
    prob = cp.Problem(cp.Minimize(obj), [v >= 0, v <= 1])
    if len(_PROBLEMS) > 64:
        _PROBLEMS.clear()
    _PROBLEMS[key] = (c, prob, a, s0, s1, v)
    return prob, a, s0, s1, v


def _norming(g: Gauge, u):
    """A subgradient of the gauge at u (restricted to u >= 0)."""
    if g.kind == "sup":
        s = np.zeros_like(u)
        y = g.c * u
        k = int(np.argmax(y))
        s[k] = g.c[k]
        return s
    y = g.A @ u
    ny = gauge_lp(y, g.p)
    if ny <= 0:
        return None
    z = np.ones_like(y) if g.p == 1 else (y / ny) ** (g.p - 1)
    return g.A.T @ z


def _candidate_multipliers(g0, g1, t, a, u0, u1):
    out = []
    for g, u, s in ((g0, u0, 1.0), (g1, u1, t)):
        d = _norming(g, u)
        if d is not None:
            out.append(s * np.maximum(d, 0))
    if len(out) == 2:
        out.append(np.minimum(out[0], out[1]))
        out.append(np.maximum(out[0], out[1]))
    return out


def k_convex_opt(t: float, x, c: Couple, certify: bool = True) -> KResult:
    """Minimize ||u||_0 + t ||(|x| - u)||_1 over the box 0 <= u <= |x|.

    Uses an interior-point conic solver on the scaled box variable u / |x|;
    the upper end of the bracket is the exact cost of the projected solution
    (or of a trivial split if that is cheaper), the lower end a weak-duality
    bound.  With ``certify=False`` the lower end is left at 0.
    """
    _check_t(t)
    g0, g1 = c.gauges()
    if not (g0.convex and g1.convex):
        raise NonconvexRegime(
            "couple has an exponent below 1 or a Lorentz endpoint; "
            "use k_bruteforce or k_holmstedt")
    xv = _values(x)
    a = np.abs(xv)
    if not np.any(a > 0):
        z = np.zeros_like(a)
        return KResult(float(t), 0.0, 0.0, 0.0, z, z.copy(), "convex_opt")
    trivial = min(float(g0(a)), t * float(g1(a)))
    prob, pa, s0, s1, v = _problem(c)
    pa.value = a
    s0.value = 1.0 / trivial
    s1.value = t / trivial
    status = _solve(prob, tol_feas=1e-12, tol_ktratio=1e-10)
    cands = [a.copy(), np.zeros_like(a)]
    if v.value is not None:
        cands.insert(0, np.clip(v.value, 0.0, 1.0) * a)
    costs = [decomposition_cost(c, t, u, a - u) for u in cands]
    k = int(np.argmin(costs))
    uu0 = cands[k]
    uu1 = a - uu0
    upper = costs[k]
    lower = min(_dual_lower(c, t, a, uu0, uu1, upper), upper) if certify else 0.0
    if prob.status not in ("optimal", None):
        status = prob.status
    z0, z1 = transport_signs(xv, uu0, uu1)
    return KResult(float(t), upper, lower, upper, z0, z1, "convex_opt", {"status": status})


# ---------------------------------------------------------------- brute force


def _brute_tables(a, c: Couple, levels: int):
    n = a.size
    if n > BRUTE_MAX_N or levels > BRUTE_MAX_LEVELS or (levels + 1) ** n > BRUTE_MAX_POINTS:
        raise OracleRefusal(
            f"brute force limited to n <= {BRUTE_MAX_N}, levels <= {BRUTE_MAX_LEVELS} "
            f"and {BRUTE_MAX_POINTS} grid points")
    steps = np.linspace(0.0, 1.0, levels + 1)
    axes = [steps * ai for ai in a]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    g0, g1 = c.gauges()
    shape = (levels + 1,) * n
    n0 = np.asarray(g0(mesh)).reshape(shape)
    n1 = np.asarray(g1(np.maximum(a - mesh, 0.0))).reshape(shape)
    return mesh, n0, n1


def k_bruteforce(t, x, c: Couple, levels: int = 16) -> KResult:
    """Exhaustive minimum over the product grid {0, |x_i|/L, ..., |x_i|}.

    Valid for every exponent.  The lower bound is rigorous: on the cell with
    corners lo <= hi every u has ||u||_0 >= ||lo||_0 and ||x - u||_1 >= ||x - hi||_1.
    """
    _check_t(t)
    xv = _values(x)
    a = np.abs(xv)
    mesh, n0, n1 = _brute_tables(a, c, levels)
    phi = (n0 + t * n1).ravel()
    k = int(np.argmin(phi))
    upper = float(phi[k])
    lo_sl = tuple(slice(0, -1) for _ in a)
    hi_sl = tuple(slice(1, None) for _ in a)
    lower = float(np.min(n0[lo_sl] + t * n1[hi_sl])) if levels > 0 else upper
    u0 = mesh[k]
    z0, z1 = transport_signs(xv, u0, a - u0)
    return KResult(float(t), upper, min(lower, upper), upper, z0, z1, "bruteforce",
                   {"width": upper - lower, "levels": levels})


def bruteforce_values(x, c: Couple, ts, levels: int = 16):
    """Brute-force (lower, upper) for many t from one pair of tables."""
    a = np.abs(_values(x))
    _, n0, n1 = _brute_tables(a, c, levels)
    lo_sl = tuple(slice(0, -1) for _ in a)
    hi_sl = tuple(slice(1, None) for _ in a)
    f0, f1 = n0.ravel(), n1.ravel()
    c0, c1 = n0[lo_sl].ravel(), n1[hi_sl].ravel()
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    up = np.array([np.min(f0 + t * f1) for t in ts])
    lo = np.array([np.min(c0 + t * c1) for t in ts]) if levels > 0 else up
    return np.minimum(lo, up), up


# ---------------------------------------------------------------- Holmstedt


def _holmstedt_parts(c: Couple):
    s0, s1 = c.first, c.second
    ok = (isinstance(s0, WeightedLp) and isinstance(s1, WeightedLp)
          and not c.on_grid)
    if not ok:
        raise ValueError("k_holmstedt needs a couple of weighted L^p spaces")
    w0 = s0.weight_array(c.size)
    w1 = s1.weight_array(c.size)
    if np.ptp(w0) > 1e-14 * w0.max() or np.ptp(w1) > 1e-14 * w1.max():
        raise ValueError("k_holmstedt needs constant weights")
    if not s0.p < s1.p:
        raise DomainError("k_holmstedt needs p < q")
    return s0.p, s1.p, float(w0[0]), float(w1[0])


def holmstedt_values(x, c: Couple, ts):
    p, q, w0, w1 = _holmstedt_parts(c)
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    f = rearrange(_values(x), c.carrier)
    if f.values.size == 0:
        return np.zeros_like(ts)
    s = ts * w1 / w0
    alpha = INF if (q == INF and p == INF) else 1.0 / (1.0 / p - (0.0 if q == INF else 1.0 / q))
    tau = s ** alpha
    fp = type(f)(f.ends, f.values ** p)
    head = np.asarray(primitive_integral(fp, tau)) ** (1.0 / p)
    if q == INF:
        # the L^inf part is absorbed: K ~ (int_0^{t^p} (x*)^p)^{1/p}
        tail = np.zeros_like(ts)
    else:
        fq = type(f)(f.ends, f.values ** q)
        total = float(np.sum(fq.values * fq.lengths))
        tail = np.maximum(total - np.asarray(primitive_integral(fq, tau)), 0.0) ** (1.0 / q)
    return w0 * (head + s * tail)


def k_holmstedt(t: float, x, c: Couple, kappa: float | None = None) -> KResult:
    """Holmstedt-type value for (L^p, L^q), 0 < p < q <= inf, constant weights."""
    _check_t(t)
    kappa = holmstedt_kappa(c) if kappa is None else kappa
    xv = _values(x)
    value = float(holmstedt_values(xv, c, [t])[0])
    a = np.abs(xv)
    order = np.argsort(-a, kind="stable")
    g0, g1 = c.gauges()
    masks = np.zeros((a.size + 1, a.size))
    for m in range(1, a.size + 1):
        masks[m, order[:m]] = 1.0
    costs = np.asarray(g0(masks * a)) + t * np.asarray(g1((1 - masks) * a))
    m = int(np.argmin(costs))
    u0 = masks[m] * a
    cost = float(costs[m])
    upper = max(value, min(kappa * value, cost))
    z0, z1 = transport_signs(xv, u0, a - u0)
    return KResult(float(t), value, value / kappa, upper, z0, z1, "holmstedt",
                   {"kappa": kappa, "cost": cost})


_KAPPA_TABLE: dict[str, float] = {}


def set_holmstedt_kappas(table: dict) -> None:
    _KAPPA_TABLE.clear()
    _KAPPA_TABLE.update({k: float(v) for k, v in table.items()})


def holmstedt_kappa(c: Couple) -> float:
    p, q, _, _ = _holmstedt_parts(c)
    key = f"{_fmt(p)},{_fmt(q)}"
    if key in _KAPPA_TABLE:
        return _KAPPA_TABLE[key]
    return _KAPPA_TABLE.get("*", DEFAULT_HOLMSTEDT_KAPPA)


def _fmt(v):
    return "inf" if v == INF else f"{v:.6g}"


# ---------------------------------------------------------------- routing


def _is_peetre(c: Couple):
    s0, s1 = c.first, c.second
    plain = lambda s, p: isinstance(s, WeightedLp) and s.p == p and s.weights is None
    if c.on_grid:
        return None
    if plain(s0, 1) and plain(s1, INF):
        return 0
    if plain(s0, INF) and plain(s1, 1):
        return 1
    return None


def _is_env(c: Couple):
    return (c.on_grid and isinstance(c.first, HalfLineSup) and isinstance(c.second, HalfLineSup)
            and c.first.exponent == 0 and c.second.exponent == 1)


def _holmstedt_ok(c: Couple):
    try:
        _holmstedt_parts(c)
        return True
    except ValueError:
        return False


def route(c: Couple, n_small: bool = False) -> str:
    """Name of the evaluator the router uses for this couple."""
    if _is_peetre(c) is not None:
        return "peetre"
    if _is_env(c):
        return "concave_env"
    if _sup_side(c) is not None:
        return "truncation"
    g0, g1 = c.gauges()
    if g0.convex and g1.convex:
        return "convex_opt"
    if _holmstedt_ok(c) or _holmstedt_ok(c.swapped()):
        return "holmstedt"
    if c.size <= BRUTE_MAX_N:
        return "bruteforce"
    raise OracleRefusal("no K evaluator applies to this couple at this size")


def k_value(t: float, x, c: Couple, method: str | None = None) -> KResult:
    """K(t, x; c) through the explicit router (or a forced ``method``)."""
    method = method or route(c)
    xv = _values(x)
    if method == "peetre":
        if _is_peetre(c) == 0:
            return k_peetre(t, xv, c.carrier)
        r = k_peetre(1.0 / t, xv, c.carrier)
        return KResult(float(t), t * r.value, t * r.lower, t * r.upper, r.x1, r.x0, "peetre")
    if method == "concave_env":
        return k_concave_env(t, GridFunction(c.carrier, np.abs(xv)) if not isinstance(
            x, GridFunction) else x)
    if method == "truncation":
        return k_truncation(t, xv, c)
    if method == "convex_opt":
        return k_convex_opt(t, xv, c)
    if method == "holmstedt":
        if _holmstedt_ok(c):
            return k_holmstedt(t, xv, c)
        r = k_holmstedt(1.0 / t, xv, c.swapped())
        return KResult(float(t), t * r.value, t * r.lower, t * r.upper, r.x1, r.x0,
                       "holmstedt", r.info)
    if method == "bruteforce":
        return k_bruteforce(t, xv, c)
    raise ValueError(f"unknown method {method!r}")


def k_values(x, c: Couple, ts, method: str | None = None, certify: bool = True):
    """(values, lower, upper) of K at every t in ``ts``; vectorized when possible."""
    method = method or route(c)
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    _check_t(ts)
    xv = _values(x)
    if method == "peetre":
        if _is_peetre(c) == 0:
            v = _peetre_values(xv, c.carrier, ts)[0]
        else:
            v = ts * _peetre_values(xv, c.carrier, 1.0 / ts)[0]
        return v, v, v
    if method == "concave_env":
        env = ConvFunction(c.carrier, concave_majorant_values(c.carrier, xv))
        v = env(ts)
        return v, v, v
    if method == "truncation":
        v = _truncation_values(xv, c, ts)[0]
        return v, v, v
    if method == "holmstedt":
        if _holmstedt_ok(c):
            v, kap = holmstedt_values(xv, c, ts), holmstedt_kappa(c)
        else:
            v, kap = ts * holmstedt_values(xv, c.swapped(), 1.0 / ts), holmstedt_kappa(c.swapped())
        return v, v / kap, v * kap
    if method == "bruteforce":
        lo, up = bruteforce_values(xv, c, ts)
        return up, lo, up
    if method == "convex_opt" and not certify:
        rs = [k_convex_opt(t, xv, c, certify=False) for t in ts]
    else:
        rs = [k_value(t, xv, c, method) for t in ts]
    return (np.array([r.value for r in rs]), np.array([r.lower for r in rs]),
            np.array([r.upper for r in rs]))


def k_profile(x, c: Couple, grid, method: str | None = None) -> ConvFunction:
    """K(., x; c) on ``grid``, regularized by its least concave majorant."""
    grid = np.asarray(grid, dtype=float)
    v = k_values(x, c, grid, method)[0]
    env = concave_majorant_values(grid, np.maximum(v, 0.0))
    PROFILE_AUDIT["profiles"] += 1
    if conv_violations(grid, env):
        PROFILE_AUDIT["violations"] += 1
    return ConvFunction(grid, env)


# ---------------------------------------------------------------- convexification


def convexification_constants(p: float) -> tuple[float, float]:
    """(lower, upper) factors relating K of the 1/p-convexified couple to K^p."""
    return min(2.0 ** (2 * p - 2), 2.0 ** (1 - p)), max(2.0 ** (p - 1), 2.0 ** (1 - p))


def sum_pconvex_bound(p: float) -> float:
    return max(2.0 ** (1 - 1 / p), 2.0 ** (2 / p - 2))


def k_convexified_bounds(t: float, x, c: Couple, p: float, method: str | None = None):
    """Enclosure of K(t, x; c^(1/p)) from K(t^(1/p), x; c)^p.

    The lower factor carries (max_i M_i)^-p with M_i the p-convexity
    constants of the endpoints.
    """
    if not (0 < p <= 1):
        raise ValueError("p must lie in (0, 1]")
    m = couple_convexity(c, p)
    if m is None:
        raise ValueError("couple is not p-convex with a certified constant")
    r = k_value(t ** (1.0 / p), x, c, method)
    lo_c, up_c = convexification_constants(p)
    return lo_c * m ** (-p) * r.lower ** p, up_c * r.upper ** p


def sum_and_intersection_norms(x, c: Couple, method: str | None = None):
    g0, g1 = c.gauges()
    xv = _values(x)
    return k_value(1.0, xv, c, method).value, float(max(g0(xv), g1(xv)))
