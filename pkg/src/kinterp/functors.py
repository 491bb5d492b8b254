"""K-method norms with half-line parameters and the equivalence checks built on them."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kfunctional import OracleRefusal, k_profile, k_value, k_values, route
from .measure import ConvFunction, GridFunction, MeasureSpace, default_grid
from .spaces import (INF, Couple, HalfLineLp, HalfLineSup, WeightedLp, gauge,
                     is_half_line, norm, quasi_constant)


@dataclass
class CheckReport:
    check: str
    params: dict
    n: int
    min_ratio: float
    max_ratio: float
    worst_seed: int | None = None
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"check": self.check, "params": self.params, "n": self.n,
                "min_ratio": self.min_ratio, "max_ratio": self.max_ratio,
                "worst_seed": self.worst_seed}


def _param(E):
    if not is_half_line(E):
        raise ValueError("parameters must be half-line specs")
    return E


def lions_peetre_norm(x, c: Couple, theta: float, p: float, grid=None) -> float:
    """||t^-theta K(t, x; c)||_{L^p(dt/t)}, tails included."""
    return k_method_norm(x, c, HalfLineLp(p, theta), grid)


def k_method_norm(x, c: Couple, E, grid=None) -> float:
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    return norm(k_profile(x, c, grid), _param(E))


def profile_norm(f: GridFunction, E) -> float:
    """Parameter norm of an already computed profile."""
    return norm(f, _param(E))


# ---------------------------------------------------------------- parameter sums


def crossover_split(f: GridFunction, cut: float = 1.0):
    """f = f chi_(0,cut] + f chi_(cut,inf) on the nodes."""
    low = np.where(f.grid <= cut, f.values, 0.0)
    return low, f.values - low


def param_sum_check(f: GridFunction, E2, E3) -> dict:
    """Norm of f in E2 + E3 computed as K(1, f; E2, E3) and by the crossover split."""
    grid = f.grid
    pc = Couple(_param(E2), _param(E3), grid)
    direct = k_value(1.0, f.values, pc)
    low, high = crossover_split(f)
    split = float(gauge(E2, grid)(low) + gauge(E3, grid)(high))
    if direct.upper == 0:
        ratio = 1.0 if split == 0 else INF
    else:
        ratio = split / direct.upper
    return {"direct": direct.value, "direct_lower": direct.lower, "direct_upper": direct.upper,
            "split": split, "ratio": ratio, "method": direct.method}


# ---------------------------------------------------------------- reiteration


def batched_peetre(U, space: MeasureSpace, ts) -> np.ndarray:
    """K(t, u; L^1, L^inf) for every row u of U and every t; shape (rows, len(ts))."""
    U = np.abs(np.atleast_2d(np.asarray(U, dtype=float)))
    order = np.argsort(-U, axis=1, kind="stable")
    us = np.take_along_axis(U, order, axis=1)
    mu = space.weights[order]
    starts = np.cumsum(mu, axis=1) - mu
    ts = np.asarray(ts, dtype=float)
    cov = np.clip(ts[None, :, None] - starts[:, None, :], 0.0, mu[:, None, :])
    return np.einsum("ptn,pn->pt", cov, us)


def _is_plain_peetre(c: Couple) -> bool:
    return route(c) == "peetre" and c.first == WeightedLp(1)


def functor_couple_table(x, c: Couple, E0, E1, grid, levels: int = 8):
    """Brute-force tables of the functor-couple norms over the grid {0, |x_i|/L, ..., |x_i|}.

    The functor norms are ||K(., u; c)||_{E_i}; both tables are indexed by
    the same lattice points so cell lower bounds follow from monotonicity.
    """
    if not _is_plain_peetre(c):
        raise OracleRefusal("functor-couple tables need the (L^1, L^inf) base couple")
    a = np.abs(np.asarray(x, dtype=float))
    n = a.size
    if n > 5 or (levels + 1) ** n > 200_000:
        raise OracleRefusal("functor-couple table too large")
    steps = np.linspace(0.0, 1.0, levels + 1)
    mesh = np.stack(np.meshgrid(*[steps * ai for ai in a], indexing="ij"), -1).reshape(-1, n)
    k0 = batched_peetre(mesh, c.carrier, grid)
    k1 = batched_peetre(a - mesh, c.carrier, grid)
    shape = (levels + 1,) * n
    n0 = np.asarray(gauge(E0, grid)(k0)).reshape(shape)
    n1 = np.asarray(gauge(E1, grid)(k1)).reshape(shape)
    return n0, n1


def reiteration_check(x, c: Couple, E0, E1, grid, levels: int = 8) -> dict:
    """Ratios K(t, x; X_E0, X_E1) / K(t, K(., x; c); E0, E1) over the grid.

    The left side minimizes over a product grid of decompositions of |x|;
    the right side is an exact parameter-level K-functional.
    """
    grid = np.asarray(grid, dtype=float)
    n0, n1 = functor_couple_table(x, c, E0, E1, grid, levels)
    f0, f1 = n0.ravel(), n1.ravel()
    lo_sl = tuple(slice(0, -1) for _ in range(n0.ndim))
    hi_sl = tuple(slice(1, None) for _ in range(n0.ndim))
    c0, c1 = n0[lo_sl].ravel(), n1[hi_sl].ravel()
    left = np.array([np.min(f0 + t * f1) for t in grid])
    left_lo = np.array([np.min(c0 + t * c1) for t in grid])
    kx = k_profile(x, c, grid)
    pc = Couple(_param(E0), _param(E1), grid)
    right = k_values(kx.values, pc, grid)[0]
    ok = right > 0
    ratio = left[ok] / right[ok]
    return {"min_ratio": float(ratio.min()), "max_ratio": float(ratio.max()),
            "min_ratio_lower": float((left_lo[ok] / right[ok]).min())}


# ---------------------------------------------------------------- mutual closedness


@dataclass(frozen=True, eq=False)
class FunctorCouple:
    """Couple (X_E0, X_E1) of K-method spaces over a base couple.

    Its K-functional is taken at parameter level: K(t, x) ~ K(t, k_x; E0, E1).
    """

    base: Couple
    E0: object
    E1: object
    grid: np.ndarray

    def endpoint_norms(self, x):
        kx = k_profile(x, self.base, self.grid)
        return norm(kx, self.E0), norm(kx, self.E1), kx

    def k_values(self, x, ts):
        kx = k_profile(x, self.base, self.grid)
        pc = Couple(self.E0, self.E1, self.grid)
        return k_values(kx.values, pc, ts)[0]


def mutual_closed_constants(x, c, t_lo: float = 1e-6, t_hi: float = 1e6):
    """(||x||_0 / sup K, ||x||_1 / sup K/t) using concavity of K in t.

    K is nondecreasing, so its sup over [t_lo, t_hi] sits at t_hi; K/t is
    nonincreasing, so its sup sits at t_lo.
    """
    ts = np.array([t_lo, t_hi])
    if isinstance(c, FunctorCouple):
        n0, n1, _ = c.endpoint_norms(x)
        kv = c.k_values(x, ts)
    else:
        g0, g1 = c.gauges()
        n0, n1 = float(g0(x)), float(g1(x))
        kv = k_values(x, c, ts)[0]
    s0, s1 = kv[1], kv[0] / t_lo
    r0 = n0 / s0 if s0 > 0 else (1.0 if n0 == 0 else INF)
    r1 = n1 / s1 if s1 > 0 else (1.0 if n1 == 0 else INF)
    return float(r0), float(r1)


def mutual_closed_check(c, samples) -> CheckReport:
    """Worst measured endpoint-equivalence constants over the sampled vectors."""
    worst, worst_seed, lo = 1.0, None, INF
    rows = []
    for seed, x in samples:
        r0, r1 = mutual_closed_constants(x, c)
        rows.append((r0, r1))
        m = max(r0, r1)
        lo = min(lo, r0, r1)
        if m > worst or worst_seed is None:
            worst, worst_seed = max(worst, m), seed
    return CheckReport("mutual-closed", {}, len(rows), float(lo if rows else 1.0),
                       float(worst), worst_seed, {"rows": rows})
