"""K-orbit norms, two-part K-divisibility and additive-orbit splits."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kfunctional import OracleRefusal, k_profile, k_value, k_values, route
from .measure import (ConvFunction, DomainError, GridFunction, concave_majorant_values)
from .spaces import (INF, Couple, HalfLineLp, HalfLineSup, WeightedLp, convexify_couple,
                     couple_quasi_constant, gauge)

DEFAULT_GAMMA_TARGET = 2.0
DEFAULT_C_TARGET = 4.0
SPLIT_SCAN_POINTS = 16


class SplitFailure(RuntimeError):
    """No finite-constant split was found on the scan grid."""


@dataclass
class OrbitCertificate:
    parts: list
    constants: list
    crossover: float
    scanned: bool
    info: dict = field(default_factory=dict)

    @property
    def gamma(self) -> float:
        return float(max(self.constants)) if self.constants else 0.0

    def to_json(self) -> dict:
        return {"parts": [np.asarray(p).tolist() for p in self.parts],
                "constants": [float(v) for v in self.constants],
                "crossover": float(self.crossover), "scanned": bool(self.scanned)}


def _vals(x):
    return np.asarray(x.values if isinstance(x, GridFunction) else x, dtype=float)


def ratio_sup(num, den) -> float:
    """max num/den over nodes with 0/0 read as 0 and a/0 as infinity."""
    num, den = np.asarray(num, float), np.asarray(den, float)
    pos = den > 0
    if np.any(num[~pos] > 0):
        return INF
    return float(np.max(num[pos] / den[pos])) if pos.any() else 0.0


def orbit_norm(y, x, c: Couple, grid) -> float:
    """sup_t K(t, y) / K(t, x) over the nodes.

    Under the tail rules both profiles are linear through the origin below the
    grid and constant above it, so the tail ratios equal the end-node ratios.
    """
    grid = np.asarray(grid, dtype=float)
    kx = k_profile(x, c, grid)
    if not np.any(kx.values > 0):
        raise DomainError("orbit norm needs x != 0")
    ky = k_profile(y, c, grid)
    return ratio_sup(ky.values, kx.values)


def profile_orbit_norm(ky, kx) -> float:
    return ratio_sup(_vals(ky), _vals(kx))


# ---------------------------------------------------------------- two-part division


def crossover_index(f2, f3) -> int:
    """First node where f2 >= f3; the last node when f2 never catches up."""
    d = _vals(f2) - _vals(f3)
    hit = np.flatnonzero(d >= 0)
    return int(hit[0]) if hit.size else d.size - 1


def _gammas(parts, c, grid, fs):
    out = []
    for part, f in zip(parts, fs):
        if not np.any(np.asarray(part) != 0):
            out.append(0.0)
            continue
        out.append(ratio_sup(k_profile(part, c, grid).values, _vals(f)))
    return out


def _divide_at(x, c, grid, fs, t0):
    r = k_value(float(t0), x, c)
    best = None
    for parts in ((r.x0, r.x1), (r.x1, r.x0)):
        gam = _gammas(parts, c, grid, fs)
        if best is None or max(gam) < max(best[1]):
            best = ([np.asarray(p, dtype=float) for p in parts], gam)
    return best


def two_part_divide(x, c: Couple, f2, f3, grid=None, target: float = DEFAULT_GAMMA_TARGET,
                    check: bool = True) -> OrbitCertificate:
    """Split x = x2 + x3 with K(t, x_i) <= gamma f_i(t) on the grid.

    The split is a near-optimal K-decomposition at the crossover of f2 and f3
    in the better of its two orientations; if gamma exceeds ``target`` the
    split point is scanned over the whole grid for the minimax gamma.
    """
    grid = np.asarray(f2.grid if grid is None else grid, dtype=float)
    xv = _vals(x)
    v2, v3 = _vals(f2), _vals(f3)
    kx = k_profile(xv, c, grid)
    if check:
        cq = couple_quasi_constant(c)
        bad = np.flatnonzero(kx.values > cq * (v2 + v3) * (1 + 1e-9) + 1e-300)
        if bad.size:
            raise ValueError(f"profile not dominated by f2 + f3 at t = {grid[bad[0]]:.6g}")
    zero = np.zeros_like(xv)
    if not np.any(v3 > 0) or not np.any(v2 > 0):
        keep2 = np.any(v2 > 0)
        parts = [xv.copy(), zero] if keep2 else [zero, xv.copy()]
        gam = _gammas(parts, c, grid, (f2, f3))
        return OrbitCertificate(parts, gam, float(grid[-1] if keep2 else grid[0]), False)
    k0 = crossover_index(v2, v3)
    parts, gam = _divide_at(xv, c, grid, (f2, f3), grid[k0])
    t0, scanned = float(grid[k0]), False
    if max(gam) > target:
        scanned = True
        for t in grid:
            p, g = _divide_at(xv, c, grid, (f2, f3), t)
            if max(g) < max(gam):
                parts, gam, t0 = p, g, float(t)
    parts[1] = xv - parts[0]
    return OrbitCertificate(parts, gam, t0, scanned)


def verify_certificate(cert: OrbitCertificate, x, c: Couple, fs, grid, rtol=1e-9) -> bool:
    """Parts sum to x and the stored constants are reproduced."""
    xv = _vals(x)
    total = np.sum(cert.parts, axis=0)
    scale = max(float(np.max(np.abs(xv))), 1e-300)
    if np.max(np.abs(total - xv)) > 1e-12 * scale:
        return False
    gam = _gammas(cert.parts, c, np.asarray(grid, float), fs)
    return all(abs(a - b) <= rtol * max(1.0, abs(b)) for a, b in zip(gam, cert.constants))


# ---------------------------------------------------------------- additive split


def parameter_pair(theta, p, eta, q):
    if not 0 < theta < eta < 1:
        raise DomainError("need 0 < theta < eta < 1")
    return HalfLineLp(p, theta), HalfLineLp(q, eta)


def parameter_k(f, grid, E0, E1):
    """K(t, f; E0, E1) at every node for a profile f; both sides on one grid."""
    return k_values(_vals(f), Couple(E0, E1, grid), grid)[0]


def parameter_k_estimate(f, grid, E2, E3, ts):
    """K(t, f; E2, E3) at ``ts``: exact or convex where possible, else via convexification.

    When both exponents are finite and one is below 1 the couple is r-convexified
    with r = 1/min(p, q); K(s, f; E2, E3) is then estimated by
    K(s^p', f^p'; E2^(r), E3^(r))^(1/p') with p' = 1/r, which is accurate up to
    the convexification constants.  Used for normalization only.
    """
    f = np.maximum(_vals(f), 0.0)
    c = Couple(E2, E3, grid)
    try:
        method = route(c)
    except OracleRefusal:
        method = None
    if method not in (None, "bruteforce"):
        return k_values(f, c, ts, certify=False)[0]
    pp = min(E2.p, E3.p)
    cc = convexify_couple(c, 1.0 / pp)
    return k_values(f ** pp, cc, np.asarray(ts) ** pp, certify=False)[0] ** (1.0 / pp)


def param_orbit_estimate(ky, kx, grid, E2, E3, ts=None, stride: int = 2) -> float:
    """Orbit norm of profile ky over kx in the parameter couple (E2, E3), estimated.

    Profiles are subsampled by ``stride`` and the sup is taken over ``ts``.
    """
    grid = np.asarray(grid, dtype=float)
    sub = grid[::stride]
    ts = np.logspace(np.log10(grid[0]), np.log10(grid[-1]), 7) if ts is None else ts
    num = parameter_k_estimate(_vals(ky)[::stride], sub, E2, E3, ts)
    den = parameter_k_estimate(_vals(kx)[::stride], sub, E2, E3, ts)
    return ratio_sup(num, den)


def _balance_index(k, grid, E2, E3) -> int:
    """Smallest cut index with E2 mass below >= E3 mass above (bisection)."""
    g2, g3 = gauge(E2, grid), gauge(E3, grid)

    def diff(i):
        low = np.where(np.arange(grid.size) <= i, k, 0.0)
        return g2(low) - g3(k - low)

    lo, hi = 0, grid.size - 1
    if diff(lo) >= 0:
        return lo
    if diff(hi) < 0:
        return hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if diff(mid) >= 0:
            hi = mid
        else:
            lo = mid
    return hi


def cut_pieces(k, grid, i):
    """Conv regularizations of k restricted to nodes <= i and > i."""
    idx = np.arange(grid.size)
    low = np.where(idx <= i, k, 0.0)
    high = k - low
    return (ConvFunction(grid, concave_majorant_values(grid, low)),
            ConvFunction(grid, concave_majorant_values(grid, high)))


def additive_orbit_split(y, x, c: Couple, theta, p, eta, q, grid,
                         target: float = DEFAULT_C_TARGET) -> OrbitCertificate:
    """Split y = y3 + y2 for the mixed couples built from (X_{theta,p}, X_{eta,q}).

    y2 is certified against x in (X_{theta,p}, X_1) and y3 in (X_0, X_{eta,q}),
    both at parameter level: K against (E2, L^inf(1/t)) and (L^inf, E3).
    """
    grid = np.asarray(grid, dtype=float)
    E2, E3 = parameter_pair(theta, p, eta, q)
    yv = _vals(y)
    kx = k_profile(x, c, grid)
    if not np.any(kx.values > 0):
        raise DomainError("orbit norms need x != 0")
    if not np.any(yv != 0):
        z = np.zeros_like(yv)
        return OrbitCertificate([z, z.copy()], [0.0, 0.0], float(grid[0]), False)
    ky = k_profile(yv, c, grid)
    low_sup, high_sup = HalfLineSup(0.0), HalfLineSup(1.0)
    kx2 = parameter_k(kx, grid, E2, high_sup)
    kx3 = parameter_k(kx, grid, low_sup, E3)

    def attempt(i):
        f2, f3 = cut_pieces(ky.values, grid, i)
        cert = two_part_divide(yv, c, f2, f3, grid, check=False)
        y2, y3 = cert.parts
        k2 = k_profile(y2, c, grid)
        k3 = k_profile(y3, c, grid)
        c2 = ratio_sup(parameter_k(k2, grid, E2, high_sup), kx2)
        c3 = ratio_sup(parameter_k(k3, grid, low_sup, E3), kx3)
        return [y3, y2], [c3, c2], cert.gamma

    i0 = _balance_index(ky.values, grid, E2, E3)
    parts, consts, gam = attempt(i0)
    best_i, scanned = i0, False
    if max(consts) > target:
        scanned = True
        for i in np.unique(np.linspace(0, grid.size - 1, SPLIT_SCAN_POINTS).astype(int)):
            pa, co, ga = attempt(int(i))
            if max(co) < max(consts):
                parts, consts, gam, best_i = pa, co, ga, int(i)
    if not np.isfinite(max(consts)):
        raise SplitFailure("no finite-constant split on the scan grid")
    parts[0] = yv - parts[1]
    return OrbitCertificate(parts, consts, float(grid[best_i]), scanned, {"gamma": gam})


# ---------------------------------------------------------------- l^p identity


def lp_orbit_identity_check(x, y, s=0.5, p=1.0, q=2.0, r=INF, grid=None,
                            normalize: bool = True) -> dict:
    """Orbit-level check of Int(l^p, l^q) = Int(l^s, l^q) cap Int(l^p, l^r).

    Forward: the (l^s, l^q) and (l^p, l^r) orbit norms of y over x.
    Backward: an additive split in the couple (l^s, l^r) with l^p and l^q
    realized as the (theta, p) and (eta, q) spaces.
    """
    from .spaces import MeasureSpace
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    sp = MeasureSpace.counting(n)
    grid = np.logspace(-3, 3, 25) if grid is None else np.asarray(grid, dtype=float)
    inner = Couple(WeightedLp(p), WeightedLp(q), sp)
    base = orbit_norm(y, x, inner, grid)
    if normalize and base > 0:
        y = y / base
        base = 1.0
    fwd_a = orbit_norm(y, x, Couple(WeightedLp(s), WeightedLp(q), sp), grid)
    fwd_b = orbit_norm(y, x, Couple(WeightedLp(p), WeightedLp(r), sp), grid)
    outer = Couple(WeightedLp(s), WeightedLp(r), sp)
    theta = 1 - s / p if r == INF else (1 / s - 1 / p) / (1 / s - 1 / r)
    eta = 1 - s / q if r == INF else (1 / s - 1 / q) / (1 / s - 1 / r)
    sgrid = np.logspace(-3, 3, 61)
    cert = additive_orbit_split(y, x, outer, theta, p, eta, q, sgrid)
    return {"inner": base, "forward": [fwd_a, fwd_b], "backward": list(cert.constants),
            "theta": theta, "eta": eta, "y": y, "certificate": cert}
