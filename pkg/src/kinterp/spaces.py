"""Quasi-norm descriptors for the couples used throughout the package.

Lattice vectors live on a :class:`MeasureSpace`; half-line specs act on
:class:`GridFunction` node values.  Every spec is compiled into a
:class:`Gauge` for a given carrier, which evaluates the quasi-norm of the
absolute values of a batch of vectors at once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import sparse

from .measure import CarrierError, GridFunction, MeasureSpace, rearrange

INF = math.inf
GL_POINTS = 8


class UnsupportedSpec(ValueError):
    pass


def _check_exponent(p, allow_inf=True):
    if not (p > 0) or (p == INF and not allow_inf):
        raise ValueError(f"exponent must lie in (0, inf{']' if allow_inf else ')'}, got {p}")


@dataclass(frozen=True)
class WeightedLp:
    """L^p(w) on a finite measure space: ``(sum (w_i |x_i|)^p mu_i)^(1/p)``."""

    p: float
    weights: tuple | None = None

    def __post_init__(self):
        _check_exponent(self.p)
        if self.weights is not None:
            w = tuple(float(v) for v in self.weights)
            if any(not (v > 0) or not math.isfinite(v) for v in w):
                raise ValueError("weights must be positive and finite")
            object.__setattr__(self, "weights", w)

    def weight_array(self, n: int) -> np.ndarray:
        if self.weights is None:
            return np.ones(n)
        if len(self.weights) != n:
            raise CarrierError(f"{len(self.weights)} weights on a carrier with {n} atoms")
        return np.array(self.weights)

    @property
    def exponents(self):
        return (self.p,)


@dataclass(frozen=True)
class Lorentz:
    """Lorentz L^{p,q}, evaluated on the nonincreasing rearrangement."""

    p: float
    q: float

    def __post_init__(self):
        _check_exponent(self.p, allow_inf=False)
        _check_exponent(self.q)

    @property
    def exponents(self):
        return (self.p, self.q)


@dataclass(frozen=True)
class HalfLineLp:
    """L^p(t^-theta, dt/t) on (0, inf)."""

    p: float
    theta: float

    def __post_init__(self):
        _check_exponent(self.p)
        if not (0 < self.theta < 1):
            raise ValueError("theta must lie in (0, 1)")

    @property
    def exponents(self):
        return (self.p,)


@dataclass(frozen=True)
class HalfLineSup:
    """L^inf(t^-e) on (0, inf); e = 0 is L^inf and e = 1 is L^inf(1/t)."""

    exponent: float = 0.0

    def __post_init__(self):
        if not (0 <= self.exponent <= 1):
            raise ValueError("sup exponent must lie in [0, 1]")

    @property
    def exponents(self):
        return (INF,)


SpaceSpec = Union[WeightedLp, Lorentz, HalfLineLp, HalfLineSup]
Carrier = Union[MeasureSpace, np.ndarray]
HALF_LINE = (HalfLineLp, HalfLineSup)


def is_half_line(spec) -> bool:
    return isinstance(spec, HALF_LINE)


@dataclass(frozen=True, eq=False)
class Couple:
    first: SpaceSpec
    second: SpaceSpec
    carrier: Carrier

    def __post_init__(self):
        grid = not isinstance(self.carrier, MeasureSpace)
        for s in (self.first, self.second):
            if is_half_line(s) != grid:
                raise CarrierError(f"{type(s).__name__} cannot act on this carrier")
        if grid:
            g = np.array(self.carrier, dtype=float)
            g.setflags(write=False)
            object.__setattr__(self, "carrier", g)
        else:
            for s in (self.first, self.second):
                if isinstance(s, WeightedLp):
                    s.weight_array(self.carrier.n)

    @property
    def on_grid(self) -> bool:
        return not isinstance(self.carrier, MeasureSpace)

    @property
    def size(self) -> int:
        return self.carrier.size if self.on_grid else self.carrier.n

    def swapped(self) -> "Couple":
        return Couple(self.second, self.first, self.carrier)

    def gauges(self):
        return gauge(self.first, self.carrier), gauge(self.second, self.carrier)

    def to_json(self) -> dict:
        carrier = ({"kind": "grid", "grid": self.carrier.tolist()} if self.on_grid
                   else self.carrier.to_json())
        return {"first": spec_to_json(self.first), "second": spec_to_json(self.second),
                "carrier": carrier}


# ---------------------------------------------------------------- gauges


class Gauge:
    """Quasi-norm of ``|x|`` for one spec on one carrier, batched over rows.

    ``kind`` is ``"sup"`` (``max_i c_i |x_i|``), ``"lp"`` (``||A |x| ||_p``
    with a nonnegative matrix ``A``) or ``"lorentz"``.
    """

    def __init__(self, kind, p=INF, c=None, A=None, spec=None, space=None):
        self.kind, self.p, self.c, self.A = kind, p, c, A
        self.spec, self.space = spec, space

    def __call__(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        if self.kind == "sup":
            return np.max(x * self.c, axis=-1)
        if self.kind == "lp":
            flat = x.reshape(-1, x.shape[-1])
            y = (self.A @ flat.T).T
            out = _lp(y, self.p)
            return out.reshape(x.shape[:-1]) if x.ndim > 1 else float(out[0])
        flat = x.reshape(-1, x.shape[-1])
        out = np.array([_lorentz(row, self.spec, self.space) for row in flat])
        return out.reshape(x.shape[:-1]) if x.ndim > 1 else float(out[0])

    @property
    def convex(self) -> bool:
        return self.kind == "sup" or (self.kind == "lp" and self.p >= 1)


def _lp(y, p):
    y = np.maximum(y, 0.0)
    if p == 1:
        return y.sum(axis=-1)
    m = y.max(axis=-1)
    safe = np.where(m > 0, m, 1.0)
    return m * (((y / safe[..., None]) ** p).sum(axis=-1)) ** (1.0 / p)


def _lorentz(x, spec: Lorentz, space: MeasureSpace) -> float:
    f = rearrange(x, space)
    if f.values.size == 0:
        return 0.0
    p, q = spec.p, spec.q
    if q == INF:
        return float(np.max(f.values * f.ends ** (1.0 / p)))
    phi = np.diff(np.concatenate(([0.0], f.ends ** (q / p))))
    m = f.values[0]
    return float(m * (np.sum((f.values / m) ** q * phi)) ** (1.0 / q))


def halfline_matrix(grid, p: float, theta: float) -> sparse.csr_matrix:
    """Quadrature rows turning node values into the L^p(t^-theta, dt/t) norm.

    Each row holds the weight^(1/p) times the interpolation coefficients at one
    Gauss-Legendre node (8 per segment, in log t), plus one closed-form row per
    tail: below the grid ``int (c t^(1-theta))^p dt/t``, above it
    ``f(t_N)^p t_N^(-theta p) / (theta p)``.
    """
    t = np.asarray(grid, dtype=float)
    n = t.size
    xg, wg = np.polynomial.legendre.leggauss(GL_POINTS)
    lo, hi = np.log(t[:-1]), np.log(t[1:])
    half = (hi - lo)[:, None] / 2
    u = (lo[:, None] + hi[:, None]) / 2 + half * xg[None, :]
    w = half * wg[None, :]
    tq = np.exp(u)
    s = (tq - t[:-1, None]) / (t[1:, None] - t[:-1, None])
    scale = w ** (1.0 / p) * tq ** (-theta)
    rows = np.arange((n - 1) * GL_POINTS)
    seg = np.repeat(np.arange(n - 1), GL_POINTS)
    data = np.concatenate(((scale * (1 - s)).ravel(), (scale * s).ravel()))
    r = np.concatenate((rows, rows))
    cidx = np.concatenate((seg, seg + 1))
    below = t[0] ** (-theta) * ((1 - theta) * p) ** (-1.0 / p)
    above = t[-1] ** (-theta) * (theta * p) ** (-1.0 / p)
    m = rows.size
    data = np.concatenate((data, [below, above]))
    r = np.concatenate((r, [m, m + 1]))
    cidx = np.concatenate((cidx, [0, n - 1]))
    return sparse.csr_matrix((data, (r, cidx)), shape=(m + 2, n))


_GAUGE_CACHE: dict = {}


def gauge(spec: SpaceSpec, carrier: Carrier) -> Gauge:
    on_grid = not isinstance(carrier, MeasureSpace)
    if is_half_line(spec) != on_grid:
        raise CarrierError(f"{type(spec).__name__} cannot act on this carrier")
    key = (spec, np.asarray(carrier).tobytes() if on_grid else id(carrier))
    hit = _GAUGE_CACHE.get(key)
    if hit is not None and (on_grid or hit.space is carrier):
        return hit
    if isinstance(spec, WeightedLp):
        w = spec.weight_array(carrier.n)
        if spec.p == INF:
            g = Gauge("sup", c=w, spec=spec, space=carrier)
        else:
            d = w * carrier.weights ** (1.0 / spec.p)
            g = Gauge("lp", spec.p, A=sparse.diags(d).tocsr(), spec=spec, space=carrier)
    elif isinstance(spec, Lorentz):
        g = Gauge("lorentz", spec=spec, space=carrier)
    elif isinstance(spec, HalfLineSup):
        g = Gauge("sup", c=np.asarray(carrier) ** (-spec.exponent), spec=spec)
    elif spec.p == INF:
        g = Gauge("sup", c=np.asarray(carrier) ** (-spec.theta), spec=spec)
    else:
        g = Gauge("lp", spec.p, A=halfline_matrix(carrier, spec.p, spec.theta), spec=spec)
    if len(_GAUGE_CACHE) > 512:
        _GAUGE_CACHE.clear()
    _GAUGE_CACHE[key] = g
    return g


def norm(x, spec: SpaceSpec, carrier: Carrier | None = None) -> float:
    """Quasi-norm of a lattice vector (on ``carrier``) or of a GridFunction.

    Half-line norms integrate the piecewise-linear interpolant over the whole
    half-line, tails included.
    """
    if isinstance(x, GridFunction):
        if carrier is not None and not np.array_equal(np.asarray(carrier), x.grid):
            raise CarrierError("grid function on a different grid")
        return float(gauge(spec, x.grid)(x.values))
    if carrier is None:
        carrier = MeasureSpace.counting(np.asarray(x).size)
    if isinstance(carrier, MeasureSpace):
        carrier.check(x)
    elif np.asarray(x).shape != np.asarray(carrier).shape:
        raise CarrierError("node values do not match the grid")
    return float(gauge(spec, carrier)(x))


# ---------------------------------------------------------------- constants


def quasi_constant(spec: SpaceSpec) -> float:
    """Upper bound C in ||x + y|| <= C (||x|| + ||y||)."""
    if isinstance(spec, HalfLineSup):
        return 1.0
    if isinstance(spec, Lorentz):
        cq = max(1.0, 2.0 ** (1.0 / spec.q - 1.0))
        # q <= p: the q-th power is a Lorentz Lambda functional with concave weight
        return cq if spec.q <= spec.p else 2.0 ** (1.0 / spec.p) * cq
    return 1.0 if spec.p >= 1 else 2.0 ** (1.0 / spec.p - 1.0)


def convexity_constant(spec: SpaceSpec, p: float) -> float | None:
    """Upper bound for the p-convexity constant, or None when not certified."""
    if not p > 0:
        raise ValueError("p must be positive")
    if isinstance(spec, HalfLineSup) or (isinstance(spec, WeightedLp) and spec.p == INF):
        return 1.0
    if isinstance(spec, WeightedLp):
        return 1.0 if spec.p >= p else None
    if isinstance(spec, Lorentz):
        return 1.0 if (p <= spec.q <= spec.p) else None
    if spec.p < p:
        return None
    # interpolation between nodes mixes neighbouring values, which costs
    # 2^(1 - 1/p) once p > 1
    return 1.0 if (p <= 1 or spec.p == INF) else 2.0 ** (1.0 - 1.0 / p)


def couple_convexity(c: Couple, p: float) -> float | None:
    m = [convexity_constant(s, p) for s in (c.first, c.second)]
    return None if None in m else max(m)


def couple_quasi_constant(c: Couple) -> float:
    return max(quasi_constant(c.first), quasi_constant(c.second))


def convexify_spec(spec: SpaceSpec, r: float) -> SpaceSpec:
    """Spec of the r-convexification: ``||x||' = || |x|^r ||^(1/r)``."""
    if not r > 0:
        raise ValueError("r must be positive")
    if isinstance(spec, WeightedLp):
        w = None if spec.weights is None else tuple(v ** (1.0 / r) for v in spec.weights)
        return WeightedLp(spec.p * r, w)
    if isinstance(spec, HalfLineLp):
        if spec.p == INF:
            return HalfLineSup(spec.theta / r)
        return HalfLineLp(spec.p * r, spec.theta / r)
    if isinstance(spec, HalfLineSup):
        return HalfLineSup(spec.exponent / r)
    raise UnsupportedSpec("convexification of Lorentz specs is not supported")


def convexify_couple(c: Couple, r: float) -> Couple:
    return Couple(convexify_spec(c.first, r), convexify_spec(c.second, r), c.carrier)


# ---------------------------------------------------------------- json


def _num(v):
    return "inf" if v == INF else v


def _unnum(v):
    return INF if v in ("inf", "Infinity") else float(v)


def spec_to_json(spec: SpaceSpec) -> dict:
    if isinstance(spec, WeightedLp):
        d = {"kind": "weighted_lp", "p": _num(spec.p)}
        if spec.weights is not None:
            d["weights"] = list(spec.weights)
        return d
    if isinstance(spec, Lorentz):
        return {"kind": "lorentz", "p": spec.p, "q": _num(spec.q)}
    if isinstance(spec, HalfLineLp):
        return {"kind": "halfline_lp", "p": _num(spec.p), "theta": spec.theta}
    return {"kind": "halfline_sup", "exponent": spec.exponent}


def spec_from_json(d: dict) -> SpaceSpec:
    kind = d.get("kind")
    if kind == "weighted_lp":
        return WeightedLp(_unnum(d["p"]), d.get("weights"))
    if kind == "lorentz":
        return Lorentz(_unnum(d["p"]), _unnum(d["q"]))
    if kind == "halfline_lp":
        return HalfLineLp(_unnum(d["p"]), float(d["theta"]))
    if kind == "halfline_sup":
        return HalfLineSup(float(d.get("exponent", 0.0)))
    raise ValueError(f"unknown spec kind {kind!r}")
