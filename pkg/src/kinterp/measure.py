"""Finite measure spaces, rearrangements and functions on the half-line.

Functions on ``(0, inf)`` are stored as node values on a log-spaced grid.
Between nodes they are linear in ``t``; below the first node they continue
linearly through the origin and above the last node they are constant.
These are the smallest extensions that keep a concave nondecreasing node
sequence concave and nondecreasing on the whole half-line.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CONCAVITY_RTOL = 1e-10


class CarrierError(ValueError):
    """Raised when a vector does not live on the given carrier."""


class DomainError(ValueError):
    """Raised when an argument is outside the domain of an operation."""


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MeasureSpace:
    """Finite atomic measure space given by the measures of its atoms."""

    weights: np.ndarray

    def __post_init__(self):
        w = _frozen(self.weights)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("a measure space needs at least one atom")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("atom measures must be positive and finite")
        object.__setattr__(self, "weights", w)

    @classmethod
    def counting(cls, n: int) -> "MeasureSpace":
        return cls(np.ones(n))

    @property
    def n(self) -> int:
        return self.weights.size

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise CarrierError(f"vector of shape {x.shape} on a carrier with {self.n} atoms")
        return x

    def to_json(self) -> dict:
        return {"kind": "measure", "weights": self.weights.tolist()}


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Nonincreasing step function: value ``values[j]`` on ``(ends[j-1], ends[j]]``.

    The function vanishes beyond ``ends[-1]``; an empty step function is zero.
    """

    ends: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        s, y = _frozen(self.ends), _frozen(self.values)
        if s.shape != y.shape or s.ndim != 1:
            raise ValueError("ends and values must be aligned 1-d arrays")
        if s.size:
            if s[0] <= 0 or np.any(np.diff(s) <= 0):
                raise ValueError("breakpoints must be positive and strictly increasing")
            if np.any(y < 0) or np.any(np.diff(y) > 0):
                raise ValueError("step values must be nonnegative and nonincreasing")
        object.__setattr__(self, "ends", s)
        object.__setattr__(self, "values", y)

    @property
    def starts(self) -> np.ndarray:
        return np.concatenate(([0.0], self.ends[:-1]))

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(np.concatenate(([0.0], self.ends)))

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        idx = np.searchsorted(self.ends, u, side="left")
        vals = np.concatenate((self.values, [0.0]))
        return vals[np.minimum(idx, self.values.size)]

    def distribution(self, s: float) -> float:
        """Total length where the function exceeds ``s``."""
        return float(self.lengths[self.values > s].sum())

    def to_json(self) -> dict:
        return {"grid": self.ends.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_json(cls, d: dict) -> "StepFunction":
        return cls(d["grid"], d["values"])


def rearrange(x, space: MeasureSpace) -> StepFunction:
    """Nonincreasing rearrangement of ``|x|`` over a finite atomic measure space.

    Atoms with equal absolute value are merged and zero atoms dropped.
    """
    a = np.abs(space.check(x))
    order = np.argsort(-a, kind="stable")
    a, mu = a[order], space.weights[order]
    keep = a > 0
    a, mu = a[keep], mu[keep]
    if a.size == 0:
        return StepFunction([], [])
    new = np.concatenate(([True], a[1:] != a[:-1]))
    ends = np.cumsum(mu)
    last = np.concatenate((np.flatnonzero(new)[1:] - 1, [a.size - 1]))
    return StepFunction(ends[last], a[new])


def primitive_integral(f: StepFunction, t):
    """Exact value of ``int_0^t f(s) ds`` for a step function; vectorized in ``t``."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0):
        raise DomainError("primitive_integral needs t > 0")
    if f.values.size == 0:
        return np.zeros_like(t_arr) if t_arr.ndim else 0.0
    s0 = f.starts
    covered = np.clip(t_arr[..., None] - s0, 0.0, f.lengths)
    out = covered @ f.values
    return out if t_arr.ndim else float(out)


def log_grid(lo: float = 1e-6, hi: float = 1e6, points: int = 201) -> np.ndarray:
    if not (0 < lo < hi) or points < 2:
        raise ValueError("grid needs 0 < lo < hi and at least two points")
    return np.logspace(np.log10(lo), np.log10(hi), points)


def default_grid() -> np.ndarray:
    return log_grid(1e-6, 1e6, 201)


def parse_grid(spec: str) -> np.ndarray:
    """Parse ``lo:hi:points``."""
    lo, hi, pts = spec.split(":")
    return log_grid(float(lo), float(hi), int(pts))


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Nonnegative function on (0, inf) sampled on a grid, with fixed tail rules."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g, v = _frozen(self.grid), _frozen(self.values)
        if g.ndim != 1 or g.size < 2 or g.shape != v.shape:
            raise ValueError("grid and values must be aligned with at least two nodes")
        if g[0] <= 0 or np.any(np.diff(g) <= 0):
            raise ValueError("grid must be positive and strictly increasing")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("grid function values must be finite and nonnegative")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        g, v = self.grid, self.values
        inner = np.interp(t, g, v)
        return np.where(t < g[0], v[0] * t / g[0], inner)

    def scaled(self, lam: float):
        return type(self)(self.grid, lam * self.values)

    def to_json(self) -> dict:
        return {"grid": self.grid.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_json(cls, d: dict):
        return cls(d["grid"], d["values"])


def conv_violations(grid, values, rtol: float = CONCAVITY_RTOL) -> list[str]:
    """List the Conv-cone invariants that a sampled function breaks."""
    t = np.asarray(grid, dtype=float)
    f = np.asarray(values, dtype=float)
    scale = max(float(np.max(np.abs(f))), np.finfo(float).tiny)
    tol = rtol * scale
    out = []
    if np.any(f < -tol):
        out.append("negative value")
    if np.any(np.diff(f) < -tol):
        out.append("not nondecreasing")
    ratio = f / t
    if np.any(np.diff(ratio) > rtol * np.maximum(np.abs(ratio[:-1]), scale / t[-1])):
        out.append("f(t)/t not nonincreasing")
    slopes = np.diff(f) / np.diff(t)
    # slope tolerance is relative to the secant scale of each interval
    slope_tol = rtol * np.maximum(np.abs(slopes[:-1]), scale / t[1:-1])
    if np.any(np.diff(slopes) > slope_tol):
        out.append("not concave")
    bound = np.maximum(1.0, t[:, None] / t[None, :]) * f[None, :]
    if np.any(f[:, None] > bound * (1 + rtol) + tol):
        out.append("pair test f(t) <= max(1, t/s) f(s) fails")
    return out


class ConvFunction(GridFunction):
    """Grid function whose node values satisfy the Conv-cone invariants."""

    def __post_init__(self):
        super().__post_init__()
        bad = conv_violations(self.grid, self.values)
        if bad:
            raise ValueError("not a Conv function: " + ", ".join(bad))

    def sigma_norm(self) -> float:
        """Norm in L^inf + L^inf(1/t), which equals f(1) on the cone."""
        return float(self(1.0))


def _upper_hull(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Indices of the upper convex hull of points sorted by strictly increasing x."""
    hull: list[int] = []
    for i in range(x.size):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b when it lies on or below the chord a -> i
            if (y[b] - y[a]) * (x[i] - x[a]) <= (y[i] - y[a]) * (x[b] - x[a]):
                hull.pop()
            else:
                break
        hull.append(i)
    return np.asarray(hull)


def concave_majorant_values(grid, values) -> np.ndarray:
    """Least concave nondecreasing majorant through the origin, at the nodes."""
    t = np.concatenate(([0.0], np.asarray(grid, dtype=float)))
    g = np.concatenate(([0.0], np.abs(np.asarray(values, dtype=float))))
    h = _upper_hull(t, g)
    env = np.interp(t[1:], t[h], g[h])
    env = np.maximum.accumulate(env)
    return np.maximum(env, g[1:])


def least_concave_majorant(g: GridFunction) -> ConvFunction:
    return ConvFunction(g.grid, concave_majorant_values(g.grid, g.values))
