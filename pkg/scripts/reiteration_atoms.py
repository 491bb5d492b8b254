"""Reiteration ratios for a single atom over a sweep of (theta0, theta1) pairs.

A single atom has K(t, e; l^1, l^inf) = min(t, 1), so both sides of the
reiteration comparison are computed from closed-form profiles; the table shows
how far the measured constant drifts from 1 as the parameters approach the ends.
"""
import numpy as np

from kinterp.functors import reiteration_check
from kinterp.kfunctional import peetre_couple
from kinterp.measure import MeasureSpace, log_grid
from kinterp.spaces import INF, HalfLineLp

if __name__ == "__main__":
    grid = log_grid(1e-3, 1e3, 31)
    c = peetre_couple(MeasureSpace.counting(1))
    print(f"{'th0':>5} {'th1':>5} {'p':>4}  {'min':>7} {'max':>7}")
    for th0, th1 in [(0.25, 0.75), (0.1, 0.5), (0.3, 0.95), (0.05, 0.95)]:
        for p in (1.0, 2.0, INF):
            r = reiteration_check([1.0], c, HalfLineLp(p, th0), HalfLineLp(p, th1), grid,
                                  levels=64)
            print(f"{th0:5.2f} {th1:5.2f} {p:4g}  {r['min_ratio']:7.4f} {r['max_ratio']:7.4f}")
