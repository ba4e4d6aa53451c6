"""Pointwise-controlled heat equation on (0, pi), truncated to J modes.

Shows the N(inf) = 0 collapse, the growth of N(T) as T shrinks, and how
the classifier places (T, y0) and (M, y0) pairs once boundary data is
fixed by those facts. Run with ``python3 demos/heat_truncation.py``.
"""

import math

import numpy as np

from linfcontrol import (
    BoundaryData,
    NormProblem,
    classify_norm_pair,
    classify_time_pair,
    heat_point_control,
    minimal_norm,
    norm_at_infinity,
    t0_blowup_profile,
    truncate,
)

x0 = math.pi * (math.sqrt(2) - 1)
y0 = np.array([1.0, -0.5, 0.25, 0.0, 0.1, 0.0])

for J in (2, 4, 6):
    model = heat_point_control(x0, J)
    sys = truncate(model)
    lim = norm_at_infinity(sys, y0[:J])
    print(f"J={J}: N(inf) = {lim.value}, ladder tail {lim.ladder[-1][1]:.2e} at T={lim.ladder[-1][0]:g}")

model = heat_point_control(x0, 6)
print("\nshort-horizon growth (evidence only; the truncation always has T0 = 0)")
for T, v in t0_blowup_profile(model, y0, [1.0, 0.5, 0.25, 0.125]):
    print(f"  T={T:6.3f}  N={v:.4e}")

# N(inf) = 0 and N(T0) > 0 leave no room for the critical cells
bd = BoundaryData(0.0, math.inf, math.inf, 0.0)
sys = truncate(model)
for T in (0.25, 1.0, 4.0):
    lab = classify_norm_pair(bd, T)
    sol = minimal_norm(NormProblem(sys, y0, T))
    print(f"T={T:4.2f}: {lab.cell} {lab.prediction.value:32s} bb_fraction {sol.bb_fraction:.4f}")
for M in (0.01, 1.0, 100.0):
    lab = classify_time_pair(bd, M)
    print(f"M={M:6.2f}: {lab.cell} {lab.prediction.value}")
