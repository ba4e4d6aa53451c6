"""Double integrator: minimal norm versus horizon, minimal time, and an oracle bracket.

Run with ``python3 demos/double_integrator.py``.
"""

import numpy as np

from linfcontrol import (
    NormProblem,
    TimeProblem,
    double_integrator,
    minimal_norm,
    minimal_time,
    norm_at_infinity,
)
from linfcontrol.oracle import oracle_bracket

sys = double_integrator()
y0 = np.array([1.0, 0.0])

# N(T) falls like 4/T^2 for a state at rest
print("    T          N(T)     T^2 N / 4   bb_fraction")
for T in (0.5, 1.0, 2.0, 4.0, 8.0):
    sol = minimal_norm(NormProblem(sys, y0, T))
    print(f"{T:5.1f}  {sol.value:12.6f}  {T * T * sol.value / 4:10.6f}  {sol.bb_fraction:10.4f}")

lim = norm_at_infinity(sys, y0)
print(f"\nN(inf) = {lim.value}  (every bound M > 0 is admissible)")

# the time-optimal control accelerates, then brakes: one switch
sol = minimal_time(TimeProblem(sys, y0, 1.0))
u = sol.control.values[:, 0]
switch = int(np.flatnonzero(np.sign(u[1:]) != np.sign(u[:-1]))[0])
print(f"T(M=1) = {sol.value:.6f}, switch near t = {sol.control.grid.nodes[switch + 1]:.4f}")

br = oracle_bracket(NormProblem(sys, y0, 2.0))
print(f"oracle bracket at T=2: [{br.lower:.6f}, {br.upper:.6f}], relative gap {br.rel_gap:.1e}")
