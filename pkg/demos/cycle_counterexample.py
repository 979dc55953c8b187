"""A network with a cycle that boundary measurements cannot observe.

Put +a on the forward family and -a on the backward family of every
cycle edge and zero everywhere else.  The junction map sends this state
to itself, so nothing ever reaches a boundary node: the boundary traces
stay zero while the state keeps its full energy (or, with friction,
decays only at the friction rate).

Run:  python3 demos/cycle_counterexample.py
"""

import math

from netobs.analysis import check_observability, fit_decay
from netobs.scenarios import cycle_counterexample
from netobs.solver import run

# Without friction the state is a constant solution.
sc = cycle_counterexample(a=1.0, lam=0.0, t_max=20.0)
res = run(sc.graph, sc.physics, sc.plant_ic, dt=sc.dt, t_max=sc.t_max)
print(f"no friction: L(0) = {res.L[0]:.6f}, L({res.t_max:g}) = {res.L[-1]:.6f}")

rep = check_observability(res, t=8.0)
print(f"network norm at t=8: {rep.lhs:.3f}; boundary trace energy on [4, 12]: {rep.rhs:.3f}")
print(f"ratio: {rep.ratio}  (no finite constant can work)")

# Linear friction only damps the state at the friction rate.
lam = 0.5
sc = cycle_counterexample(a=1.0, lam=lam, t_max=5.0)
res = run(sc.graph, sc.physics, sc.plant_ic, dt=sc.dt, t_max=sc.t_max)
fit = fit_decay(res.times, res.L)
print(f"\nwith lambda={lam}: rate of L = {fit.mu:.5f}, rate of the field = {fit.field_rate:.5f}"
      f" (expected {2 * lam:g})")
k = res.index_of(2.0)
j = [s.edge for s in res.sides].index(1)
print(f"field at t=2 on the cycle: {res.side_plus[k, j]:.6f}"
      f" vs a*exp(-2*lambda*t) = {math.exp(-2 * lam * 2.0):.6f}")
