"""On trees the observer catches up with the plant exponentially fast.

Two cases:

* the five-pipe tree with data only on the middle pipe, where each pass
  through a degree-3 junction keeps one third of the signal, so the
  difference never vanishes in finite time but shrinks by 1/9 in energy
  per pipe crossing;
* a random tree with four inner nodes and random compatible data.

Run:  python3 demos/tree_synchronization.py
"""

import numpy as np

from netobs.analysis import fit_decay, required_horizon
from netobs.observer import run_observer
from netobs.scenarios import five_pipe_tree, random_tree

sc = five_pipe_tree(t_max=11.0)
orun = run_observer(sc.graph, sc.physics, sc.plant_ic, sc.observer_ic, sc.bc, dt=sc.dt,
                    t_max=sc.t_max)
trace = orun.difference.node_trace(3, 3)
print("five-pipe tree, outgoing value on pipe 3 at node 3:")
for n in range(5):
    k = orun.difference.index_of(n + 0.5)
    print(f"  t in [{n}, {n + 1}):  {trace.plus[k]: .6f}   (-1/3)^{n + 1} = {(-1 / 3) ** (n + 1): .6f}")
fit = fit_decay(orun.times, orun.L, horizon=required_horizon(sc.graph, 1.0))
print(f"  L stays positive: min L = {orun.L.min():.3e}; rate of L = {fit.mu:.4f} "
      f"(ln 9 = {np.log(9):.4f})")

print("\nrandom trees with four inner nodes:")
for lam in (0.0, 0.1):
    for seed in (1, 2, 3):
        sc = random_tree(4, seed=seed, lam=lam)
        orun = run_observer(sc.graph, sc.physics, sc.plant_ic, sc.observer_ic, sc.bc, dt=sc.dt,
                            t_max=sc.t_max)
        mode = "no-friction" if lam == 0 else "friction"
        T = required_horizon(sc.graph, 1.0, mode)
        fit = fit_decay(orun.times, orun.L, horizon=T)
        print(f"  lambda={lam:<4} seed={seed}: T={T:5.2f} rate={fit.mu:.4f} r2={fit.r2:.5f} "
              f"contraction over 2T={fit.c_tilde:.3e}")
