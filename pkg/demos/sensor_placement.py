"""Interior sensors turn a cyclic network into an observable one.

Each independent cycle needs one interior measurement.  The observer is
simulated on the network cut open at the sensors; the two new end nodes
are driven by the plant's measured values, so the cut network is a tree
and the difference decays again.

Run:  python3 demos/sensor_placement.py
"""

from netobs.analysis import fit_decay, required_horizon
from netobs.network import auto_placement, cut_cycles, cycle_basis, is_tree
from netobs.observer import run_observer
from netobs.scenarios import cycle_counterexample

sc = cycle_counterexample(a=1.0, t_max=60.0)
print(f"cycles: {cycle_basis(sc.graph)}  (cyclomatic number {sc.graph.cyclomatic_number})")
placement = auto_placement(sc.graph)
print(f"automatic placement: {list(placement)}")
cut = cut_cycles(sc.graph, placement)
print(f"cut network is a tree: {is_tree(cut.graph)}; "
      f"{len(cut.graph.edge_ids)} edges, {len(cut.graph.inner_nodes)} inner nodes")

for plan, label in ((None, "boundary only"), (placement, "with sensor")):
    orun = run_observer(sc.graph, sc.physics, sc.plant_ic, sc.observer_ic, sc.bc, plan=plan,
                        dt=sc.dt, t_max=sc.t_max)
    print(f"\n{label}: L(0)={orun.L[0]:.4f}  L({sc.t_max:g})={orun.L[-1]:.3e}")
    if plan is not None:
        T = required_horizon(orun.cut.graph, 1.0)
        fit = fit_decay(orun.times, orun.L, horizon=T)
        print(f"  rate of L = {fit.mu:.4f}, r2 = {fit.r2:.5f}")
