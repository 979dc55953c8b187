"""Plant, observer and difference simulations with measurement injection.

The plant runs on the original network.  The observer runs on the network
obtained by cutting every sensed edge at its sensor; the two artificial
end nodes created by a cut receive the plant's measured values there, and
the true boundary nodes receive the plant's boundary data.  The difference
field is re-assembled on the plant's grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .network import CutResult, NetworkGraph, SensorPlacement, auto_placement, cut_cycles
from .solver import (BoundaryData, InitialData, Layout, Physics, Recorder, Simulation,
                     SimulationResult, build_grids, n_steps_for)

__all__ = ["MeasurementPlan", "ObserverRun", "run_observer", "run_difference_direct"]


@dataclass(frozen=True)
class MeasurementPlan:
    """Interior sensors in addition to the (always measured) boundary nodes.

    ``noise`` is reserved for a future measurement model; only ``None`` is
    accepted.
    """

    interior: SensorPlacement = field(default_factory=lambda: SensorPlacement(()))
    noise: None = None

    def __post_init__(self):
        if self.noise is not None:
            raise ValueError("noisy measurements are not supported; noise must be None")

    @classmethod
    def auto(cls, graph: NetworkGraph) -> "MeasurementPlan":
        return cls(auto_placement(graph))

    @classmethod
    def coerce(cls, plan, graph: NetworkGraph) -> "MeasurementPlan":
        if plan is None:
            return cls()
        if isinstance(plan, MeasurementPlan):
            return plan
        if isinstance(plan, str):
            if plan != "auto":
                raise ValueError(f"unknown plan {plan!r}")
            return cls.auto(graph)
        if isinstance(plan, SensorPlacement):
            return cls(plan)
        return cls(SensorPlacement(tuple(plan)))


@dataclass
class ObserverRun:
    plant: SimulationResult
    observer: SimulationResult
    difference: SimulationResult
    plan: MeasurementPlan
    cut: CutResult | None

    @property
    def times(self) -> np.ndarray:
        return self.difference.times

    @property
    def L(self) -> np.ndarray:
        return self.difference.L


class _Recombiner:
    """Maps the cut graph's flat arrays back onto the plant's grid.

    At a sensor point the observer holds two values per family: the end of
    the first piece and the start of the second.  The injected ones (minus
    at the first piece's end, plus at the second piece's start) are used,
    so the difference vanishes at every sensor.
    """

    def __init__(self, plant: Layout, cut_layout: Layout, cut: CutResult | None,
                 sensor_index: dict[int, int]):
        idx_p = np.arange(plant.size)
        idx_m = np.arange(plant.size)
        for e in plant.edge_ids:
            lo, hi = plant.start[e], plant.end[e]
            j = np.arange(hi - lo + 1)
            if cut is None or e not in sensor_index:
                idx_p[lo:hi + 1] = cut_layout.start[e] + j
                idx_m[lo:hi + 1] = cut_layout.start[e] + j
                continue
            s = next(s for s in cut.sensors if s.edge == e)
            js = sensor_index[e] - lo
            a0, b0 = cut_layout.start[s.edge_a], cut_layout.start[s.edge_b]
            first = np.where(j <= js, a0 + j, b0 + j - js)
            idx_p[lo:hi + 1] = np.where(j == js, b0, first)
            idx_m[lo:hi + 1] = first
        self.idx_plus = idx_p
        self.idx_minus = idx_m

    def __call__(self, plus: np.ndarray, minus: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return plus[self.idx_plus], minus[self.idx_minus]


def _resolve_cut(graph: NetworkGraph, plan: MeasurementPlan, dt: float, c: float):
    """Snap sensors to the plant grid and cut the network there."""
    grids = build_grids(graph, dt, c)
    layout = Layout(graph, grids)
    if not len(plan.interior):
        return grids, layout, None, {}
    sensor_index = {}
    snapped = []
    for e, x in plan.interior:
        k = layout.point_index(e, x, interior=True)
        sensor_index[e] = k
        snapped.append((e, (k - layout.start[e]) * layout.dx))
    cut = cut_cycles(graph, SensorPlacement(tuple(snapped)))
    return grids, layout, cut, sensor_index


def run_observer(graph: NetworkGraph, physics: Physics, plant_ic: InitialData,
                 observer_ic: InitialData, bc: BoundaryData | None = None, plan=None,
                 dt: float = 0.01, t_max: float = 1.0, probes: Sequence = ()) -> ObserverRun:
    """Run plant and observer side by side and record their difference.

    ``plan`` may be ``None`` (boundary measurements only), ``"auto"``, a
    ``SensorPlacement`` or a ``MeasurementPlan``.  Each step the plant
    advances first; the observer then reads the plant's fresh values at
    the sensors.
    """
    plan = MeasurementPlan.coerce(plan, graph)
    bc = bc if bc is not None else BoundaryData()
    grids, _, cut, sensor_index = _resolve_cut(graph, plan, dt, physics.c)

    plant = Simulation(graph, physics, plant_ic, dt, bc, grids=grids)
    obs_graph = cut.graph if cut is not None else graph
    obs_ic = observer_ic.for_cut(cut) if cut is not None else observer_ic
    obs_grids = build_grids(obs_graph, dt, physics.c)
    obs_layout = Layout(obs_graph, obs_grids)

    # boundary provider of the observer: plant data at true boundary nodes,
    # plant measurements at the artificial ones
    true_b = bc.provider(obs_layout)
    feeds = []
    if cut is not None:
        by_node = cut.sensor_for_node()
        for k, node in enumerate(obs_layout.boundary_nodes):
            s = by_node.get(node)
            if s is not None:
                feeds.append((k, sensor_index[s.edge], node == s.node_a))

    def provider(t):
        out = np.array(true_b(t), dtype=float)
        for k, idx, is_a in feeds:
            out[k] = plant.minus[idx] if is_a else plant.plus[idx]
        return out

    observer = Simulation(obs_graph, physics, obs_ic, dt, provider, grids=obs_grids)
    recombine = _Recombiner(plant.layout, observer.layout, cut, sensor_index)

    n = n_steps_for(t_max, dt)
    rec_plant = Recorder(plant.layout, n, probes)
    rec_obs = Recorder(observer.layout, n)
    rec_diff = Recorder(plant.layout, n, probes)

    def record():
        op, om = recombine(observer.plus, observer.minus)
        rec_plant.record(plant.time, plant.plus, plant.minus)
        rec_obs.record(observer.time, observer.plus, observer.minus)
        rec_diff.record(plant.time, plant.plus - op, plant.minus - om)

    record()
    for _ in range(n):
        plant.step()
        observer.step()
        record()
    op, om = recombine(observer.plus, observer.minus)
    return ObserverRun(
        plant=rec_plant.result(graph, physics, dt, plant.plus, plant.minus),
        observer=rec_obs.result(obs_graph, physics, dt, observer.plus, observer.minus),
        difference=rec_diff.result(graph, physics, dt, plant.plus - op, plant.minus - om),
        plan=plan, cut=cut,
    )


def run_difference_direct(graph: NetworkGraph, physics: Physics, diff_ic: InitialData,
                          dt: float = 0.01, t_max: float = 1.0, plan=None,
                          probes: Sequence = ()) -> SimulationResult:
    """Simulate the difference field itself with homogeneous boundary data.

    With sensors the field is simulated on the cut network, where the
    artificial end nodes also get zero data, and recombined on the
    original grid exactly as ``run_observer`` does.
    """
    plan = MeasurementPlan.coerce(plan, graph)
    grids, layout, cut, sensor_index = _resolve_cut(graph, plan, dt, physics.c)
    if cut is None:
        sim = Simulation(graph, physics, diff_ic, dt, grids=grids)
        recombine = None
    else:
        sim = Simulation(cut.graph, physics, diff_ic.for_cut(cut), dt)
        recombine = _Recombiner(layout, sim.layout, cut, sensor_index)

    def fields():
        if recombine is None:
            return sim.plus, sim.minus
        return recombine(sim.plus, sim.minus)

    n = n_steps_for(t_max, dt)
    rec = Recorder(layout, n, probes)
    rec.record(0.0, *fields())
    for _ in range(n):
        sim.step()
        rec.record(sim.time, *fields())
    return rec.result(graph, physics, dt, *fields())
