"""
Ready-made networks and initial data.

Each builder returns a ``Scenario``: the network, physics, plant and
observer initial data, boundary data, an optional sensor plan, a default
step and horizon, and, where one exists, a closed-form oracle.

The plant starts from the difference data and the observer from zero, so
the recorded difference R - S equals the plant state whenever the
boundary data vanish.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .network import NetworkGraph, SensorPlacement, auto_placement, validate
from .solver import (BoundaryData, ConstantProfile, InitialData, Physics, SampledProfile,
                     apply_coupling, build_grids)

__all__ = [
    "Scenario",
    "cycle_graph",
    "CYCLE_EDGES",
    "five_pipe_graph",
    "reduction_graph",
    "triangle_graph",
    "star_graph",
    "random_tree_graph",
    "compatible_ic",
    "cycle_counterexample",
    "five_pipe_tree",
    "five_pipe_trace_oracle",
    "star",
    "random_tree",
    "cycle_with_sensor",
    "SCENARIOS",
    "build",
]


@dataclass
class Scenario:
    name: str
    graph: NetworkGraph
    physics: Physics
    plant_ic: InitialData
    observer_ic: InitialData
    bc: BoundaryData = field(default_factory=BoundaryData)
    plan: SensorPlacement | None = None
    dt: float = 0.01
    t_max: float = 10.0
    expected: Callable | None = None
    compatible: bool = False

    @property
    def difference_ic(self) -> InitialData:
        return self.plant_ic - self.observer_ic

    def check(self) -> None:
        validate(self.graph).raise_if_invalid()
        build_grids(self.graph, self.dt, self.physics.c)


# ---------------------------------------------------------------------------
# graphs

# Network with one cycle B -> D -> E -> C -> B (all cycle edges oriented the
# same way round) and five tails.  Nodes: A=0, B=1, C=2, D=3, E=4, tails 5..8.
CYCLE_EDGES = (1, 2, 3, 4)


def cycle_graph(length: float = 1.0) -> NetworkGraph:
    edges = [
        (0, 0, 1, length),  # A -> B (tail)
        (1, 1, 3, length),  # B -> D
        (2, 3, 4, length),  # D -> E
        (3, 4, 2, length),  # E -> C
        (4, 2, 1, length),  # C -> B
        (5, 2, 5, length),
        (6, 2, 6, length),
        (7, 3, 8, length),
        (8, 4, 7, length),
    ]
    return NetworkGraph(range(9), edges)


def five_pipe_graph(length: float = 1.0) -> NetworkGraph:
    """Nodes 1..6 and pipes 1..5 numbered as in the usual figure."""
    edges = [(1, 1, 3, length), (2, 2, 3, length), (3, 3, 4, length),
             (4, 4, 5, length), (5, 4, 6, length)]
    return NetworkGraph(range(1, 7), edges)


def reduction_graph(length: float = 1.0) -> NetworkGraph:
    """Tree with four inner nodes; node 0 is the lowest-id reduction pivot.

    Inner nodes 0-3; 4, 5 hang off node 0, 6-8 off node 2 and 9 off node 3.
    """
    edges = [(0, 4, 0, length), (1, 5, 0, length), (2, 0, 1, length), (3, 1, 2, length),
             (4, 1, 3, length), (5, 2, 6, length), (6, 2, 7, length), (7, 2, 8, length),
             (8, 3, 9, length)]
    return NetworkGraph(range(10), edges)


def triangle_graph(length: float = 1.0) -> NetworkGraph:
    """Seven nodes with one triangle (inner nodes 1, 2, 3); edge 5 closes it."""
    edges = [(0, 0, 1, length), (1, 1, 2, length), (2, 1, 3, length), (3, 2, 4, length),
             (4, 2, 5, length), (5, 2, 3, length), (6, 3, 6, length)]
    return NetworkGraph(range(7), edges)


def star_graph(m: int = 3, lengths=None) -> NetworkGraph:
    """Centre 0 and leaves 1..m, edges oriented leaf -> centre."""
    if m < 2:
        raise ValueError("a star needs at least two edges")
    lengths = [1.0] * m if lengths is None else [float(v) for v in lengths]
    if len(lengths) != m:
        raise ValueError("need one length per edge")
    return NetworkGraph(range(m + 1), [(i, i + 1, 0, lengths[i]) for i in range(m)])


_RANDOM_LENGTHS = (0.5, 0.75, 1.0, 1.25, 1.5)


def random_tree_graph(n_inner: int, seed: int) -> NetworkGraph:
    """Random tree whose inner nodes all have degree >= 3.

    Inner nodes form a random recursive tree; every inner node then gets
    enough boundary edges to reach degree 3 plus zero or one extra.
    Lengths are drawn from multiples of 0.25 and orientations at random.
    """
    if n_inner < 1:
        raise ValueError("need at least one inner node")
    rng = np.random.default_rng(seed)
    pairs = [(int(rng.integers(0, k)), k) for k in range(1, n_inner)]
    degree = [0] * n_inner
    for a, b in pairs:
        degree[a] += 1
        degree[b] += 1
    nxt = n_inner
    for v in range(n_inner):
        for _ in range(max(0, 3 - degree[v]) + int(rng.integers(0, 2))):
            pairs.append((v, nxt))
            nxt += 1
    edges = []
    for eid, (a, b) in enumerate(pairs):
        if rng.random() < 0.5:
            a, b = b, a
        edges.append((eid, a, b, float(rng.choice(_RANDOM_LENGTHS))))
    return NetworkGraph(range(nxt), edges)


# ---------------------------------------------------------------------------
# initial data


def compatible_ic(graph: NetworkGraph, seed: int, scale: float = 1.0) -> InitialData:
    """Random piecewise-linear data satisfying the node conditions at t = 0.

    Incoming values are drawn at every edge end first; outgoing values
    follow from the junction map at inner nodes and are zero at boundary
    nodes.  Each edge then gets one random interior knot at mid-length.
    """
    rng = np.random.default_rng(seed)
    inn = {}
    out = {}
    for node in graph.node_ids:
        sides = graph.sides(node)
        vals = scale * rng.standard_normal(len(sides))
        outs = apply_coupling(vals) if len(sides) > 1 else np.zeros(1)
        for s, i, o in zip(sides, vals, outs):
            inn[s] = float(i)
            out[s] = float(o)
    profiles = {}
    for e in graph.edges:
        s0 = next(s for s in graph.sides(e.source) if s.edge == e.id and s.endpoint == 0)
        s1 = next(s for s in graph.sides(e.target) if s.edge == e.id and s.endpoint == 1)
        mid_p, mid_m = scale * rng.standard_normal(2)
        profiles[e.id] = SampledProfile(
            (0.0, e.length / 2, e.length),
            (out[s0], float(mid_p), inn[s1]),
            (inn[s0], float(mid_m), out[s1]),
        )
    return InitialData(profiles)


# ---------------------------------------------------------------------------
# scenarios


def cycle_counterexample(a: float = 1.0, lam: float = 0.0, c: float = 1.0, dt: float = 0.01,
                         t_max: float | None = None, length: float = 1.0) -> Scenario:
    """Cycle network with +a / -a on the cycle edges and zero elsewhere.

    The difference system keeps this state constant without friction and
    decays it like ``a * exp(-2 lam t)`` with linear friction; boundary
    traces stay zero in both cases.
    """
    graph = cycle_graph(length)
    ic = InitialData({e: ConstantProfile(a, -a) for e in CYCLE_EDGES})
    if t_max is None:
        t_max = 20 * len(CYCLE_EDGES) * length / c if lam == 0 else 5.0

    def expected(t):
        return a * math.exp(-2 * lam * t)

    return Scenario("cycle", graph, Physics.linear(lam, c), ic, InitialData.zero(),
                    dt=dt, t_max=t_max, expected=expected, compatible=True)


def five_pipe_trace_oracle(t, length: float = 1.0, c: float = 1.0):
    """plus on pipe 3 at node 3: (-1/3)^(n+1) for t in [n l/c, (n+1) l/c)."""
    n = np.floor(np.asarray(t, dtype=float) * c / length + 1e-9)
    return (-1.0 / 3.0) ** (n + 1)


def five_pipe_tree(length: float = 1.0, c: float = 1.0, lam: float = 0.0, dt: float = 0.05,
                   t_max: float | None = None) -> Scenario:
    """Five pipes, six nodes, data 1 on pipe 3 only: no finite-time synchronization."""
    graph = five_pipe_graph(length)
    ic = InitialData({3: ConstantProfile(1.0, 1.0)})
    if t_max is None:
        t_max = 11 * length / c
    return Scenario("five-pipe", graph, Physics.linear(lam, c), ic, InitialData.zero(),
                    dt=dt, t_max=t_max,
                    expected=lambda t: five_pipe_trace_oracle(t, length, c))


def star(m: int = 3, lengths=None, lam: float = 0.0, c: float = 1.0, seed: int = 0,
         dt: float = 0.01, t_max: float | None = None) -> Scenario:
    """Star with m edges and random compatible piecewise-linear data."""
    graph = star_graph(m, lengths)
    if t_max is None:
        t_max = 12 * graph.l_max / c
    return Scenario(f"star{m}", graph, Physics.linear(lam, c), compatible_ic(graph, seed),
                    InitialData.zero(), dt=dt, t_max=t_max, compatible=True)


def random_tree(n_inner: int = 4, seed: int = 0, lam: float = 0.0, c: float = 1.0,
                dt: float = 0.05, t_max: float | None = None) -> Scenario:
    """Random tree (see ``random_tree_graph``) with random compatible data."""
    graph = random_tree_graph(n_inner, seed)
    if t_max is None:
        t_max = 40 * graph.l_max / c
    return Scenario(f"random-tree-{n_inner}-{seed}", graph, Physics.linear(lam, c),
                    compatible_ic(graph, seed + 1000), InitialData.zero(), dt=dt, t_max=t_max,
                    compatible=True)


def cycle_with_sensor(a: float = 1.0, lam: float = 0.0, c: float = 1.0, dt: float = 0.01,
                      t_max: float = 60.0, placement: SensorPlacement | None = None) -> Scenario:
    """Cycle counterexample plus one interior sensor (auto placement by default)."""
    sc = cycle_counterexample(a, lam, c, dt, t_max)
    sc.name = "cycle-sensor"
    sc.plan = placement if placement is not None else auto_placement(sc.graph)
    sc.expected = None
    return sc


SCENARIOS = {
    "cycle": cycle_counterexample,
    "cycle-sensor": cycle_with_sensor,
    "five-pipe": five_pipe_tree,
    "star": star,
    "random-tree": random_tree,
}


def build(name: str, **kwargs) -> Scenario:
    if name not in SCENARIOS:
        raise KeyError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    kwargs = {k: v for k, v in kwargs.items() if v is not None}
    return SCENARIOS[name](**kwargs)
