"""
Directed metric graphs for pipe networks.

A network is a connected directed multigraph with a positive length on
every edge.  Nodes of degree one are boundary nodes, all others are inner
nodes.  Besides validation this module provides the structural tools used
by the observer analysis:

- ``is_tree`` / ``cycle_basis``:  tree test and fundamental cycles.
- ``find_first_order_boundary_node`` / ``reduce_once``:  the leaf-peeling
  step of the tree induction (an inner node with exactly one inner edge).
- ``cut_cycles``:  split sensed edges at the sensor position, turning a
  network with interior measurements into an auxiliary tree.
- ``to_json`` / ``from_json``:  canonical text serialization.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

__all__ = [
    "Edge",
    "Node",
    "NodeSide",
    "NetworkGraph",
    "NetworkError",
    "ValidationIssue",
    "ValidationReport",
    "SensorPlacement",
    "CutSensor",
    "CutResult",
    "validate",
    "is_tree",
    "cycle_basis",
    "inner_nodes",
    "find_first_order_boundary_node",
    "reduce_once",
    "reduction_sequence",
    "auto_placement",
    "cut_cycles",
    "to_json",
    "from_json",
    "load_network",
    "save_network",
]

START = 0  # endpoint x = 0
END = 1  # endpoint x = length


class NetworkError(ValueError):
    """Raised for invalid graphs or impossible structural requests.

    ``code`` names the violated invariant (e.g. ``"Disconnected"``).
    """

    def __init__(self, code: str, message: str, report: "ValidationReport | None" = None):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.report = report


@dataclass(frozen=True)
class Node:
    id: int
    boundary: bool | None = None  # declared flag, optional


@dataclass(frozen=True)
class Edge:
    id: int
    source: int
    target: int
    length: float


@dataclass(frozen=True)
class NodeSide:
    """One end of an edge, seen from the node it touches.

    ``endpoint`` is 0 for x = 0 (the edge starts at ``node``) and 1 for
    x = length.  Outgoing traffic at the side is ``plus`` at x = 0 and
    ``minus`` at x = length.
    """

    edge: int
    node: int
    endpoint: int

    @property
    def label(self) -> str:
        return f"e{self.edge}_n{self.node}_{'x0' if self.endpoint == START else 'xl'}"


@dataclass(frozen=True)
class ValidationIssue:
    code: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[ValidationIssue, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.issues

    @property
    def codes(self) -> list[str]:
        return [i.code for i in self.issues]

    def raise_if_invalid(self) -> None:
        if self.issues:
            first = self.issues[0]
            raise NetworkError(first.code, "; ".join(i.message for i in self.issues), self)


class NetworkGraph:
    """Directed metric multigraph.

    Parameters
    ----------
    nodes : iterable of int or Node
        Node identifiers.  A ``Node`` may carry a declared boundary flag
        which must agree with the node degree.
    edges : iterable of Edge or (id, source, target, length) tuples
    check : bool
        Validate on construction and raise ``NetworkError`` on failure.
    """

    def __init__(self, nodes: Iterable, edges: Iterable, check: bool = True):
        node_list = [n if isinstance(n, Node) else Node(int(n)) for n in nodes]
        edge_list = [e if isinstance(e, Edge) else Edge(int(e[0]), int(e[1]), int(e[2]), float(e[3]))
                     for e in edges]
        self._nodes = {n.id: n for n in sorted(node_list, key=lambda n: n.id)}
        self._edges = {e.id: e for e in sorted(edge_list, key=lambda e: e.id)}
        self._raw_counts = (len(node_list), len(edge_list))
        self._sides: dict[int, list[NodeSide]] = {n: [] for n in self._nodes}
        for e in self._edges.values():
            if e.source in self._sides:
                self._sides[e.source].append(NodeSide(e.id, e.source, START))
            if e.target in self._sides:
                self._sides[e.target].append(NodeSide(e.id, e.target, END))
        if check:
            validate(self).raise_if_invalid()

    # basic accessors -------------------------------------------------
    @property
    def node_ids(self) -> list[int]:
        return list(self._nodes)

    @property
    def edge_ids(self) -> list[int]:
        return list(self._edges)

    @property
    def edges(self) -> list[Edge]:
        return list(self._edges.values())

    @property
    def nodes(self) -> list[Node]:
        return list(self._nodes.values())

    def edge(self, edge_id: int) -> Edge:
        return self._edges[edge_id]

    def has_node(self, node_id: int) -> bool:
        return node_id in self._nodes

    def sides(self, node_id: int) -> list[NodeSide]:
        """Incident edge ends of a node (a self-loop contributes two)."""
        return list(self._sides[node_id])

    def all_sides(self) -> list[NodeSide]:
        out = []
        for e in self._edges.values():
            out.append(NodeSide(e.id, e.source, START))
            out.append(NodeSide(e.id, e.target, END))
        return out

    def degree(self, node_id: int) -> int:
        return len(self._sides[node_id])

    def is_boundary(self, node_id: int) -> bool:
        return self.degree(node_id) == 1

    @property
    def boundary_nodes(self) -> list[int]:
        return [n for n in self._nodes if self.degree(n) == 1]

    @property
    def inner_nodes(self) -> list[int]:
        return [n for n in self._nodes if self.degree(n) >= 2]

    def boundary_side(self, node_id: int) -> NodeSide:
        sides = self._sides[node_id]
        if len(sides) != 1:
            raise NetworkError("NotBoundary", f"node {node_id} has degree {len(sides)}")
        return sides[0]

    def sign(self, edge_id: int, node_id: int) -> int:
        """Orientation sign: -1 where the edge starts, +1 where it ends."""
        e = self._edges[edge_id]
        if node_id == e.source:
            return -1
        if node_id == e.target:
            return 1
        raise NetworkError("NotIncident", f"node {node_id} is not an endpoint of edge {edge_id}")

    def is_boundary_edge(self, edge_id: int) -> bool:
        e = self._edges[edge_id]
        return self.is_boundary(e.source) or self.is_boundary(e.target)

    @property
    def l_max(self) -> float:
        return max(e.length for e in self._edges.values())

    @property
    def l_min(self) -> float:
        return min(e.length for e in self._edges.values())

    @property
    def total_length(self) -> float:
        return math.fsum(e.length for e in self._edges.values())

    @property
    def cyclomatic_number(self) -> int:
        return len(self._edges) - len(self._nodes) + 1

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NetworkGraph):
            return NotImplemented
        return (set(self._nodes) == set(other._nodes)
                and self._edges == other._edges)

    def __repr__(self) -> str:
        return f"NetworkGraph(|V|={len(self._nodes)}, |E|={len(self._edges)})"


def validate(graph: NetworkGraph) -> ValidationReport:
    """Check the structural invariants of a network.

    Reports duplicate ids, dangling endpoints, non-positive lengths,
    declared boundary flags that disagree with the degree, and missing
    connectivity.  The graph is usable iff the report is clean.
    """
    issues = []
    n_nodes_raw, n_edges_raw = graph._raw_counts
    if n_nodes_raw != len(graph._nodes):
        issues.append(ValidationIssue("DuplicateId", "node ids are not unique"))
    if n_edges_raw != len(graph._edges):
        issues.append(ValidationIssue("DuplicateId", "edge ids are not unique"))
    if not graph._nodes:
        issues.append(ValidationIssue("Empty", "graph has no nodes"))
    if not graph._edges:
        issues.append(ValidationIssue("Empty", "graph has no edges"))
    for e in graph._edges.values():
        for end in (e.source, e.target):
            if end not in graph._nodes:
                issues.append(ValidationIssue(
                    "DanglingEndpoint", f"edge {e.id} references missing node {end}"))
        if not (e.length > 0) or not math.isfinite(e.length):
            issues.append(ValidationIssue(
                "LengthNonPositive", f"edge {e.id} has length {e.length}"))
    for n in graph._nodes.values():
        deg = graph.degree(n.id)
        if deg == 0:
            continue  # caught by the connectivity check
        if n.boundary is not None and n.boundary != (deg == 1):
            issues.append(ValidationIssue(
                "BoundaryFlagMismatch",
                f"node {n.id} declared boundary={n.boundary} but has degree {deg}"))
    if graph._nodes and not _connected(graph):
        issues.append(ValidationIssue("Disconnected", "graph is not connected"))
    return ValidationReport(tuple(issues))


def _neighbours(graph: NetworkGraph, node: int):
    for side in graph._sides[node]:
        e = graph._edges[side.edge]
        yield side.edge, (e.target if side.endpoint == START else e.source)


def _connected(graph: NetworkGraph) -> bool:
    start = next(iter(graph._nodes))
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for _, v in _neighbours(graph, u):
            if v in graph._nodes and v not in seen:
                seen.add(v)
                queue.append(v)
    return len(seen) == len(graph._nodes)


def is_tree(graph: NetworkGraph) -> bool:
    """True iff the (connected) graph contains no cycle."""
    return len(graph._edges) == len(graph._nodes) - 1


def cycle_basis(graph: NetworkGraph) -> list[list[int]]:
    """Fundamental cycles of a breadth-first spanning tree.

    The tree is grown from the lowest node id, scanning incident edges in
    id order.  Every non-tree edge closes one cycle, returned as the list
    of edge ids met when walking from the edge's source through the tree
    to its target and back along the edge.  Self-loops give one-edge
    cycles, parallel edges two-edge cycles.

    Returns
    -------
    list of list of int
        ``|E| - |V| + 1`` cycles for a connected graph.
    """
    root = min(graph._nodes)
    parent: dict[int, tuple[int, int] | None] = {root: None}  # node -> (parent, edge)
    depth = {root: 0}
    tree_edges = set()
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for eid, v in sorted(_neighbours(graph, u)):
            if v not in parent:
                parent[v] = (u, eid)
                depth[v] = depth[u] + 1
                tree_edges.add(eid)
                queue.append(v)

    cycles = []
    for e in graph._edges.values():
        if e.id in tree_edges:
            continue
        # tree path source -> target through the lowest common ancestor
        a, b = e.source, e.target
        up_a, up_b = [], []
        while depth[a] > depth[b]:
            p, pe = parent[a]
            up_a.append(pe)
            a = p
        while depth[b] > depth[a]:
            p, pe = parent[b]
            up_b.append(pe)
            b = p
        while a != b:
            pa, ea = parent[a]
            pb, eb = parent[b]
            up_a.append(ea)
            up_b.append(eb)
            a, b = pa, pb
        cycles.append(up_a + up_b[::-1] + [e.id])
    return cycles


def inner_nodes(graph: NetworkGraph) -> list[int]:
    return graph.inner_nodes


def _inner_edge(graph: NetworkGraph, edge_id: int) -> bool:
    e = graph.edge(edge_id)
    return not graph.is_boundary(e.source) and not graph.is_boundary(e.target)


def find_first_order_boundary_node(graph: NetworkGraph) -> int:
    """Inner node with exactly one inner edge and only boundary edges otherwise.

    Such a node exists in every tree with at least two inner nodes: the
    inner nodes span a subtree, and any leaf of that subtree qualifies.
    Ties are broken by the lowest node id.

    Raises
    ------
    NetworkError
        ``NotATree`` or ``TooFewInnerNodes``.
    """
    if not is_tree(graph):
        raise NetworkError("NotATree", "reduction needs a tree-shaped network")
    inner = graph.inner_nodes
    if len(inner) < 2:
        raise NetworkError("TooFewInnerNodes", f"{len(inner)} inner node(s); need at least 2")
    for node in inner:  # already sorted by id
        n_inner_edges = sum(_inner_edge(graph, s.edge) for s in graph.sides(node))
        if n_inner_edges == 1:
            return node
    raise AssertionError("a tree with >= 2 inner nodes always has such a node")


def reduce_once(graph: NetworkGraph) -> NetworkGraph:
    """Remove the boundary edges (and their boundary nodes) at the pivot node.

    The pivot returned by ``find_first_order_boundary_node`` becomes a
    boundary node of the reduced tree, so the inner-node count drops by one.
    """
    pivot = find_first_order_boundary_node(graph)
    drop_edges = set()
    drop_nodes = set()
    for side in graph.sides(pivot):
        if not _inner_edge(graph, side.edge):
            e = graph.edge(side.edge)
            drop_edges.add(e.id)
            drop_nodes.add(e.target if e.source == pivot else e.source)
    nodes = [n for n in graph.node_ids if n not in drop_nodes]
    edges = [e for e in graph.edges if e.id not in drop_edges]
    return NetworkGraph(nodes, edges)


def reduction_sequence(graph: NetworkGraph) -> list[NetworkGraph]:
    """Apply ``reduce_once`` until a star remains; returns all stages."""
    stages = [graph]
    while len(stages[-1].inner_nodes) >= 2:
        stages.append(reduce_once(stages[-1]))
    return stages


# ---------------------------------------------------------------------------
# sensors and cycle cutting


@dataclass(frozen=True)
class SensorPlacement:
    """Interior measurement points, at most one per edge."""

    sensors: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        edges = [e for e, _ in self.sensors]
        if len(set(edges)) != len(edges):
            raise NetworkError("DuplicateSensor", "at most one sensor per edge")
        object.__setattr__(self, "sensors", tuple(sorted((int(e), float(x)) for e, x in self.sensors)))

    def __len__(self) -> int:
        return len(self.sensors)

    def __iter__(self):
        return iter(self.sensors)

    @property
    def edges(self) -> list[int]:
        return [e for e, _ in self.sensors]


@dataclass(frozen=True)
class CutSensor:
    """Bookkeeping for one split edge.

    The original edge keeps its id for the first piece ``[0, position]``,
    which now ends at the artificial node ``node_a``.  The second piece
    ``[position, length]`` is ``edge_b`` and starts at ``node_b``.
    """

    edge: int
    position: float
    node_a: int
    node_b: int
    edge_a: int
    edge_b: int


@dataclass
class CutResult:
    graph: NetworkGraph
    sensors: list[CutSensor] = field(default_factory=list)

    def sensor_for_node(self) -> dict[int, CutSensor]:
        out = {}
        for s in self.sensors:
            out[s.node_a] = s
            out[s.node_b] = s
        return out

    def __iter__(self):  # allows ``graph, sensor_map = cut_cycles(...)``
        return iter((self.graph, self.sensors))


def auto_placement(graph: NetworkGraph) -> SensorPlacement:
    """One midpoint sensor per basis cycle.

    Cycles are visited in basis order and each gets a sensor on its
    smallest-id edge whose removal keeps the remaining graph connected, so
    that cutting all chosen edges leaves a spanning tree.
    """
    basis = cycle_basis(graph)
    chosen: list[int] = []
    remaining = {e.id: e for e in graph.edges}
    for cyc in basis:
        if any(e in chosen for e in cyc):
            candidates = []
        else:
            candidates = sorted(set(cyc))
        pick = None
        for eid in candidates + sorted(remaining):
            if eid in chosen:
                continue
            trial = {k: v for k, v in remaining.items() if k != eid}
            if _edges_connected(graph.node_ids, trial.values()):
                pick = eid
                break
        if pick is None:  # pragma: no cover - cyclomatic count guarantees a pick
            raise AssertionError("no removable edge left")
        chosen.append(pick)
        del remaining[pick]
    return SensorPlacement(tuple((e, graph.edge(e).length / 2) for e in chosen))


def _edges_connected(nodes: Sequence[int], edges: Iterable[Edge]) -> bool:
    adj: dict[int, list[int]] = {n: [] for n in nodes}
    for e in edges:
        adj[e.source].append(e.target)
        adj[e.target].append(e.source)
    start = nodes[0]
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == len(nodes)


def cut_cycles(graph: NetworkGraph, placement: SensorPlacement | str | None = "auto") -> CutResult:
    """Split every sensed edge at its sensor position.

    Each sensed edge ``(e, x)`` becomes two edges of lengths ``x`` and
    ``length - x`` ending/starting at two new degree-one nodes.  With one
    suitable sensor per basis cycle the result is a tree.

    Parameters
    ----------
    placement : SensorPlacement, "auto" or None
        ``"auto"`` uses ``auto_placement``; ``None`` means no sensors.

    Raises
    ------
    NetworkError
        ``SensorNotInterior`` for positions outside ``(0, length)``,
        ``UnknownEdge``, ``SensorDisconnects`` when a sensor sits on a
        bridge, and ``CycleUnsensed`` when the cut graph still has cycles.
    """
    if placement == "auto":
        placement = auto_placement(graph)
    elif placement is None:
        placement = SensorPlacement()
    next_node = max(graph.node_ids) + 1
    next_edge = max(graph.edge_ids) + 1
    nodes = list(graph.node_ids)
    edges = {e.id: e for e in graph.edges}
    cuts = []
    for eid, x in placement:
        if eid not in edges:
            raise NetworkError("UnknownEdge", f"sensor on missing edge {eid}")
        e = edges[eid]
        if not (0.0 < x < e.length):
            raise NetworkError("SensorNotInterior",
                               f"sensor at x={x} not inside (0, {e.length}) on edge {eid}")
        a, b = next_node, next_node + 1
        next_node += 2
        nodes += [a, b]
        edges[eid] = Edge(eid, e.source, a, x)
        edges[next_edge] = Edge(next_edge, b, e.target, e.length - x)
        cuts.append(CutSensor(eid, x, a, b, eid, next_edge))
        next_edge += 1
    cut = NetworkGraph(nodes, edges.values(), check=False)
    report = validate(cut)
    if "Disconnected" in report.codes:
        raise NetworkError("SensorDisconnects", "a sensor sits on a bridge edge; cutting it splits the network")
    report.raise_if_invalid()
    if not is_tree(cut):
        raise NetworkError(
            "CycleUnsensed",
            f"{cut.cyclomatic_number} cycle(s) remain without a sensor "
            f"({len(placement)} sensor(s) for cyclomatic number {graph.cyclomatic_number})")
    return CutResult(cut, cuts)


# ---------------------------------------------------------------------------
# serialization


def to_json(graph: NetworkGraph) -> str:
    """Canonical text form with sorted ids."""
    doc = {
        "nodes": [{"id": n} for n in sorted(graph.node_ids)],
        "edges": [{"id": e.id, "from": e.source, "to": e.target, "length": e.length}
                  for e in sorted(graph.edges, key=lambda e: e.id)],
    }
    return json.dumps(doc, indent=1)


def from_json(text: str | dict) -> NetworkGraph:
    doc = json.loads(text) if isinstance(text, str) else text
    try:
        nodes = []
        for n in doc["nodes"]:
            nid = int(n["id"])
            if nid < 0:
                raise NetworkError("BadId", f"negative node id {nid}")
            nodes.append(Node(nid, n.get("boundary")))
        edges = []
        for e in doc["edges"]:
            eid = int(e["id"])
            if eid < 0:
                raise NetworkError("BadId", f"negative edge id {eid}")
            edges.append(Edge(eid, int(e["from"]), int(e["to"]), float(e["length"])))
    except (KeyError, TypeError) as exc:
        raise NetworkError("BadFormat", f"malformed network document: {exc!r}") from exc
    return NetworkGraph(nodes, edges)


def load_network(path) -> NetworkGraph:
    with open(path) as fh:
        return from_json(fh.read())


def save_network(graph: NetworkGraph, path) -> None:
    with open(path, "w") as fh:
        fh.write(to_json(graph))
