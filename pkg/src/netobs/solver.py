"""
Characteristic-grid integrator for the 2x2 transport system on a network.

On every edge the pair (plus, minus) travels at speed +c / -c and is
coupled through the friction source.  The grid uses dx = c * dt on all
edges, so one time step shifts ``plus`` one cell forward and ``minus``
one cell backward; with no friction the scheme is exact.

Friction models
---------------
- ``None``:                 pure shift.
- ``LinearFriction(lam)``:  source -lam*(plus - minus) on plus and the
                            opposite on minus, integrated with the
                            trapezoidal rule along both characteristics
                            (a 2x2 solve per grid point, closed form).
- ``SemilinearFriction(gamma)``: sigma = gamma*|d|*d with d = plus - minus,
                            explicit predictor + trapezoidal corrector.

After the interior update, every inner node applies the junction map
``out_e = -in_e + 2/n * sum(in)`` and every boundary node imposes its
prescribed outgoing value.  The initial snapshot is made consistent with
these node conditions as well.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .analysis import TraceSeries
from .network import END, START, NetworkGraph, NodeSide

__all__ = [
    "LinearFriction",
    "SemilinearFriction",
    "Physics",
    "EdgeGrid",
    "GridError",
    "SolverError",
    "SensorOffGrid",
    "build_grids",
    "suggest_dt",
    "apply_coupling",
    "ConstantProfile",
    "SampledProfile",
    "FunctionProfile",
    "OffsetProfile",
    "InitialData",
    "Zero",
    "Constant",
    "Sine",
    "Table",
    "BoundaryData",
    "EdgeField",
    "SystemState",
    "Layout",
    "Simulation",
    "SimulationResult",
    "run",
]


# ---------------------------------------------------------------------------
# physics


@dataclass(frozen=True)
class LinearFriction:
    lam: float

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError(f"friction parameter must be >= 0, got {self.lam}")


@dataclass(frozen=True)
class SemilinearFriction:
    gamma: float

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValueError(f"friction parameter must be >= 0, got {self.gamma}")

    def sigma(self, d):
        return self.gamma * np.abs(d) * d


@dataclass(frozen=True)
class Physics:
    """Wave speed (m/s) and friction law shared by all edges."""

    c: float = 1.0
    friction: LinearFriction | SemilinearFriction | None = None

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"wave speed must be positive, got {self.c}")

    @classmethod
    def linear(cls, lam: float, c: float = 1.0) -> "Physics":
        return cls(c, LinearFriction(lam) if lam != 0 else None)

    @property
    def lam(self) -> float:
        return self.friction.lam if isinstance(self.friction, LinearFriction) else 0.0

    @property
    def is_linear(self) -> bool:
        return not isinstance(self.friction, SemilinearFriction)

    def describe(self) -> dict:
        if self.friction is None:
            return {"c": self.c, "friction": "none"}
        if isinstance(self.friction, LinearFriction):
            return {"c": self.c, "friction": "linear", "lambda": self.friction.lam}
        return {"c": self.c, "friction": "semilinear", "gamma": self.friction.gamma}


# ---------------------------------------------------------------------------
# grids


class GridError(ValueError):
    def __init__(self, code: str, message: str, suggested_dt: float | None = None):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.suggested_dt = suggested_dt


class SolverError(RuntimeError):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


class SensorOffGrid(ValueError):
    code = "SensorOffGrid"


@dataclass(frozen=True)
class EdgeGrid:
    edge: int
    n_cells: int
    dx: float
    length: float

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n_cells + 1) * self.dx


def suggest_dt(lengths: Sequence[float], c: float, dt: float | None = None) -> float:
    """Largest commensurable step not exceeding ``dt``.

    Travel times ``length / c`` are rounded onto rationals (denominator at
    most 1e6) and their greatest common divisor ``g`` is split into the
    fewest equal parts that fit below ``dt``.
    """
    fracs = [Fraction(L / c).limit_denominator(10**6) for L in lengths]
    num = 0
    den = 1
    for f in fracs:
        den = den * f.denominator // math.gcd(den, f.denominator)
    for f in fracs:
        num = math.gcd(num, f.numerator * (den // f.denominator))
    g = num / den
    if dt is None or dt >= g:
        return g
    return g / math.ceil(g / dt - 1e-12)


def build_grids(graph: NetworkGraph, dt: float, c: float = 1.0) -> dict[int, EdgeGrid]:
    """Unit-CFL grids: ``n_cells = round(length / (c dt))`` on every edge.

    Raises
    ------
    GridError
        ``IncommensurableLengths`` (with ``suggested_dt``) when some edge
        length is not a multiple of ``c * dt`` to relative accuracy 1e-9.
    """
    if not dt > 0:
        raise GridError("BadTimeStep", f"dt must be positive, got {dt}")
    dx = c * dt
    grids = {}
    bad = []
    for e in graph.edges:
        n = round(e.length / dx)
        if n < 1 or abs(n * dx - e.length) > 1e-9 * e.length:
            bad.append(e.id)
        grids[e.id] = EdgeGrid(e.id, max(n, 1), dx, e.length)
    if bad:
        sug = suggest_dt([e.length for e in graph.edges], c, dt)
        raise GridError(
            "IncommensurableLengths",
            f"edge(s) {bad} are not multiples of c*dt={dx:g}; try dt={sug:.12g}",
            suggested_dt=sug,
        )
    return grids


def apply_coupling(incoming) -> np.ndarray:
    """Junction map ``out_e = -in_e + (2/n) sum_g in_g`` over the last axis."""
    incoming = np.asarray(incoming, dtype=float)
    n = incoming.shape[-1]
    return -incoming + (2.0 / n) * incoming.sum(axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# initial and boundary data


@dataclass(frozen=True)
class ConstantProfile:
    plus: float
    minus: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.full_like(x, self.plus), np.full_like(x, self.minus)


@dataclass(frozen=True)
class SampledProfile:
    """Piecewise-linear profile through ``(x, plus, minus)`` samples."""

    x: tuple[float, ...]
    plus: tuple[float, ...]
    minus: tuple[float, ...]

    def __post_init__(self):
        if not (len(self.x) == len(self.plus) == len(self.minus)) or not self.x:
            raise ValueError("samples must be non-empty and of equal length")
        if any(b < a for a, b in zip(self.x, self.x[1:])):
            raise ValueError("sample positions must be sorted")

    @classmethod
    def from_rows(cls, rows) -> "SampledProfile":
        xs, ps, ms = zip(*[(float(r[0]), float(r[1]), float(r[2])) for r in rows])
        return cls(xs, ps, ms)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.interp(x, self.x, self.plus), np.interp(x, self.x, self.minus)


@dataclass(frozen=True)
class FunctionProfile:
    func: Callable

    def __call__(self, x):
        p, m = self.func(np.asarray(x, dtype=float))
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(p, x.shape).astype(float), np.broadcast_to(m, x.shape).astype(float)


@dataclass(frozen=True)
class OffsetProfile:
    base: object
    offset: float

    def __call__(self, x):
        return self.base(np.asarray(x, dtype=float) + self.offset)


ZERO_PROFILE = ConstantProfile(0.0, 0.0)


@dataclass
class InitialData:
    """Initial (plus, minus) per edge; unlisted edges start at zero."""

    profiles: dict = field(default_factory=dict)

    def profile(self, edge: int):
        return self.profiles.get(edge, ZERO_PROFILE)

    def evaluate(self, edge: int, x):
        return self.profile(edge)(x)

    def __sub__(self, other: "InitialData") -> "InitialData":
        edges = set(self.profiles) | set(other.profiles)
        a, b = self, other

        def diff(e):
            pa, pb = a.profile(e), b.profile(e)

            def f(x):
                p1, m1 = pa(x)
                p2, m2 = pb(x)
                return p1 - p2, m1 - m2
            return FunctionProfile(f)
        return InitialData({e: diff(e) for e in edges})

    def for_cut(self, cut) -> "InitialData":
        """Re-index onto a cut graph: the second piece reads the original
        profile shifted by the sensor position."""
        profiles = dict(self.profiles)
        for s in cut.sensors:
            profiles[s.edge_b] = OffsetProfile(self.profile(s.edge), s.position)
        return InitialData(profiles)

    @classmethod
    def zero(cls) -> "InitialData":
        return cls({})

    @classmethod
    def constant(cls, values: Mapping[int, tuple[float, float]]) -> "InitialData":
        return cls({e: ConstantProfile(float(p), float(m)) for e, (p, m) in values.items()})


@dataclass(frozen=True)
class Zero:
    def __call__(self, t):
        return 0.0


@dataclass(frozen=True)
class Constant:
    value: float

    def __call__(self, t):
        return self.value


@dataclass(frozen=True)
class Sine:
    amp: float
    freq: float

    def __call__(self, t):
        return self.amp * math.sin(2 * math.pi * self.freq * t)


@dataclass(frozen=True)
class Table:
    """Linear interpolation in a ``(time, value)`` table, held constant outside."""

    times: tuple[float, ...]
    values: tuple[float, ...]

    def __call__(self, t):
        return float(np.interp(t, self.times, self.values))


@dataclass
class BoundaryData:
    """Outgoing boundary values per boundary node; unlisted nodes get zero."""

    signals: dict = field(default_factory=dict)

    def signal(self, node: int):
        return self.signals.get(node, Zero())

    def provider(self, layout: "Layout") -> Callable[[float], np.ndarray]:
        funcs = [self.signal(n) for n in layout.boundary_nodes]
        if all(isinstance(f, Zero) for f in funcs):
            zeros = np.zeros(len(funcs))
            return lambda t: zeros
        return lambda t: np.array([f(t) for f in funcs], dtype=float)


# ---------------------------------------------------------------------------
# state containers


@dataclass
class EdgeField:
    plus: np.ndarray
    minus: np.ndarray
    dx: float


@dataclass
class SystemState:
    time: float
    fields: dict[int, EdgeField]


class Layout:
    """Flat storage of all edge grids plus the node bookkeeping.

    Edge ``e`` occupies ``[start[e], end[e]]`` (inclusive) in the flat
    ``plus``/``minus`` arrays.
    """

    def __init__(self, graph: NetworkGraph, grids: Mapping[int, EdgeGrid]):
        self.graph = graph
        self.grids = dict(grids)
        self.edge_ids = sorted(grids)
        self.start = {}
        self.end = {}
        pos = 0
        for e in self.edge_ids:
            self.start[e] = pos
            self.end[e] = pos + grids[e].n_cells
            pos += grids[e].n_cells + 1
        self.size = pos
        self.starts = np.array([self.start[e] for e in self.edge_ids])
        self.ends = np.array([self.end[e] for e in self.edge_ids])
        self.dx = next(iter(grids.values())).dx

        w = np.full(self.size, self.dx)
        w[self.starts] = self.dx / 2
        w[self.ends] = self.dx / 2
        self.weights = w

        # node sides in a fixed order: by edge id, start before end
        self.sides: list[NodeSide] = []
        for e in self.edge_ids:
            edge = graph.edge(e)
            self.sides.append(NodeSide(e, edge.source, START))
            self.sides.append(NodeSide(e, edge.target, END))
        self.side_index = {s: k for k, s in enumerate(self.sides)}
        self.side_pos = np.array([self.start[s.edge] if s.endpoint == START else self.end[s.edge]
                                  for s in self.sides])
        self.side_is_start = np.array([s.endpoint == START for s in self.sides])

        inner = graph.inner_nodes
        group_of = {n: g for g, n in enumerate(inner)}
        self.inner_nodes = inner
        self.inner_sides = np.array([k for k, s in enumerate(self.sides) if s.node in group_of], dtype=int)
        self.inner_group = np.array([group_of[self.sides[k].node] for k in self.inner_sides], dtype=int)
        self.inner_count = np.bincount(self.inner_group, minlength=len(inner)).astype(float)
        self.boundary_nodes = graph.boundary_nodes
        self.boundary_sides = np.array(
            [self.side_index[graph.boundary_side(n)] for n in self.boundary_nodes], dtype=int)

    def point_index(self, edge: int, x: float, interior: bool = False) -> int:
        """Flat index of the grid point at position ``x`` on ``edge``.

        Positions off the grid are snapped to the nearest point with a
        warning.  With ``interior=True`` the snapped point must not be an
        edge end, otherwise ``SensorOffGrid`` is raised.
        """
        if edge not in self.grids:
            raise SensorOffGrid(f"SensorOffGrid: unknown edge {edge}")
        g = self.grids[edge]
        r = x / g.dx
        j = int(round(r))
        if j < 0 or j > g.n_cells:
            raise SensorOffGrid(f"SensorOffGrid: x={x} outside edge {edge} of length {g.length}")
        if abs(r - j) > 1e-9 * max(1.0, abs(r)):
            warnings.warn(f"position {x} on edge {edge} snapped to grid point {j * g.dx:.12g}",
                          stacklevel=3)
        if interior and (j == 0 or j == g.n_cells):
            raise SensorOffGrid(f"SensorOffGrid: x={x} on edge {edge} does not snap to an interior grid point")
        return self.start[edge] + j

    def to_state(self, time: float, plus: np.ndarray, minus: np.ndarray) -> SystemState:
        fields = {}
        for e in self.edge_ids:
            sl = slice(self.start[e], self.end[e] + 1)
            fields[e] = EdgeField(plus[sl].copy(), minus[sl].copy(), self.dx)
        return SystemState(time, fields)

    def from_state(self, state: SystemState) -> tuple[np.ndarray, np.ndarray]:
        p = np.empty(self.size)
        m = np.empty(self.size)
        for e in self.edge_ids:
            sl = slice(self.start[e], self.end[e] + 1)
            p[sl] = state.fields[e].plus
            m[sl] = state.fields[e].minus
        return p, m

    def l2(self, plus: np.ndarray, minus: np.ndarray) -> float:
        return float(np.dot(self.weights, plus * plus + minus * minus))

    def edge_l2(self, plus: np.ndarray, minus: np.ndarray) -> np.ndarray:
        return np.add.reduceat(self.weights * (plus * plus + minus * minus), self.starts)


# ---------------------------------------------------------------------------
# time stepping


def _shift_forward(a: np.ndarray) -> np.ndarray:
    out = np.empty_like(a)
    out[1:] = a[:-1]
    out[0] = 0.0
    return out


def _shift_backward(a: np.ndarray) -> np.ndarray:
    out = np.empty_like(a)
    out[:-1] = a[1:]
    out[-1] = 0.0
    return out


class Simulation:
    """Time stepper for one network.

    Parameters
    ----------
    graph, physics, dt
        Network, physics and time step; grids are built with unit CFL.
    initial : InitialData or SystemState
    boundary : BoundaryData or callable
        A callable receives the time and returns the outgoing values at
        ``layout.boundary_nodes`` (in that order).
    """

    def __init__(self, graph: NetworkGraph, physics: Physics, initial, dt: float,
                 boundary=None, grids: Mapping[int, EdgeGrid] | None = None):
        self.graph = graph
        self.physics = physics
        self.dt = float(dt)
        self.grids = grids if grids is not None else build_grids(graph, dt, physics.c)
        self.layout = Layout(graph, self.grids)
        if boundary is None:
            boundary = BoundaryData()
        self.boundary = boundary.provider(self.layout) if isinstance(boundary, BoundaryData) else boundary
        self.step_index = 0
        if isinstance(initial, SystemState):
            self.plus, self.minus = self.layout.from_state(initial)
        else:
            self.plus = np.empty(self.layout.size)
            self.minus = np.empty(self.layout.size)
            for e in self.layout.edge_ids:
                sl = slice(self.layout.start[e], self.layout.end[e] + 1)
                p, m = initial.evaluate(e, self.grids[e].x)
                self.plus[sl] = p
                self.minus[sl] = m
        self._apply_nodes(self._incoming(self.plus, self.minus), 0.0, 0.0)
        self._check_finite()

    @property
    def time(self) -> float:
        return self.step_index * self.dt

    def state(self) -> SystemState:
        return self.layout.to_state(self.time, self.plus, self.minus)

    def _incoming(self, p_src: np.ndarray, m_src: np.ndarray) -> np.ndarray:
        L = self.layout
        return np.where(L.side_is_start, m_src[L.side_pos], p_src[L.side_pos])

    def _apply_nodes(self, F: np.ndarray, h: float, t: float) -> None:
        """Solve the node conditions given predicted incoming values ``F``.

        With the trapezoidal friction the incoming value at a node side
        satisfies ``in = F - h (in - out)``.  Since the junction map is a
        reflection (eigenvalues +1 on constants, -1 on zero-mean vectors)
        the coupled solve has the closed form used below.
        """
        L = self.layout
        inn = np.empty_like(F)
        out = np.empty_like(F)
        if len(L.inner_sides):
            Fi = F[L.inner_sides]
            if h == 0.0:
                sums = np.bincount(L.inner_group, weights=Fi, minlength=len(L.inner_nodes))
                inn_i = Fi
                out_i = -Fi + (2.0 / L.inner_count[L.inner_group]) * sums[L.inner_group]
            else:
                mean = np.bincount(L.inner_group, weights=Fi, minlength=len(L.inner_nodes)) / L.inner_count
                ms = mean[L.inner_group]
                inn_i = ms + (Fi - ms) / (1.0 + 2.0 * h)
                out_i = 2.0 * ms - inn_i
            inn[L.inner_sides] = inn_i
            out[L.inner_sides] = out_i
        if len(L.boundary_sides):
            b = np.asarray(self.boundary(t), dtype=float)
            Fb = F[L.boundary_sides]
            inn[L.boundary_sides] = (Fb + h * b) / (1.0 + h)
            out[L.boundary_sides] = b
        pos = L.side_pos
        st = L.side_is_start
        self.minus[pos[st]] = inn[st]
        self.plus[pos[st]] = out[st]
        self.plus[pos[~st]] = inn[~st]
        self.minus[pos[~st]] = out[~st]

    def _check_finite(self) -> None:
        if not (np.isfinite(self.plus).all() and np.isfinite(self.minus).all()):
            raise SolverError("NonFiniteState", f"state diverged at t={self.time:g}")

    def step(self) -> None:
        p, m = self.plus, self.minus
        dt = self.dt
        t_new = (self.step_index + 1) * dt
        fr = self.physics.friction
        if fr is None or (isinstance(fr, LinearFriction) and fr.lam == 0):
            self.plus = _shift_forward(p)
            self.minus = _shift_backward(m)
            self._apply_nodes(self._incoming(self.plus, self.minus), 0.0, t_new)
        elif isinstance(fr, LinearFriction):
            h = 0.5 * fr.lam * dt
            d = p - m
            A = _shift_forward(p - h * d)
            B = _shift_backward(m + h * d)
            D = (A - B) / (1.0 + 2.0 * h)
            self.plus = A - h * D
            self.minus = B + h * D
            self._apply_nodes(self._incoming(A, B), h, t_new)
        else:
            s = fr.sigma(p - m)
            self.plus = _shift_forward(p - dt * s)
            self.minus = _shift_backward(m + dt * s)
            self._apply_nodes(self._incoming(self.plus, self.minus), 0.0, t_new)
            s_pred = fr.sigma(self.plus - self.minus)
            self.plus = _shift_forward(p - 0.5 * dt * s) - 0.5 * dt * s_pred
            self.minus = _shift_backward(m + 0.5 * dt * s) + 0.5 * dt * s_pred
            self._apply_nodes(self._incoming(self.plus, self.minus), 0.0, t_new)
        self.step_index += 1
        self._check_finite()


# ---------------------------------------------------------------------------
# recording and the run driver


class Recorder:
    """Collects the per-step diagnostics of one (possibly derived) field."""

    def __init__(self, layout: Layout, n_steps: int, probes: Sequence[tuple[int, float]] = (),
                 snapshot_every: int | None = None):
        self.layout = layout
        self.times = np.zeros(n_steps + 1)
        self.L = np.zeros(n_steps + 1)
        self.edge_l2 = np.zeros((n_steps + 1, len(layout.edge_ids)))
        n_sides = len(layout.sides)
        self.side_plus = np.zeros((n_steps + 1, n_sides))
        self.side_minus = np.zeros((n_steps + 1, n_sides))
        self.probes = [(int(e), float(x)) for e, x in probes]
        self.probe_idx = np.array([layout.point_index(e, x) for e, x in self.probes], dtype=int)
        self.probe_plus = np.zeros((n_steps + 1, len(self.probes)))
        self.probe_minus = np.zeros((n_steps + 1, len(self.probes)))
        self.snapshot_every = snapshot_every
        self.snapshots: list[SystemState] = []
        self.k = 0

    def record(self, time: float, plus: np.ndarray, minus: np.ndarray) -> None:
        L = self.layout
        k = self.k
        self.times[k] = time
        sq = L.weights * (plus * plus + minus * minus)
        self.L[k] = sq.sum()
        self.edge_l2[k] = np.add.reduceat(sq, L.starts)
        self.side_plus[k] = plus[L.side_pos]
        self.side_minus[k] = minus[L.side_pos]
        if len(self.probe_idx):
            self.probe_plus[k] = plus[self.probe_idx]
            self.probe_minus[k] = minus[self.probe_idx]
        if self.snapshot_every and k % self.snapshot_every == 0:
            self.snapshots.append(L.to_state(time, plus, minus))
        self.k += 1

    def result(self, graph: NetworkGraph, physics: Physics, dt: float,
               plus: np.ndarray, minus: np.ndarray) -> "SimulationResult":
        return SimulationResult(
            graph=graph, physics=physics, dt=dt, times=self.times, L=self.L,
            edge_ids=list(self.layout.edge_ids), edge_l2=self.edge_l2,
            sides=list(self.layout.sides), side_plus=self.side_plus, side_minus=self.side_minus,
            probes=self.probes, probe_plus=self.probe_plus, probe_minus=self.probe_minus,
            final=self.layout.to_state(self.times[-1], plus, minus), snapshots=self.snapshots,
        )


@dataclass
class SimulationResult:
    """Everything recorded by ``run``.

    ``L[k]`` is the squared L2 norm over all edges at ``times[k]`` and
    ``edge_l2[k, i]`` the per-edge contribution of ``edge_ids[i]``.  Node
    traces hold (plus, minus) at every edge end, probes at interior points.
    """

    graph: NetworkGraph
    physics: Physics
    dt: float
    times: np.ndarray
    L: np.ndarray
    edge_ids: list[int]
    edge_l2: np.ndarray
    sides: list[NodeSide]
    side_plus: np.ndarray
    side_minus: np.ndarray
    probes: list[tuple[int, float]] = field(default_factory=list)
    probe_plus: np.ndarray | None = None
    probe_minus: np.ndarray | None = None
    final: SystemState | None = None
    snapshots: list[SystemState] = field(default_factory=list)

    @property
    def t_max(self) -> float:
        return float(self.times[-1])

    def side_trace(self, side: NodeSide) -> TraceSeries:
        k = self.sides.index(side)
        return TraceSeries(side, self.times, self.side_plus[:, k], self.side_minus[:, k])

    def node_trace(self, node: int, edge: int | None = None) -> TraceSeries:
        """Trace at ``node`` on ``edge`` (the only edge for boundary nodes)."""
        matches = [s for s in self.sides if s.node == node and (edge is None or s.edge == edge)]
        if len(matches) != 1:
            raise KeyError(f"node {node} / edge {edge} does not identify a single edge end")
        return self.side_trace(matches[0])

    def probe_trace(self, edge: int, x: float) -> TraceSeries:
        for k, (e, px) in enumerate(self.probes):
            if e == edge and abs(px - x) <= 1e-12 * max(1.0, abs(x)):
                return TraceSeries((e, px), self.times, self.probe_plus[:, k], self.probe_minus[:, k])
        raise KeyError(f"no probe at edge {edge}, x={x}")

    def edge_l2_series(self, edge: int) -> np.ndarray:
        return self.edge_l2[:, self.edge_ids.index(edge)]

    def index_of(self, t: float) -> int:
        k = int(round(t / self.dt))
        if k < 0 or k >= len(self.times):
            raise IndexError(f"time {t} outside recorded range [0, {self.t_max}]")
        return k


def n_steps_for(t_max: float, dt: float) -> int:
    n = round(t_max / dt)
    if abs(n * dt - t_max) > 1e-9 * max(t_max, dt):
        warnings.warn(f"t_max={t_max} is not a multiple of dt={dt}; running {n} steps", stacklevel=3)
    return int(n)


def run(graph: NetworkGraph, physics: Physics, ic, bc=None, dt: float = 0.01, t_max: float = 1.0,
        probes: Sequence[tuple[int, float]] = (), snapshot_every: int | None = None) -> SimulationResult:
    """Simulate from ``t = 0`` to ``t_max`` and record diagnostics every step."""
    sim = Simulation(graph, physics, ic, dt, bc)
    n = n_steps_for(t_max, dt)
    rec = Recorder(sim.layout, n, probes, snapshot_every)
    rec.record(0.0, sim.plus, sim.minus)
    for _ in range(n):
        sim.step()
        rec.record(sim.time, sim.plus, sim.minus)
    return rec.result(graph, physics, sim.dt, sim.plus, sim.minus)
