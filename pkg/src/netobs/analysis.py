"""
Norms, decay fits and numerical observability checks on recorded runs.

All time integrals use the trapezoidal rule on the step grid and all
space integrals the composite trapezoid on the grid points.  Windows are
snapped to the nearest recorded step.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from .network import END, START, NodeSide

__all__ = [
    "AnalysisError",
    "TraceSeries",
    "DecayFit",
    "ObservabilityReport",
    "PipeInequality",
    "l2_network",
    "trace_l2",
    "required_horizon",
    "check_observability",
    "single_pipe_bound",
    "reversed_pipe_bound",
    "check_single_pipe_observability",
    "check_reversed_pipe_inequality",
    "fit_decay",
    "coupling_energy_residual",
    "node_energy_residual",
    "is_monotone",
    "reports_to_csv",
]

DEFAULT_FLOOR = 1e-24


class AnalysisError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


@dataclass
class TraceSeries:
    """(plus, minus) over time at one spatial point.

    ``location`` is a ``NodeSide`` for node traces and an ``(edge, x)``
    pair for interior probes.
    """

    location: object
    times: np.ndarray
    plus: np.ndarray
    minus: np.ndarray

    def __post_init__(self):
        if not (len(self.times) == len(self.plus) == len(self.minus)):
            raise ValueError("trace arrays must have equal length")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    @property
    def energy(self) -> np.ndarray:
        return self.plus**2 + self.minus**2


def l2_network(state) -> float:
    """Squared L2 norm of (plus, minus) summed over all edges of a state."""
    total = 0.0
    for f in state.fields.values():
        sq = f.plus**2 + f.minus**2
        total += f.dx * (sq.sum() - 0.5 * (sq[0] + sq[-1]))
    return float(total)


def _snap(times: np.ndarray, t: float, dt: float) -> tuple[int, float]:
    k = int(round((t - times[0]) / dt)) if dt > 0 else 0
    return k, abs(times[0] + k * dt - t)


def trace_l2(trace: TraceSeries, window: tuple[float, float], return_snap: bool = False):
    """Trapezoidal time integral of plus^2 + minus^2 over ``window``.

    Raises
    ------
    AnalysisError
        ``WindowOutOfRange`` when the window leaves the recorded range by
        more than half a step.
    """
    t0, t1 = window
    if t1 < t0:
        raise AnalysisError("WindowOutOfRange", f"empty window {window}")
    times = trace.times
    dt = trace.dt
    k0, e0 = _snap(times, t0, dt)
    k1, e1 = _snap(times, t1, dt)
    if k0 < 0 or k1 > len(times) - 1:
        raise AnalysisError(
            "WindowOutOfRange",
            f"window [{t0:g}, {t1:g}] outside trace support [{times[0]:g}, {times[-1]:g}]")
    y = trace.energy[k0:k1 + 1]
    val = float(dt * (y.sum() - 0.5 * (y[0] + y[-1]))) if k1 > k0 else 0.0
    if return_snap:
        return val, max(e0, e1)
    return val


def _ratio(lhs: float, rhs: float) -> float:
    if rhs > 0:
        return lhs / rhs
    return math.inf if lhs > 0 else math.nan


_MODES = {"nofriction": "no-friction", "no-friction": "no-friction", "friction": "friction"}


def _mode(mode: str) -> str:
    key = mode.lower().replace("_", "-")
    if key not in _MODES:
        raise AnalysisError("BadMode", f"unknown mode {mode!r}; use 'no-friction' or 'friction'")
    return _MODES[key]


def required_horizon(graph, c: float, mode: str = "no-friction") -> float:
    """Observation half-window needed for the network inequality.

    ``N * l_max / c`` without friction and ``(2N - 1) * l_max / c`` with
    friction, N being the number of inner nodes (at least one).
    """
    n = max(len(graph.inner_nodes), 1)
    factor = n if _mode(mode) == "no-friction" else 2 * n - 1
    return factor * graph.l_max / c


@dataclass
class ObservabilityReport:
    t: float
    T: float
    lhs: float
    rhs: float
    ratio: float
    mode: str
    required_T: float
    degenerate: bool = False
    snap_error: float = 0.0

    @property
    def finite(self) -> bool:
        return math.isfinite(self.ratio)

    def to_dict(self) -> dict:
        return asdict(self)


def check_observability(run, t: float, T: float | None = None, mode: str = "no-friction") -> ObservabilityReport:
    """Compare the network norm at ``t`` with boundary traces on ``[t-T, t+T]``.

    On trees the ratio lhs/rhs is finite.  An infinite ratio (boundary
    traces vanish while the state does not) exhibits a network on which
    boundary measurements cannot observe the state.
    """
    mode = _mode(mode)
    graph = run.graph
    req = required_horizon(graph, run.physics.c, mode)
    if T is None:
        T = req
    tol = 1e-9 * max(1.0, req)
    if T < req - tol:
        raise AnalysisError("HorizonTooShort", f"T={T:g} below the required {req:g} ({mode})")
    if t < T - tol:
        raise AnalysisError("HorizonTooShort", f"need t >= T, got t={t:g}, T={T:g}")
    if t + T > run.t_max + 0.5 * run.dt:
        raise AnalysisError("HorizonTooShort", f"run ends at {run.t_max:g} < t+T={t + T:g}")
    lhs = float(run.L[run.index_of(t)])
    rhs = 0.0
    snap = 0.0
    for node in graph.boundary_nodes:
        val, err = trace_l2(run.node_trace(node), (t - T, t + T), return_snap=True)
        rhs += val
        snap = max(snap, err)
    return ObservabilityReport(t=t, T=T, lhs=lhs, rhs=rhs, ratio=_ratio(lhs, rhs), mode=mode,
                               required_T=req, degenerate=(lhs == 0 and rhs == 0), snap_error=snap)


class PipeInequality(NamedTuple):
    lhs: float
    rhs: float
    ratio: float
    bound: float
    degenerate: bool


def single_pipe_bound(c: float, lam: float, length: float) -> float:
    """Constant of the single-pipe inequality: c + 5/2 lam exp(2 lam l / c)."""
    return c + 2.5 * lam * math.exp(2 * lam * length / c)


def reversed_pipe_bound(c: float, lam: float, length: float) -> float:
    """End-to-end trace constant 2C (1/c + 5/2 lam l / c^2 exp(4 lam l / c))."""
    C = single_pipe_bound(c, lam, length)
    return 2 * C * (1 / c + 2.5 * lam * length / c**2 * math.exp(4 * lam * length / c))


def _edge_sides(run, edge: int):
    e = run.graph.edge(edge)
    return NodeSide(edge, e.source, START), NodeSide(edge, e.target, END)


def check_single_pipe_observability(run, edge: int, t: float) -> PipeInequality:
    """Edge norm at ``t`` against the x=0 trace on ``[t - l/c, t + l/c]``."""
    c = run.physics.c
    length = run.graph.edge(edge).length
    tau = length / c
    if t <= tau or t + tau > run.t_max + 0.5 * run.dt:
        raise AnalysisError("HorizonTooShort",
                            f"need l/c < t <= t_max - l/c, got t={t:g}, l/c={tau:g}")
    start, _ = _edge_sides(run, edge)
    lhs = float(run.edge_l2_series(edge)[run.index_of(t)])
    rhs = trace_l2(run.side_trace(start), (t - tau, t + tau))
    return PipeInequality(lhs, rhs, _ratio(lhs, rhs), single_pipe_bound(c, run.physics.lam, length),
                          lhs == 0 and rhs == 0)


def check_reversed_pipe_inequality(run, edge: int, t: float) -> PipeInequality:
    """x=l trace on ``[t - l/2c, t + l/2c]`` against the x=0 trace on ``[t - 5l/2c, t + 5l/2c]``."""
    c = run.physics.c
    length = run.graph.edge(edge).length
    tau = length / c
    if t <= 2.5 * tau or t + 2.5 * tau > run.t_max + 0.5 * run.dt:
        raise AnalysisError("HorizonTooShort",
                            f"need 5l/2c < t <= t_max - 5l/2c, got t={t:g}, l/c={tau:g}")
    start, end = _edge_sides(run, edge)
    lhs = trace_l2(run.side_trace(end), (t - 0.5 * tau, t + 0.5 * tau))
    rhs = trace_l2(run.side_trace(start), (t - 2.5 * tau, t + 2.5 * tau))
    return PipeInequality(lhs, rhs, _ratio(lhs, rhs), reversed_pipe_bound(c, run.physics.lam, length),
                          lhs == 0 and rhs == 0)


@dataclass
class DecayFit:
    """Log-linear fit ``L(t) ~ c1 * exp(-mu t)``.

    ``mu`` is the rate of the squared norm; the field amplitude decays at
    ``field_rate = mu / 2``.  ``c_tilde`` is the largest observed
    ``L(t+T) / L(t-T)`` and ``mu_from_c_tilde = -ln(c_tilde) / 2T``.
    """

    mu: float
    c1: float
    r2: float
    window: tuple[float, float]
    n_points: int
    horizon: float | None = None
    c_tilde: float = math.nan
    extinction_time: float | None = None

    @property
    def field_rate(self) -> float:
        return self.mu / 2

    @property
    def mu_from_c_tilde(self) -> float:
        if self.horizon is None or not (0 < self.c_tilde < 1):
            return math.inf if self.c_tilde == 0 else math.nan
        return -math.log(self.c_tilde) / (2 * self.horizon)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["field_rate"] = self.field_rate
        d["mu_from_c_tilde"] = self.mu_from_c_tilde
        return d


def fit_decay(times, values, window: tuple[float, float] | None = None, horizon: float | None = None,
              floor: float = DEFAULT_FLOOR) -> DecayFit:
    """Least-squares line through ``(t, log L)`` on a window.

    Parameters
    ----------
    times, values : array_like
        Uniformly spaced samples of L(t).
    window : (t0, t1), optional
        Defaults to ``[2 * horizon, t_end]`` if ``horizon`` is given and
        to the whole record otherwise.  Samples with ``L <= floor`` are
        excluded.
    horizon : float, optional
        T for the two-step contraction ``L(t+T) <= C~ L(t-T)``.

    Raises
    ------
    AnalysisError
        ``NonPositiveL`` if fewer than two samples exceed the floor, and
        ``WindowOutOfRange`` for windows outside the record.
    """
    t = np.asarray(times, dtype=float)
    L = np.asarray(values, dtype=float)
    if window is None:
        window = (2 * horizon if horizon is not None else t[0], t[-1])
    t0, t1 = window
    eps = 1e-9 * max(1.0, abs(t[-1]))
    if t0 < t[0] - eps or t1 > t[-1] + eps or t1 < t0:
        raise AnalysisError("WindowOutOfRange", f"window {window} outside [{t[0]:g}, {t[-1]:g}]")
    sel = (t >= t0 - eps) & (t <= t1 + eps)
    below = np.nonzero(L <= floor)[0]
    extinction = float(t[below[0]]) if len(below) else None
    mask = sel & (L > floor)
    n = int(mask.sum())
    if n < 2:
        raise AnalysisError("NonPositiveL", f"only {n} sample(s) above {floor:g} in window {window}")
    x = t[mask]
    y = np.log(L[mask])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    ss_res = float((resid**2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    c_tilde = math.nan
    if horizon is not None and len(t) > 1:
        dt = t[1] - t[0]
        K = int(round(horizon / dt))
        if 0 < K and 2 * K < len(t):
            a = L[: len(t) - 2 * K]
            b = L[2 * K:]
            ok = a > floor
            if ok.any():
                c_tilde = float((b[ok] / a[ok]).max())
    return DecayFit(mu=float(-slope), c1=float(math.exp(intercept)), r2=r2,
                    window=(float(t0), float(t1)), n_points=n, horizon=horizon,
                    c_tilde=c_tilde, extinction_time=extinction)


def coupling_energy_residual(incoming) -> np.ndarray:
    """``sum(out^2) - sum(in^2)`` of the junction map over the last axis."""
    from .solver import apply_coupling
    incoming = np.asarray(incoming, dtype=float)
    out = apply_coupling(incoming)
    return (out**2).sum(axis=-1) - (incoming**2).sum(axis=-1)


def node_energy_residual(run, node: int, step: int | None = None) -> float:
    """Energy balance ``sum(out^2 - in^2)`` at an inner node from recorded traces.

    Returns the value at ``step`` or, if omitted, the largest absolute
    residual over all recorded steps.
    """
    idx = [k for k, s in enumerate(run.sides) if s.node == node]
    if len(idx) < 2:
        raise AnalysisError("NotInnerNode", f"node {node} is not an inner node")
    starts = np.array([run.sides[k].endpoint == START for k in idx])
    p = run.side_plus[:, idx]
    m = run.side_minus[:, idx]
    inn = np.where(starts, m, p)
    out = np.where(starts, p, m)
    res = (out**2).sum(axis=1) - (inn**2).sum(axis=1)
    if step is not None:
        return float(res[step])
    return float(np.abs(res).max())


def is_monotone(values, rel_tol: float = 1e-10) -> bool:
    """``L[k+1] <= L[k] + rel_tol * L[0]`` for every step."""
    v = np.asarray(values, dtype=float)
    return bool((np.diff(v) <= rel_tol * v[0]).all())


def reports_to_csv(reports) -> str:
    """Flat CSV of observability reports (one row each)."""
    buf = io.StringIO()
    rows = [r.to_dict() if hasattr(r, "to_dict") else dict(r._asdict()) for r in reports]
    if not rows:
        return ""
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]))
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()
