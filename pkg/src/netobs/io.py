"""File formats: initial/boundary data documents, run directories and manifests.

A run directory holds::

    manifest.json      how the run was produced (argv, parameters, versions)
    network.json       the simulated network
    L.csv              time,L
    edge_l2.csv        time,<one column per edge>
    traces/*.csv       time,plus,minus at every edge end and probe
    final_state.csv    edge,x,plus,minus
    summary.txt        human-readable report

Floats are written with 17 significant digits so that ``load_run``
recovers the recorded arrays bit for bit.
"""

from __future__ import annotations

import json
import platform
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .network import END, START, NetworkGraph, NodeSide, load_network, save_network
from .solver import (BoundaryData, Constant, ConstantProfile, EdgeField, InitialData, Physics,
                     SampledProfile, SemilinearFriction, Sine, SimulationResult, SystemState,
                     Table, Zero)

FLOAT_FMT = "%.17g"


class FormatError(ValueError):
    """A data file does not follow the expected layout."""


# ---------------------------------------------------------------------------
# initial and boundary data documents


def _read_doc(source) -> dict:
    if isinstance(source, dict):
        return source
    try:
        return json.loads(Path(source).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{source}: not valid JSON ({exc})") from None


def initial_data_from_dict(doc: dict) -> InitialData:
    """``{"edges": {"<id>": {"constant": [p, m]} | {"samples": [[x, p, m], ...]}}}``."""
    if not isinstance(doc, dict) or not isinstance(doc.get("edges"), dict):
        raise FormatError("initial data needs an 'edges' object")
    profiles = {}
    for key, entry in doc["edges"].items():
        try:
            eid = int(key)
        except ValueError:
            raise FormatError(f"edge id {key!r} is not an integer") from None
        if not isinstance(entry, dict) or len(entry) != 1:
            raise FormatError(f"edge {key}: expected exactly one of 'constant', 'samples'")
        kind, val = next(iter(entry.items()))
        try:
            if kind == "constant":
                p, m = val
                profiles[eid] = ConstantProfile(float(p), float(m))
            elif kind == "samples":
                profiles[eid] = SampledProfile.from_rows(val)
            else:
                raise FormatError(f"edge {key}: unknown profile kind {kind!r}")
        except (TypeError, ValueError) as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"edge {key}: bad {kind} profile ({exc})") from None
    return InitialData(profiles)


def initial_data_to_dict(ic: InitialData) -> dict:
    edges = {}
    for eid in sorted(ic.profiles):
        prof = ic.profiles[eid]
        if isinstance(prof, ConstantProfile):
            edges[str(eid)] = {"constant": [prof.plus, prof.minus]}
        elif isinstance(prof, SampledProfile):
            edges[str(eid)] = {"samples": [list(r) for r in zip(prof.x, prof.plus, prof.minus)]}
        else:
            raise FormatError(f"edge {eid}: profile {type(prof).__name__} has no file form")
    return {"edges": edges}


def load_initial_data(source) -> InitialData:
    return initial_data_from_dict(_read_doc(source))


def boundary_data_from_dict(doc: dict) -> BoundaryData:
    """``{"nodes": {"<id>": "zero" | {"constant": b} | {"sine": [amp, freq]} | {"table": [[t, v], ...]}}}``."""
    if not isinstance(doc, dict) or not isinstance(doc.get("nodes"), dict):
        raise FormatError("boundary data needs a 'nodes' object")
    signals = {}
    for key, entry in doc["nodes"].items():
        try:
            nid = int(key)
        except ValueError:
            raise FormatError(f"node id {key!r} is not an integer") from None
        if entry == "zero":
            signals[nid] = Zero()
            continue
        if not isinstance(entry, dict) or len(entry) != 1:
            raise FormatError(f"node {key}: expected one of 'zero', 'constant', 'sine', 'table'")
        kind, val = next(iter(entry.items()))
        try:
            if kind == "constant":
                signals[nid] = Constant(float(val))
            elif kind == "sine":
                amp, freq = val
                signals[nid] = Sine(float(amp), float(freq))
            elif kind == "table":
                ts, vs = zip(*[(float(a), float(b)) for a, b in val])
                signals[nid] = Table(ts, vs)
            else:
                raise FormatError(f"node {key}: unknown signal kind {kind!r}")
        except (TypeError, ValueError) as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"node {key}: bad {kind} signal ({exc})") from None
    return BoundaryData(signals)


def boundary_data_to_dict(bc: BoundaryData) -> dict:
    nodes = {}
    for nid in sorted(bc.signals):
        sig = bc.signals[nid]
        if isinstance(sig, Zero):
            nodes[str(nid)] = "zero"
        elif isinstance(sig, Constant):
            nodes[str(nid)] = {"constant": sig.value}
        elif isinstance(sig, Sine):
            nodes[str(nid)] = {"sine": [sig.amp, sig.freq]}
        elif isinstance(sig, Table):
            nodes[str(nid)] = {"table": [[a, b] for a, b in zip(sig.times, sig.values)]}
        else:
            raise FormatError(f"node {nid}: signal {type(sig).__name__} has no file form")
    return {"nodes": nodes}


def load_boundary_data(source) -> BoundaryData:
    return boundary_data_from_dict(_read_doc(source))


def physics_to_dict(physics: Physics) -> dict:
    return physics.describe()


def physics_from_dict(doc: dict) -> Physics:
    kind = doc.get("friction", "none")
    c = float(doc.get("c", 1.0))
    if kind == "linear":
        return Physics.linear(float(doc["lambda"]), c)
    if kind == "semilinear":
        return Physics(c, SemilinearFriction(float(doc["gamma"])))
    return Physics(c)


# ---------------------------------------------------------------------------
# manifest


@dataclass
class RunManifest:
    """Everything needed to repeat a run: the argv, resolved parameters,
    library versions, the seed and the files written."""

    command: str
    argv: list[str]
    parameters: dict
    physics: dict
    dt: float
    t_max: float
    seed: int | None = None
    versions: dict = field(default_factory=dict)
    threads: int = 1
    wall_time: float = 0.0
    files: list[str] = field(default_factory=list)

    @staticmethod
    def current_versions() -> dict:
        return {"netobs": __version__, "numpy": np.__version__, "python": platform.python_version()}

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "RunManifest":
        return cls.from_json(Path(path).read_text())


# ---------------------------------------------------------------------------
# run directories


def write_csv(path, header: list[str], columns) -> None:
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    np.savetxt(path, data, fmt=FLOAT_FMT, delimiter=",", header=",".join(header), comments="")


def read_csv(path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def _side_file(side: NodeSide) -> str:
    return f"edge{side.edge}_{'start' if side.endpoint == START else 'end'}.csv"


def _probe_file(edge: int, x: float) -> str:
    return f"probe_edge{edge}_x{x!r}.csv"


_SIDE_RE = re.compile(r"edge(\d+)_(start|end)\.csv$")
_PROBE_RE = re.compile(r"probe_edge(\d+)_x(.+)\.csv$")


def write_run(result: SimulationResult, out_dir) -> list[str]:
    """Write all recorded arrays of ``result``; returns the relative file names."""
    out = Path(out_dir)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    files = []
    save_network(result.graph, out / "network.json")
    files.append("network.json")
    write_csv(out / "L.csv", ["time", "L"], [result.times, result.L])
    files.append("L.csv")
    write_csv(out / "edge_l2.csv", ["time"] + [f"edge{e}" for e in result.edge_ids],
              [result.times] + [result.edge_l2[:, i] for i in range(len(result.edge_ids))])
    files.append("edge_l2.csv")
    for k, side in enumerate(result.sides):
        name = "traces/" + _side_file(side)
        write_csv(out / name, ["time", "plus", "minus"],
                  [result.times, result.side_plus[:, k], result.side_minus[:, k]])
        files.append(name)
    for k, (e, x) in enumerate(result.probes):
        name = "traces/" + _probe_file(e, x)
        write_csv(out / name, ["time", "plus", "minus"],
                  [result.times, result.probe_plus[:, k], result.probe_minus[:, k]])
        files.append(name)
    if result.final is not None:
        rows = []
        for e in sorted(result.final.fields):
            f = result.final.fields[e]
            x = np.arange(len(f.plus)) * f.dx
            rows.append(np.column_stack([np.full(len(x), e), x, f.plus, f.minus]))
        data = np.vstack(rows)
        write_csv(out / "final_state.csv", ["edge", "x", "plus", "minus"], data.T)
        files.append("final_state.csv")
    return files


def load_run(run_dir) -> SimulationResult:
    """Rebuild a ``SimulationResult`` from a run directory."""
    d = Path(run_dir)
    if not (d / "manifest.json").exists():
        raise FormatError(f"{d} is not a run directory (no manifest.json)")
    manifest = RunManifest.load(d / "manifest.json")
    graph: NetworkGraph = load_network(d / "network.json")
    _, Ld = read_csv(d / "L.csv")
    times, L = Ld[:, 0].copy(), Ld[:, 1].copy()
    header, El = read_csv(d / "edge_l2.csv")
    edge_ids = [int(h[4:]) for h in header[1:]]

    sides, sp, sm = [], [], []
    probes, pp, pm = [], [], []
    for path in sorted((d / "traces").glob("*.csv")):
        _, data = read_csv(path)
        m = _PROBE_RE.match(path.name)
        if m:
            probes.append((int(m.group(1)), float(m.group(2))))
            pp.append(data[:, 1])
            pm.append(data[:, 2])
            continue
        m = _SIDE_RE.match(path.name)
        if m:
            e = graph.edge(int(m.group(1)))
            endpoint = START if m.group(2) == "start" else END
            sides.append(NodeSide(e.id, e.source if endpoint == START else e.target, endpoint))
            sp.append(data[:, 1])
            sm.append(data[:, 2])
    order = sorted(range(len(sides)), key=lambda k: (sides[k].edge, sides[k].endpoint))
    sides = [sides[k] for k in order]
    sp = [sp[k] for k in order]
    sm = [sm[k] for k in order]
    porder = sorted(range(len(probes)), key=lambda k: probes[k])
    probes = [probes[k] for k in porder]

    final = None
    if (d / "final_state.csv").exists():
        _, F = read_csv(d / "final_state.csv")
        dx = float(manifest.physics.get("c", 1.0)) * manifest.dt
        fields = {}
        for e in edge_ids:
            rows = F[F[:, 0] == e]
            fields[e] = EdgeField(rows[:, 2].copy(), rows[:, 3].copy(), dx)
        final = SystemState(float(times[-1]), fields)

    def stack(cols):
        return np.column_stack(cols) if cols else np.zeros((len(times), 0))

    return SimulationResult(
        graph=graph, physics=physics_from_dict(manifest.physics), dt=manifest.dt, times=times, L=L,
        edge_ids=edge_ids, edge_l2=El[:, 1:].copy(), sides=sides, side_plus=stack(sp),
        side_minus=stack(sm), probes=probes, probe_plus=stack([pp[k] for k in porder]),
        probe_minus=stack([pm[k] for k in porder]), final=final,
    )


__all__ = [
    "FormatError",
    "RunManifest",
    "initial_data_from_dict",
    "initial_data_to_dict",
    "load_initial_data",
    "boundary_data_from_dict",
    "boundary_data_to_dict",
    "load_boundary_data",
    "physics_from_dict",
    "physics_to_dict",
    "write_csv",
    "read_csv",
    "write_run",
    "load_run",
]
