"""``netobs`` command line.

Exit codes: 0 success, 2 invalid input (network, data files, grid,
sensors, analysis horizon), 3 runtime failure of the solver.
"""

from __future__ import annotations

import argparse
import inspect
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import scenarios
from .analysis import (AnalysisError, DecayFit, check_observability, fit_decay, is_monotone,
                       reports_to_csv, required_horizon)
from .io import (FormatError, RunManifest, boundary_data_to_dict, initial_data_to_dict,
                 load_boundary_data, load_initial_data, load_run, physics_to_dict, write_csv,
                 write_run)
from .network import (NetworkError, NetworkGraph, SensorPlacement, auto_placement, cycle_basis,
                      load_network, save_network, to_json)
from .observer import MeasurementPlan, run_observer
from .solver import (BoundaryData, GridError, InitialData, Physics,
                     SemilinearFriction, SensorOffGrid, SolverError, run)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_RUNTIME = 3


class InputError(ValueError):
    pass


# ---------------------------------------------------------------------------
# argument helpers


def _sensor_arg(text: str) -> tuple[int, float]:
    try:
        e, x = text.split(":")
        return int(e), float(x)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected EDGE:POSITION, got {text!r}") from None


def _add_problem_args(p: argparse.ArgumentParser, observer: bool = False) -> None:
    src = p.add_argument_group("problem")
    src.add_argument("--scenario", choices=sorted(scenarios.SCENARIOS),
                     help="built-in scenario (network, data, step and horizon)")
    src.add_argument("--network", type=Path, help="network file")
    src.add_argument("--ic", type=Path, help="initial data file" + (" of the plant" if observer else ""))
    if observer:
        src.add_argument("--observer-ic", type=Path, help="initial data file of the observer (default zero)")
    src.add_argument("--bc", type=Path, help="boundary data file")
    src.add_argument("--dt", type=float, help="time step (default: scenario value or 0.01)")
    src.add_argument("--t-max", type=float, help="final time (default: scenario value or 1)")
    src.add_argument("--c", type=float, help="wave speed (default 1)")
    fr = src.add_mutually_exclusive_group()
    fr.add_argument("--lambda", dest="lam", type=float, help="linear friction parameter")
    fr.add_argument("--gamma", type=float, help="semilinear friction parameter")
    par = p.add_argument_group("scenario parameters")
    par.add_argument("--a", type=float, help="cycle amplitude")
    par.add_argument("--m", type=int, help="number of star edges")
    par.add_argument("--n-inner", type=int, help="inner nodes of a random tree")
    par.add_argument("--seed", type=int, help="random seed of generated data")
    out = p.add_argument_group("output")
    out.add_argument("--probe", type=_sensor_arg, action="append", default=[],
                     metavar="EDGE:X", help="record a trace at an interior point (repeatable)")
    out.add_argument("--window", type=float, nargs=2, metavar=("T0", "T1"), help="decay-fit window")
    out.add_argument("--out", type=Path, default=Path("netobs-run"), help="output directory")


def _scenario_kwargs(args, builder) -> dict:
    wanted = {"a": args.a, "m": args.m, "n_inner": args.n_inner, "seed": args.seed,
              "dt": args.dt, "t_max": args.t_max, "c": args.c, "lam": args.lam}
    params = inspect.signature(builder).parameters
    return {k: v for k, v in wanted.items() if v is not None and k in params}


def _physics(args, base: Physics | None) -> Physics:
    c = args.c if args.c is not None else (base.c if base else 1.0)
    if args.gamma is not None:
        return Physics(c, SemilinearFriction(args.gamma))
    if args.lam is not None:
        return Physics.linear(args.lam, c)
    if base is not None:
        return Physics(c, base.friction)
    return Physics(c)


def _load_problem(args, observer: bool = False) -> dict:
    """Resolve the network, physics, data, step and horizon from the arguments."""
    if args.scenario is None and args.network is None:
        raise InputError("give --scenario or --network")
    if args.scenario is not None:
        builder = scenarios.SCENARIOS[args.scenario]
        sc = builder(**_scenario_kwargs(args, builder))
        graph, plant_ic, obs_ic, bc = sc.graph, sc.plant_ic, sc.observer_ic, sc.bc
        physics, dt, t_max, plan = _physics(args, sc.physics), sc.dt, sc.t_max, sc.plan
    else:
        graph = None
        plant_ic, obs_ic, bc = InitialData.zero(), InitialData.zero(), BoundaryData()
        physics, dt, t_max, plan = _physics(args, None), 0.01, 1.0, None
    if args.network is not None:
        graph = load_network(args.network)
    if args.ic is not None:
        plant_ic = load_initial_data(args.ic)
    if observer and args.observer_ic is not None:
        obs_ic = load_initial_data(args.observer_ic)
    if args.bc is not None:
        bc = load_boundary_data(args.bc)
    if args.dt is not None:
        dt = args.dt
    if args.t_max is not None:
        t_max = args.t_max
    if not dt > 0 or not t_max >= 0:
        raise InputError(f"need dt > 0 and t_max >= 0, got dt={dt}, t_max={t_max}")
    for e in list(plant_ic.profiles) + list(obs_ic.profiles):
        if e not in graph.edge_ids:
            raise InputError(f"initial data given for unknown edge {e}")
    for n in bc.signals:
        if not graph.has_node(n) or not graph.is_boundary(n):
            raise InputError(f"boundary data given for node {n}, which is not a boundary node")
    return dict(graph=graph, physics=physics, plant_ic=plant_ic, observer_ic=obs_ic, bc=bc,
                dt=dt, t_max=t_max, plan=plan)


def _threads() -> int:
    raw = os.environ.get("NETOBS_THREADS")
    if raw is None or raw == "":
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise InputError(f"NETOBS_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise InputError(f"NETOBS_THREADS must be a positive integer, got {raw!r}")
    return n


def _doc_or_none(fn, obj):
    try:
        return fn(obj)
    except FormatError:
        return None


# ---------------------------------------------------------------------------
# summaries


def _mode(physics: Physics) -> str:
    return "no-friction" if physics.friction is None else "friction"


def _decay(times, L, graph: NetworkGraph, physics: Physics, window=None):
    """Fit on the requested window, else on [2T, t_max], else on the whole record."""
    T = required_horizon(graph, physics.c, _mode(physics))
    note = ""
    if window is not None:
        return fit_decay(times, L, window=tuple(window), horizon=T), note
    if 2 * T < times[-1]:
        try:
            return fit_decay(times, L, horizon=T), note
        except AnalysisError:
            pass
    note = " (whole record; the default window [2T, t_max] holds no usable samples)"
    return fit_decay(times, L, window=(times[0], times[-1]), horizon=T), note


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def _summary_lines(command: str, graph: NetworkGraph, physics: Physics, dt: float, result,
                   window=None, observed_graph: NetworkGraph | None = None,
                   sync_line: bool = False) -> tuple[list[str], DecayFit | None]:
    L = result.L
    lines = [
        f"command: {command}",
        f"network: {len(graph.node_ids)} nodes, {len(graph.edge_ids)} edges, "
        f"{len(graph.inner_nodes)} inner, {len(graph.boundary_nodes)} boundary, "
        f"cyclomatic number {graph.cyclomatic_number}",
        "physics: " + ", ".join(f"{k}={_fmt(v)}" for k, v in physics.describe().items()),
        f"dt: {_fmt(dt)}",
        f"t_max: {_fmt(result.t_max)}",
        f"steps: {len(result.times) - 1}",
        f"L(0): {_fmt(float(L[0]))}",
        f"L(t_max): {_fmt(float(L[-1]))}",
        f"L monotone non-increasing: {'yes' if L[0] == 0 or is_monotone(L) else 'no'}",
    ]
    fit = None
    g = observed_graph if observed_graph is not None else graph
    if L[0] > 0:
        try:
            fit, note = _decay(result.times, L, g, physics, window)
            lines += [
                f"decay window: [{_fmt(fit.window[0])}, {_fmt(fit.window[1])}]{note}",
                f"decay rate of L (mu): {_fmt(fit.mu)}",
                f"decay rate of the field amplitude (mu/2): {_fmt(fit.field_rate)}",
                f"decay fit r2: {_fmt(fit.r2)}",
                f"contraction C~ over 2T (T={_fmt(fit.horizon)}): {_fmt(fit.c_tilde)}",
            ]
        except AnalysisError as exc:
            lines.append(f"decay: not fitted ({exc})")
        below = np.nonzero(L <= 1e-24)[0]
        if len(below):
            lines.append(f"L below 1e-24 from t = {_fmt(float(result.times[below[0]]))}")
    if sync_line:
        lines.append("synchronization: " + _sync_verdict(L, fit))
    return lines, fit


def _sync_verdict(L, fit: DecayFit | None) -> str:
    if L[0] == 0:
        return "trivial (L identically zero)"
    if L[-1] > 0.99 * L[0]:
        return "FAILED (𝓛 non-decaying)"
    if fit is None or fit.mu > 0:
        return "μ>0"
    return "FAILED (𝓛 non-decaying)"


def _finish(args, command: str, argv, problem: dict, files: list[str], lines: list[str],
            started: float, extra: dict | None = None) -> None:
    out: Path = args.out
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    files = files + ["summary.txt", "manifest.json"]
    params = {
        "scenario": args.scenario,
        "network": json.loads(to_json(problem["graph"])),
        "ic": _doc_or_none(initial_data_to_dict, problem["plant_ic"]),
        "bc": _doc_or_none(boundary_data_to_dict, problem["bc"]),
        "probes": [list(p) for p in args.probe],
    }
    params.update(extra or {})
    manifest = RunManifest(
        command=command, argv=list(argv), parameters=params,
        physics=physics_to_dict(problem["physics"]), dt=problem["dt"], t_max=problem["t_max"],
        seed=args.seed, versions=RunManifest.current_versions(), threads=_threads(),
        wall_time=time.perf_counter() - started, files=files,
    )
    manifest.save(out / "manifest.json")
    print("\n".join(lines))
    print(f"output: {out}")


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(args, argv=()) -> int:
    started = time.perf_counter()
    _threads()
    pr = _load_problem(args)
    result = run(pr["graph"], pr["physics"], pr["plant_ic"], pr["bc"], pr["dt"], pr["t_max"],
                 probes=args.probe)
    args.out.mkdir(parents=True, exist_ok=True)
    files = write_run(result, args.out)
    lines, _ = _summary_lines("simulate", pr["graph"], pr["physics"], pr["dt"], result, args.window)
    _finish(args, "simulate", argv, pr, files, lines, started)
    return EXIT_OK


def cmd_observe(args, argv=()) -> int:
    started = time.perf_counter()
    _threads()
    pr = _load_problem(args, observer=True)
    graph = pr["graph"]
    if args.auto_sensors:
        plan = MeasurementPlan.auto(graph)
    elif args.sensor:
        plan = MeasurementPlan(SensorPlacement(tuple(args.sensor)))
    else:
        plan = MeasurementPlan.coerce(pr["plan"], graph) if args.scenario_sensors else MeasurementPlan()
    orun = run_observer(graph, pr["physics"], pr["plant_ic"], pr["observer_ic"], pr["bc"], plan,
                        pr["dt"], pr["t_max"], probes=args.probe)
    args.out.mkdir(parents=True, exist_ok=True)
    files = write_run(orun.difference, args.out)
    write_csv(args.out / "plant_L.csv", ["time", "L"], [orun.plant.times, orun.plant.L])
    files.append("plant_L.csv")
    observed = orun.cut.graph if orun.cut is not None else graph
    lines, _ = _summary_lines("observe", graph, pr["physics"], pr["dt"], orun.difference,
                              args.window, observed_graph=observed, sync_line=True)
    sensors = list(plan.interior)
    lines.insert(1, f"interior sensors: {len(sensors)}"
                 + "".join(f"; edge {e} at x={_fmt(x)}" for e, x in sensors))
    if observed.cyclomatic_number > 0:
        lines.insert(2, f"warning: observer network keeps {observed.cyclomatic_number} unsensed cycle(s)")
    extra = {"observer_ic": _doc_or_none(initial_data_to_dict, pr["observer_ic"]),
             "sensors": [list(s) for s in sensors]}
    _finish(args, "observe", argv, pr, files, lines, started, extra)
    return EXIT_OK


def cmd_analyze(args, argv=()) -> int:
    result = load_run(args.run)
    manifest = RunManifest.load(args.run / "manifest.json")
    mode = args.mode or _mode(result.physics)
    sensors = manifest.parameters.get("sensors") or []
    graph = result.graph
    T = args.horizon if args.horizon is not None else required_horizon(graph, result.physics.c, mode)
    times = [args.t] if args.t is not None else [T]
    reports = [check_observability(result, t, T, mode) for t in times]
    out: Path = args.out if args.out is not None else args.run / "analysis"
    out.mkdir(parents=True, exist_ok=True)
    (out / "observability.csv").write_text(reports_to_csv(reports))
    n_inner = len(graph.inner_nodes)
    lines = [
        "command: analyze",
        f"run: {args.run}",
        f"mode: {mode}",
        f"inner nodes N: {n_inner}",
        f"l_max: {_fmt(graph.l_max)}",
        f"horizon T: {_fmt(T)} (required {_fmt(reports[0].required_T)})",
    ]
    if sensors:
        lines.append(f"note: run used {len(sensors)} interior sensor(s); the boundary-only "
                     "inequality below ignores their measurements")
    for r in reports:
        lines.append(f"observability at t={_fmt(r.t)}: lhs={_fmt(r.lhs)} rhs={_fmt(r.rhs)} "
                     f"ratio={_fmt(r.ratio)}")
        if math.isinf(r.ratio):
            lines.append("observability: FAILED (boundary traces vanish while the state does not)")
    fit_lines, fit = _summary_lines("analyze", graph, result.physics, result.dt, result, args.window)
    lines += fit_lines[6:]
    if fit is not None:
        (out / "decay.json").write_text(json.dumps(fit.to_dict(), indent=2, default=float) + "\n")
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK


def cmd_place_sensors(args, argv=()) -> int:
    if args.scenario is not None:
        graph = scenarios.SCENARIOS[args.scenario]().graph
    elif args.network is not None:
        graph = load_network(args.network)
    else:
        raise InputError("give --scenario or --network")
    basis = cycle_basis(graph)
    placement = auto_placement(graph)
    k = len(placement)
    print(f"cyclomatic number: {graph.cyclomatic_number}")
    for i, cyc in enumerate(basis):
        print(f"cycle {i}: edges {', '.join(str(e) for e in cyc)}")
    print(f"{k} sensor{'s' if k != 1 else ''} required")
    for e, x in placement:
        print(f"sensor: edge {e} at x={_fmt(x)}")
    if args.out is not None:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(json.dumps({"sensors": [list(s) for s in placement]}, indent=2) + "\n")
    return EXIT_OK


def cmd_scenario(args, argv=()) -> int:
    if args.action == "list":
        for name in sorted(scenarios.SCENARIOS):
            doc = inspect.getdoc(scenarios.SCENARIOS[name]) or ""
            print(f"{name}: {doc.splitlines()[0] if doc else ''}")
        return EXIT_OK
    if args.name is None:
        raise InputError("scenario export needs a scenario name")
    builder = scenarios.SCENARIOS[args.name]
    sc = builder(**_scenario_kwargs(args, builder))
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    save_network(sc.graph, out / "network.json")
    (out / "ic.json").write_text(json.dumps(initial_data_to_dict(sc.plant_ic), indent=2) + "\n")
    (out / "observer_ic.json").write_text(json.dumps(initial_data_to_dict(sc.observer_ic), indent=2) + "\n")
    (out / "bc.json").write_text(json.dumps(boundary_data_to_dict(sc.bc), indent=2) + "\n")
    meta = {"name": sc.name, "dt": sc.dt, "t_max": sc.t_max, "physics": physics_to_dict(sc.physics),
            "sensors": [list(s) for s in sc.plan] if sc.plan is not None else []}
    (out / "scenario.json").write_text(json.dumps(meta, indent=2) + "\n")
    print(f"exported {sc.name} to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="netobs", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate one system and export traces, L(t) and the final state")
    _add_problem_args(s)
    s.set_defaults(func=cmd_simulate)

    o = sub.add_parser("observe", help="run plant and observer and export their difference")
    _add_problem_args(o, observer=True)
    g = o.add_mutually_exclusive_group()
    g.add_argument("--sensor", type=_sensor_arg, action="append", default=[], metavar="EDGE:X",
                   help="interior sensor (repeatable)")
    g.add_argument("--auto-sensors", action="store_true", help="one sensor per independent cycle")
    g.add_argument("--scenario-sensors", action="store_true", help="use the scenario's own sensors")
    o.set_defaults(func=cmd_observe)

    a = sub.add_parser("analyze", help="observability and decay reports for a stored run")
    a.add_argument("run", type=Path, help="run directory written by simulate or observe")
    a.add_argument("--mode", choices=["no-friction", "friction"])
    a.add_argument("--t", type=float, help="time of the observability check (default T)")
    a.add_argument("--horizon", type=float, help="half-width T of the trace window")
    a.add_argument("--window", type=float, nargs=2, metavar=("T0", "T1"), help="decay-fit window")
    a.add_argument("--out", type=Path, help="report directory (default RUN/analysis)")
    a.set_defaults(func=cmd_analyze)

    ps = sub.add_parser("place-sensors", help="cycle basis and automatic sensor placement")
    ps.add_argument("--network", type=Path)
    ps.add_argument("--scenario", choices=sorted(scenarios.SCENARIOS))
    ps.add_argument("--out", type=Path, help="write the placement as JSON")
    ps.set_defaults(func=cmd_place_sensors)

    sc = sub.add_parser("scenario", help="list or export built-in scenarios")
    sc.add_argument("action", choices=["list", "export"])
    sc.add_argument("name", nargs="?", choices=sorted(scenarios.SCENARIOS))
    sc.add_argument("--out", type=Path, default=Path("netobs-scenario"))
    for flag, typ in (("--a", float), ("--m", int), ("--n-inner", int), ("--seed", int),
                      ("--dt", float), ("--t-max", float), ("--c", float)):
        sc.add_argument(flag, type=typ)
    sc.add_argument("--lambda", dest="lam", type=float)
    sc.set_defaults(func=cmd_scenario)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, argv)
    except GridError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.suggested_dt is not None:
            print(f"suggested dt: {exc.suggested_dt:.17g}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (NetworkError, SensorOffGrid, AnalysisError, FormatError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
