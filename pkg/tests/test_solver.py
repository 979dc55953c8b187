import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from netobs.analysis import is_monotone
from netobs.network import START, NetworkGraph
from netobs.scenarios import compatible_ic, cycle_counterexample, five_pipe_tree, random_tree_graph
from netobs.solver import (BoundaryData, Constant, ConstantProfile, FunctionProfile, GridError,
                           InitialData, Layout, Physics, SampledProfile, SemilinearFriction,
                           SensorOffGrid, Simulation, Sine, SolverError, Table, apply_coupling,
                           build_grids, run, suggest_dt)

LOOP = NetworkGraph([0], [(0, 0, 0, 1.0)])  # one edge closed on itself: periodic pipe


# ---------------------------------------------------------------------------
# junction map


def test_coupling_degree_two_passes_through():
    assert apply_coupling([3.0, -7.5]).tolist() == [-7.5, 3.0]


def test_coupling_degree_three_unit_input():
    np.testing.assert_allclose(apply_coupling([1.0, 0.0, 0.0]), [-1 / 3, 2 / 3, 2 / 3], atol=1e-15)


@pytest.mark.parametrize("a", [1.0, -2.5, 1e-3])
def test_coupling_cycle_compatibility_pattern(a):
    np.testing.assert_allclose(apply_coupling([a, -a, 0.0]), [-a, a, 0.0], atol=1e-15)


@settings(max_examples=300, deadline=None)
@given(arrays(np.float64, st.integers(1, 12), elements=st.floats(-1e3, 1e3)))
def test_coupling_is_an_orthogonal_involution(v):
    out = apply_coupling(v)
    scale = max(1.0, float((v * v).sum()))
    assert abs((out * out).sum() - (v * v).sum()) <= 1e-12 * scale
    assert abs(out.sum() - v.sum()) <= 1e-12 * max(1.0, float(np.abs(v).sum()))
    np.testing.assert_allclose(apply_coupling(out), v, atol=1e-12 * max(1.0, float(np.abs(v).max())))


# ---------------------------------------------------------------------------
# grids


def test_build_grids_exact_division():
    g = NetworkGraph(range(4), [(0, 0, 1, 1.0), (1, 1, 2, 1.0), (2, 1, 3, 2.0)])
    grids = build_grids(g, 0.25)
    assert [grids[e].n_cells for e in (0, 1, 2)] == [4, 4, 8]
    assert grids[2].x[-1] == pytest.approx(2.0)


def test_incommensurable_lengths_fail_with_suggestion():
    g = NetworkGraph(range(3), [(0, 0, 1, 1.0), (1, 1, 2, math.pi)])
    with pytest.raises(GridError) as exc:
        build_grids(g, 0.25)
    assert exc.value.code == "IncommensurableLengths"
    assert exc.value.suggested_dt is not None and exc.value.suggested_dt > 0


def test_suggested_dt_is_buildable():
    g = NetworkGraph(range(3), [(0, 0, 1, 1.0), (1, 1, 2, 1.5)])
    with pytest.raises(GridError) as exc:
        build_grids(g, 0.3)
    assert exc.value.suggested_dt == pytest.approx(0.25)
    build_grids(g, exc.value.suggested_dt)
    assert suggest_dt([1.0, 1.5], 1.0) == pytest.approx(0.5)
    assert suggest_dt([2.0, 3.0], 2.0, 0.2) == pytest.approx(1 / 6)


def test_non_positive_dt_rejected():
    with pytest.raises(GridError):
        build_grids(LOOP, 0.0)


# ---------------------------------------------------------------------------
# exact transport without friction


def test_zero_state_stays_zero():
    res = run(five_pipe_tree().graph, Physics(), InitialData.zero(), dt=0.1, t_max=3.0)
    assert not res.L.any() and not res.side_plus.any() and not res.side_minus.any()


def test_single_edge_empties_after_travel_time():
    g = NetworkGraph([0, 1], [(0, 0, 1, 1.0)])
    res = run(g, Physics(), InitialData.constant({0: (1.0, 0.0)}), dt=0.05, t_max=2.0)
    k = res.index_of(1.0)
    assert res.L[0] > 0
    assert not res.L[k:].any()


def test_t_max_zero_keeps_only_initial_snapshot():
    res = run(LOOP, Physics(), InitialData.constant({0: (1.0, 2.0)}), dt=0.1, t_max=0.0)
    assert res.times.tolist() == [0.0]
    assert res.L[0] == pytest.approx(5.0)


def test_single_pipe_matches_characteristics():
    """plus(t, x) = p0(x - c t) before the inflow front arrives, b(t - x / c) after."""
    c, dt = 2.0, 0.01
    g = NetworkGraph([0, 1], [(0, 0, 1, 1.0)])
    p0 = lambda x: np.sin(3 * x) + x**2
    m0 = lambda x: np.cos(2 * x)
    b_in = Sine(0.7, 1.3)
    b_out = Constant(0.25)
    ic = InitialData({0: FunctionProfile(lambda x: (p0(x), m0(x)))})
    res = run(g, Physics(c=c), ic, BoundaryData({0: b_in, 1: b_out}), dt=dt, t_max=1.0,
              probes=[(0, 15 * c * dt), (0, 35 * c * dt)])
    n = 50  # cells of size c dt
    for j in (15, 35):
        x = j * c * dt
        tr = res.probe_trace(0, x)
        t = tr.times
        k = np.arange(len(t))
        # feet of the characteristics; the corner values at t = 0 are the
        # boundary data because initial data are projected onto them
        plus = np.where(j > k, p0(x - c * t), [b_in(s) for s in t - x / c])
        minus = np.where(n - j > k, m0(x + c * t), 0.25)
        np.testing.assert_allclose(tr.plus, plus, atol=1e-12)
        np.testing.assert_allclose(tr.minus, minus, atol=1e-12)


def _reference_lossless(graph, ic, dt, n_steps, c=1.0):
    """Hand-rolled transport and junction update, one edge at a time."""
    dx = c * dt
    fields = {}
    for e in graph.edges:
        n = round(e.length / dx)
        x = np.arange(n + 1) * dx
        p, m = ic.evaluate(e.id, x)
        fields[e.id] = [list(p), list(m)]

    def nodes():
        for v in graph.node_ids:
            sides = graph.sides(v)
            ins = [fields[s.edge][1][0] if s.endpoint == START else fields[s.edge][0][-1] for s in sides]
            if len(sides) == 1:
                outs = [0.0]
            else:
                mean = sum(ins) / len(ins)
                outs = [2 * mean - a for a in ins]
            for s, o in zip(sides, outs):
                if s.endpoint == START:
                    fields[s.edge][0][0] = o
                else:
                    fields[s.edge][1][-1] = o

    nodes()
    for _ in range(n_steps):
        for e in fields:
            p, m = fields[e]
            fields[e] = [[0.0] + p[:-1], m[1:] + [0.0]]
        nodes()
    return fields


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 5), st.integers(0, 1000), st.integers(1, 120))
def test_lossless_solver_matches_reference(n_inner, seed, n_steps):
    g = random_tree_graph(n_inner, seed)
    ic = compatible_ic(g, seed)
    sim = Simulation(g, Physics(), ic, 0.05)
    for _ in range(n_steps):
        sim.step()
    ref = _reference_lossless(g, ic, 0.05, n_steps)
    state = sim.state()
    for e, (p, m) in ref.items():
        np.testing.assert_allclose(state.fields[e].plus, p, atol=1e-12)
        np.testing.assert_allclose(state.fields[e].minus, m, atol=1e-12)


def test_cycle_solution_is_constant_without_friction():
    sc = cycle_counterexample(a=1.0, lam=0.0)
    res = run(sc.graph, sc.physics, sc.plant_ic, dt=0.01, t_max=16.0)
    for e, f in res.final.fields.items():
        want = (1.0, -1.0) if e in (1, 2, 3, 4) else (0.0, 0.0)
        assert np.abs(f.plus - want[0]).max() == 0 and np.abs(f.minus - want[1]).max() == 0


def test_five_pipe_trace_values():
    sc = five_pipe_tree(dt=0.05)
    res = run(sc.graph, sc.physics, sc.plant_ic, dt=sc.dt, t_max=3.0)
    tr = res.node_trace(3, 3)
    assert tr.plus[res.index_of(0.5)] == pytest.approx(-1 / 3, abs=1e-15)
    assert tr.plus[res.index_of(1.5)] == pytest.approx(1 / 9, abs=1e-15)
    assert tr.plus[res.index_of(2.5)] == pytest.approx(-1 / 27, abs=1e-15)


def test_boundary_traces_carry_the_boundary_data_exactly():
    g = random_tree_graph(3, 5)
    signals = {n: Sine(1.0 + n, 0.5) for n in g.boundary_nodes}
    res = run(g, Physics.linear(0.3), compatible_ic(g, 2), BoundaryData(signals), dt=0.05, t_max=4.0)
    for n in g.boundary_nodes:
        side = g.boundary_side(n)
        tr = res.side_trace(side)
        out = tr.plus if side.endpoint == START else tr.minus
        want = np.array([signals[n](t) for t in res.times])
        assert np.array_equal(out, want)


def test_table_signal_interpolates_and_holds():
    tab = Table((0.0, 1.0, 2.0), (0.0, 2.0, 0.0))
    assert tab(0.5) == 1.0 and tab(3.0) == 0.0


def test_runs_are_deterministic():
    g = random_tree_graph(4, 3)
    a = run(g, Physics.linear(0.2), compatible_ic(g, 1), dt=0.05, t_max=5.0)
    b = run(g, Physics.linear(0.2), compatible_ic(g, 1), dt=0.05, t_max=5.0)
    assert np.array_equal(a.L, b.L) and np.array_equal(a.side_plus, b.side_plus)


# ---------------------------------------------------------------------------
# friction


def _loop_run(physics, dt, t_max, p0=1.5, m0=-0.5):
    return run(LOOP, physics, InitialData.constant({0: (p0, m0)}), dt=dt, t_max=t_max)


@pytest.mark.parametrize("lam", [0.3, 1.0])
def test_linear_friction_constant_state_oracle(lam):
    """d = p - m decays like exp(-2 lam t); p + m is conserved."""
    errs = []
    for dt in (0.02, 0.01, 0.005):
        f = _loop_run(Physics.linear(lam), dt, 2.0).final.fields[0]
        d_exact = 2.0 * math.exp(-2 * lam * 2.0)
        errs.append(np.abs(f.plus - f.minus - d_exact).max())
        np.testing.assert_allclose(f.plus + f.minus, 1.0, atol=1e-12)
    assert errs[0] < 1e-3
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5


def test_semilinear_friction_constant_state_oracle():
    """d' = -2 gamma |d| d, so d(t) = d0 / (1 + 2 gamma d0 t) for d0 > 0."""
    gamma = 0.8
    errs = []
    for dt in (0.02, 0.01, 0.005):
        f = _loop_run(Physics(1.0, SemilinearFriction(gamma)), dt, 2.0).final.fields[0]
        errs.append(np.abs(f.plus - f.minus - 2.0 / (1 + 2 * gamma * 2.0 * 2.0)).max())
    assert errs[0] < 1e-3
    assert errs[0] / errs[1] > 3.0 and errs[1] / errs[2] > 3.0


def test_semilinear_with_zero_gamma_is_lossless():
    g = random_tree_graph(3, 2)
    ic = compatible_ic(g, 7)
    a = run(g, Physics(1.0, SemilinearFriction(0.0)), ic, dt=0.05, t_max=3.0)
    b = run(g, Physics(), ic, dt=0.05, t_max=3.0)
    np.testing.assert_allclose(a.L, b.L, rtol=0, atol=1e-14)


@pytest.mark.parametrize("physics", [Physics(), Physics.linear(0.1), Physics.linear(2.0),
                                     Physics(1.0, SemilinearFriction(1.0))])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_energy_is_non_increasing_with_zero_boundary_data(physics, seed):
    g = random_tree_graph(4, seed)
    res = run(g, physics, compatible_ic(g, seed), dt=0.05, t_max=10.0)
    assert is_monotone(res.L, 1e-10)


def test_divergence_is_reported():
    ic = InitialData({0: ConstantProfile(float("nan"), 0.0)})
    with pytest.raises(SolverError) as exc:
        Simulation(LOOP, Physics(), ic, 0.1)
    assert exc.value.code == "NonFiniteState"
    sim = Simulation(LOOP, Physics(1.0, SemilinearFriction(1e3)), InitialData.constant({0: (1e100, -1e100)}), 0.1)
    with pytest.raises(SolverError), np.errstate(over="ignore", invalid="ignore"):
        for _ in range(10):
            sim.step()


def test_physics_validation():
    with pytest.raises(ValueError):
        Physics(c=0.0)
    with pytest.raises(ValueError):
        Physics.linear(-1.0)
    assert Physics.linear(0.0).friction is None
    assert Physics.linear(0.5).lam == 0.5


# ---------------------------------------------------------------------------
# layout helpers


def test_point_index_snaps_with_warning_and_rejects_ends():
    g = NetworkGraph([0, 1], [(0, 0, 1, 1.0)])
    layout = Layout(g, build_grids(g, 0.1))
    assert layout.point_index(0, 0.3) == 3
    with pytest.warns(UserWarning):
        assert layout.point_index(0, 0.33) == 3
    with pytest.raises(SensorOffGrid), pytest.warns(UserWarning):
        layout.point_index(0, 0.02, interior=True)
    with pytest.raises(SensorOffGrid):
        layout.point_index(0, 1.5)


def test_state_round_trip_through_layout():
    g = random_tree_graph(2, 1)
    sim = Simulation(g, Physics(), compatible_ic(g, 0), 0.05)
    p, m = sim.layout.from_state(sim.state())
    assert np.array_equal(p, sim.plus) and np.array_equal(m, sim.minus)


def test_sampled_profile_validation():
    with pytest.raises(ValueError):
        SampledProfile((0.0, 1.0), (1.0,), (1.0, 2.0))
    with pytest.raises(ValueError):
        SampledProfile((1.0, 0.0), (1.0, 1.0), (1.0, 1.0))
    prof = SampledProfile.from_rows([[0, 0, 1], [1, 2, 3]])
    p, m = prof(np.array([0.5]))
    assert p[0] == 1.0 and m[0] == 2.0


def test_compatible_ic_needs_no_projection():
    g = random_tree_graph(4, 11)
    ic = compatible_ic(g, 3)
    sim = Simulation(g, Physics(), ic, 0.05)
    for e in g.edge_ids:
        p, m = ic.evaluate(e, sim.grids[e].x)
        np.testing.assert_allclose(sim.state().fields[e].plus, p, atol=1e-14)
        np.testing.assert_allclose(sim.state().fields[e].minus, m, atol=1e-14)
