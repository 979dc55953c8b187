"""Observer-based state estimation for 2x2 hyperbolic systems on networks."""

from .network import (NetworkError, NetworkGraph, NodeSide, SensorPlacement, auto_placement,
                      cut_cycles, cycle_basis, find_first_order_boundary_node, is_tree,
                      reduce_once, validate)
from .solver import (BoundaryData, InitialData, LinearFriction, Physics, SemilinearFriction,
                     SimulationResult, apply_coupling, build_grids, run)
from .analysis import (check_observability, check_reversed_pipe_inequality,
                       check_single_pipe_observability, fit_decay, l2_network, trace_l2)
from .observer import MeasurementPlan, run_difference_direct, run_observer

__version__ = "0.1.0"

__all__ = [
    "NetworkError", "NetworkGraph", "NodeSide", "SensorPlacement", "auto_placement",
    "cut_cycles", "cycle_basis", "find_first_order_boundary_node", "is_tree", "reduce_once",
    "validate",
    "BoundaryData", "InitialData", "LinearFriction", "Physics", "SemilinearFriction",
    "SimulationResult", "apply_coupling", "build_grids", "run",
    "check_observability", "check_reversed_pipe_inequality", "check_single_pipe_observability",
    "fit_decay", "l2_network", "trace_l2",
    "MeasurementPlan", "run_difference_direct", "run_observer",
]
