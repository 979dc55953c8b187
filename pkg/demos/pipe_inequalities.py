"""Single-pipe estimates checked on simulated data.

One pipe of length 1, a hat pulse as initial datum and a short inflow
pulse at the left end.  For each friction value we report the largest
ratio seen over all admissible times together with the constant it must
stay below.

Run:  python3 demos/pipe_inequalities.py
"""

import numpy as np

from netobs.analysis import check_reversed_pipe_inequality, check_single_pipe_observability
from netobs.network import NetworkGraph
from netobs.solver import BoundaryData, InitialData, Physics, SampledProfile, Table, run

pipe = NetworkGraph([0, 1], [(0, 0, 1, 1.0)])
pulse = SampledProfile((0.0, 0.35, 0.5, 0.65, 1.0), (0, 0, 1, 0, 0), (0, 0, 0.5, 0, 0))
inflow = BoundaryData({0: Table((0.0, 0.5, 1.0, 1.5, 20.0), (0, 0, 1, 0, 0))})

print(f"{'lambda':>7} {'single ratio':>13} {'bound':>9} {'reversed ratio':>15} {'bound':>10}")
for lam in (0.0, 0.25, 1.0):
    res = run(pipe, Physics.linear(lam), InitialData({0: pulse}), inflow, dt=0.01, t_max=8.0)
    single = [check_single_pipe_observability(res, 0, t) for t in np.arange(1.05, 7.0, 0.05)]
    rev = [check_reversed_pipe_inequality(res, 0, t) for t in np.arange(2.55, 5.5, 0.05)]
    s = max((r for r in single if not r.degenerate), key=lambda r: r.ratio)
    r = max((r for r in rev if not r.degenerate), key=lambda r: r.ratio)
    print(f"{lam:7g} {s.ratio:13.4f} {s.bound:9.4f} {r.ratio:15.4f} {r.bound:10.4f}")
