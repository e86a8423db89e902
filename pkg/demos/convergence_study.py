"""
Second-order convergence of the discrete constraints
=====================================================

The graph construction satisfies the Gauss and Codazzi equations exactly in
the continuum. On the grid their residuals are pure truncation error and
should drop by four per doubling of the resolution.
"""

import numpy as np

from spacelike_flow import GridChart, from_graph
from spacelike_flow.flow_engine import scalar_evolution_residual
from spacelike_flow.spacelike_core import codazzi_residual, gauss_residual

prev = None
for n in (16, 32, 64, 128):
    grid = GridChart(2, n)
    x, y = grid.coordinates()
    state = from_graph(grid, 0.2 * np.sin(x) * np.sin(y))
    res = (gauss_residual(state)[0], codazzi_residual(state),
           *scalar_evolution_residual(state, 0.05 * grid.spacing**2))
    ratios = "" if prev is None else "  ratios " + " ".join(f"{a / b:.2f}" for a, b in zip(prev, res))
    print(f"N={n:4d}  gauss {res[0]:.2e}  codazzi {res[1]:.2e}  dH {res[2]:.2e}  dA2 {res[3]:.2e}{ratios}")
    prev = res
