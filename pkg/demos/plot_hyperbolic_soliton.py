"""
The shrinking-curvature soliton on a hyperbolic surface
========================================================

A closed hyperbolic surface of genus two, scaled by ``phi``, carries
``h = sqrt(phi) g0``. Under the flow ``phi`` grows linearly and |A|^2 sits
exactly on its decay bound the whole time.
"""

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from spacelike_flow import FlowConfig, evolve, homogeneous_hyperbolic

traj = evolve(homogeneous_hyperbolic(2), FlowConfig(t_end=10.0))
t = np.array(traj.times)
phi = np.array([s.phi for s in traj.snapshots])

print("phi(t) - (1 + 4t):", np.abs(phi - (1 + 4 * t)).max())
print("int H^2 dv / 16 pi:", traj.column("MH") / (16 * np.pi))
print("euler characteristic:", traj.column("chi"))

fig, ax = plt.subplots()
ax.loglog(t[1:], traj.column("amax2")[1:], "o", label="sup |A|^2")
ax.loglog(t[1:], traj.column("bound24")[1:], "-", label="1 / (2t + 1/|A|^2(0))")
ax.set_xlabel("t")
ax.legend()
fig.savefig("hyperbolic_soliton.png", dpi=120)
