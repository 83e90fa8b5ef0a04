"""Per-step energy budget of an unforced 3D run.

For divergence-free fields the nonlinear term moves energy between modes
without creating any, so the discrete budget
    (E(t+dt) - E(t)) / dt  =  -2 nu ||grad v||^2 (midpoint)
closes to scheme order at every step.
"""

import numpy as np

from torusflow import make_grid, random_divfree_field
from torusflow.solver import SolverConfig, run_full_3d

nu, dt = 0.05, 1e-3
grid = make_grid(2 * np.pi, 16, 3)
v0 = random_divfree_field(grid, seed=11, spectrum_decay=3.0, target_h1=0.1)

cfg = SolverConfig(grid=grid, nu=nu, dt=dt, t_end=0.2, T=0.2,
                   snapshot_stride=50, initial=v0)
traj = run_full_3d(cfg)

E = traj.diag["l2_sq"]
D = traj.diag["grad_l2_sq"]
dEdt = np.diff(E) / dt
dissipation = -2 * nu * 0.5 * (D[1:] + D[:-1])
residual = np.abs(dEdt - dissipation)
rel = residual / np.abs(dissipation)

print(f"steps: {len(dEdt)}")
print(f"max |dE/dt + 2 nu ||grad v||^2|      {residual.max():.3e}")
print(f"max relative residual               {rel.max():.3e}")
print(f"energy at t=0 / t=end               {E[0]:.6e} / {E[-1]:.6e}")
