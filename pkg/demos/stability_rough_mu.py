"""Solutions depend stably on the diffusion coefficient.

Take a discontinuous mu, mollify it at widths eps = 0.2, 0.1, 0.05, and
solve the same forward problem with each coefficient.  The L1 distance
between coefficients and the L2(Q_T) distance between solutions both
shrink as eps does: convergence of the coefficients transfers to the
solutions even though mu jumps.
"""

import numpy as np

from crossdifflab import KolmogorovProblem, make_grid, solve_forward, \
    spacetime_norm
from crossdifflab.dual import stability_study
from crossdifflab.kolmo import steps_for
from crossdifflab.torus import Field, Trajectory

n, t_final = 128, 0.1
grid = make_grid(1, n, t_final, steps_for(1, n, t_final, 1.1))
x = np.arange(n) / n
mu = Trajectory.constant_in_time(
    grid, Field(grid, 1.0 + 0.1 * np.sign(np.cos(2 * np.pi * x))))
z0 = Field(grid, 1.0 + 0.5 * np.cos(2 * np.pi * x))
source = Trajectory.constant(grid, 0.0)

rows = stability_study(mu, [0.2, 0.1, 0.05], z0, source)
z_norm = spacetime_norm(solve_forward(KolmogorovProblem(
    grid=grid, mu=mu, z0=z0, source=source)).trajectory, "L2Q")

print(f"n={n}, T={t_final}, ||z||_L2Q = {z_norm:.4f}\n")
print(f"{'eps':>6} {'||mu_eps-mu||_L1Q':>18} {'||z_eps-z||_L2Q':>16} "
      f"{'relative':>9}")
for row in rows:
    print(f"{row.eps:6.2f} {row.mu_distance:18.6e} "
          f"{row.z_distance:16.6e} {row.z_distance / z_norm:9.2%}")
