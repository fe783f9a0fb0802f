"""A predator-prey style system driven by the running max of the product x y.

    x' = x - max x y,   y' = y + max x y

The functional couples both components, so the componentwise existence
result does not apply. The two independent solvers still agree.
"""
# %%
import numpy as np

from maxode.integrate import euler_max, heun_max
from maxode.picard import PicardConfig, running_maxima, solve_picard
from maxode.problems import load
from maxode.trajectory import Grid

spec = load("lotka_volterra")
print("componentwise:", spec.is_componentwise())

# %%
grid = Grid.covering(spec.T, 1e-3)
ref, rep = solve_picard(spec, PicardConfig(grid))
print(f"Picard converged={rep.converged} after {rep.n_iters} iterations")
for step in (euler_max, heun_max):
    d = np.max(np.abs(step(spec, grid).values - ref.values))
    print(f"{step.__name__}: sup difference to Picard {d:.1e}")

# %% The running max of x y at a few times.
m = running_maxima(spec, ref)[:, 0]
for k in range(0, grid.n_steps + 1, grid.n_steps // 4):
    print(f"t = {grid.nodes[k]:.3f}  x = {ref.values[k, 0]:.5f}  y = {ref.values[k, 1]:.5f}"
          f"  max xy = {m[k]:.5f}")
