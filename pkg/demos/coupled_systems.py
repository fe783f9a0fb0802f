"""Two coupled systems where each component feels the other's running max.

    x' = x - max y,      y' = y - max x            (linear functionals)
    x' = x - max y^2,    y' = y - max x^2          (quadratic functionals)
    x' = a x - b max y,  y' = c y - d max x        (constant coefficients)
"""
# %%
import numpy as np

from maxode.horizon import quadratic_feasible, quadratic_search
from maxode.integrate import (ConstantCoeffSystem, closed_form_constant_coeff, residual,
                              zero_crossings)
from maxode.picard import (coupled_linear_bound_check, coupled_linear_sequence,
                           coupled_quadratic_bound_check, coupled_quadratic_sequence)
from maxode.trajectory import Grid

# %% Monotone scheme for 0 < y0 < x0: x_n grows, y_n shrinks, the limit is
# y0 + (x0 - y0) e^t and y0 - (x0 - y0) t e^t.
x0, y0, T = 2.0, 1.0, 1.0
grid = Grid.covering(T, 1e-3)
xs, ys = coupled_linear_sequence(x0, y0, 30, grid)
t = grid.nodes
print("linear: x_n(T) =", np.array2string(np.array([v[-1] for v in xs[:6]]), precision=4))
print(f"linear: limit error x {np.max(np.abs(xs[-1] - (y0 + (x0 - y0) * np.exp(t)))):.1e}"
      f", y {np.max(np.abs(ys[-1] - (y0 - (x0 - y0) * t * np.exp(t)))):.1e}")
print("linear: bound violations", coupled_linear_bound_check(x0, y0, T, xs, ys).violations)

try:
    coupled_linear_sequence(1.0, 1.0, 5, grid)
except ValueError as exc:
    print("equal data:", exc)

# %% Quadratic functionals: small data, a uniform bound c0 and four
# inequalities on (x0, y0, T, c0).
feas = quadratic_feasible(0.05, 0.05, 0.5, 0.2)
print("quadratic: slacks", np.round(feas.slacks, 5), "feasible", feas.feasible)
bad = quadratic_feasible(0.25, 0.25, 1.0, 0.5)
print("quadratic: (0.25, 0.25, T=1, c0=0.5) fails", bad.failing())
for T in (1.0, 0.3):
    found = quadratic_search(0.25, 0.25, T)
    print(f"quadratic: c0 search at (0.25, 0.25, T={T}) ->",
          "none" if found is None else f"{found:.4f}")
g = Grid.covering(0.5, 1e-3)
qx, qy = coupled_quadratic_sequence(0.05, 0.05, 15, g, 0.2)
print("quadratic: bound violations", coupled_quadratic_bound_check(0.5, 0.2, qx, qy).violations)

# %% Constant coefficients. With A = a x0 - b y0 < 0 and B = c y0 - d x0 < 0
# both components decrease, the maxima stay at (x0, y0) and the system is linear.
sys = ConstantCoeffSystem(a=1, b=1, c=1, d=3, x0=1, y0=2)
g = Grid.covering(0.6, 1e-4)
cf = closed_form_constant_coeff(sys, g)
print(f"constant coeff: residual {residual(sys.to_problem(0.6), cf).sup_residual:.1e}")
print("constant coeff: zero crossings", zero_crossings(sys), "vs", np.log(2), np.log(3))
