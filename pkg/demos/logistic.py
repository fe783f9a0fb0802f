"""Logistic growth where the quadratic loss term sees the running maximum.

    x'(t) = x(t) - max_{s <= t} x(s)^2

Run with ``python3 demos/logistic.py``.
"""
# %%
import numpy as np

from maxode import ProblemSpec
from maxode.horizon import logistic_horizon, logistic_horizon_opt
from maxode.integrate import euler_max, heun_max, logistic_closed_form
from maxode.picard import PicardConfig, logistic_bound_check, logistic_g_sequence, solve_picard
from maxode.trajectory import Grid

# %% For 0 < x0 < 1 the solution increases, the running max is the current
# value and the equation is the classical logistic one.
x0, T = 0.5, 0.2
spec = ProblemSpec.from_strings(["x1 - m1"], ["x1^2"], [x0], T)
grid = Grid.covering(T, 1e-3)
x, rep = solve_picard(spec, PicardConfig(grid))
err = np.max(np.abs(x.component(0) - logistic_closed_form(x0, grid.nodes)))
print(f"Picard: {rep.n_iters} iterations, sup error vs closed form {err:.2e}")

# %% Both steppers converge at their nominal rate.
for step in (euler_max, heun_max):
    errs = []
    for h in (2e-2, 1e-2, 5e-3):
        g = Grid.covering(T, h)
        errs.append(abs(step(spec, g).values[-1, 0] - logistic_closed_form(x0, g.end)))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    print(f"{step.__name__:9s} errors {np.array2string(np.array(errs), precision=2)}"
          f"  halving ratios {np.array2string(ratios, precision=2)}")

# %% For x0 > 1 the solution decreases and the max term stays frozen at
# x0^2 = 4, leaving x' = x - 4 with solution 4 - 2 e^t.
spec2 = ProblemSpec.from_strings(["x1 - m1"], ["x1^2"], [2.0], 0.08)
x2 = heun_max(spec2, Grid.covering(0.08, 1e-3))
frozen = 4.0 - 2.0 * np.exp(x2.t)
print(f"x0 = 2: deviation from 4 - 2 e^t is {np.max(np.abs(x2.component(0) - frozen)):.1e}")

# %% Length of the interval on which the scaled iterates g_n = x_n / x0
# stay in the ball |g| <= alpha, and the best alpha.
for a in (1.5, 2.0, 4.0):
    print(f"alpha = {a}: horizon {logistic_horizon(x0, a):.4f}")
opt = logistic_horizon_opt(x0)
print(f"best alpha {opt.alpha_star:.4f} gives horizon {opt.T_star:.4f}")

# %% The iterates respect the uniform and factorial difference bounds.
Ts = 0.8 * logistic_horizon(x0, 2.0)
g = Grid.covering(Ts, 1e-3)
check = logistic_bound_check(x0, 2.0, Ts, logistic_g_sequence(x0, 20, g), g)
print(f"{check.checks} bound checks, {check.violations} violations")
