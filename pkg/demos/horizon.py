"""Existence horizon from sampled constants, and how Picard iterates contract on it.

On the box |x - x0| <= alpha the right-hand side is bounded by M and is
L_f-Lipschitz; the functionals are L_g-Lipschitz. The iteration map
contracts on [0, T] for T below

    min(alpha / M, 1 / (L_f (1 + sqrt(m) L_g)), T_ref)
"""
# %%
import numpy as np

from maxode import ProblemSpec
from maxode.horizon import contraction_data, existence_horizon
from maxode.picard import PicardConfig, solve_picard
from maxode.problems import GUARANTEES, load
from maxode.trajectory import Grid

# %%
spec = ProblemSpec.from_strings(["x1 - m1"], ["x1^2"], [0.5], 1.0)
for alpha in (0.5, 1.0, 2.0, 4.0):
    data = contraction_data(spec, alpha)
    hr = existence_horizon(data)
    print(f"alpha {alpha:3}: M {data.M:7.3f}  L_f {data.L_f:.3f}  L_g {data.L_g:6.3f}"
          f"  T_sup {hr.T_sup:.4f} ({hr.branch})")

# %% On [0, T_rec] successive differences shrink at least as fast as the
# contraction factor predicts, and in practice much faster.
hr = existence_horizon(contraction_data(spec, 2.0))
grid = Grid.covering(hr.T_rec, 1e-3)
_, rep = solve_picard(spec, PicardConfig(grid, 1e-14), hr.contraction_factor)
print(f"T_rec {hr.T_rec:.4f}, factor {hr.contraction_factor:.2f}")
print("deltas", np.array2string(np.array(rep.deltas[:8]), precision=2))
print("ratios", np.array2string(np.array(rep.ratios()[:7]), precision=3))

# %% The bundled time-dependent and abs-max problems are posed on an
# interval shorter than their recommended horizon.
for name in ("time_dependent", "abs_max"):
    spec = load(name)
    params = GUARANTEES[name][1]
    hr = existence_horizon(contraction_data(spec, params["alpha"], T=params["T_ref"]))
    print(f"{name}: alpha {params['alpha']}, T_rec {hr.T_rec:.4f} vs problem horizon {spec.T}")
