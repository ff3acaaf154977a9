# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
#       format_version: '1.3'
# ---

# %% [markdown]
# # Phase-space structure
#
# Every identity multiple `q 1` with `p = 0` is a zero of the flow. The
# linearization there has eigenvalues `0, nq, (n-1)q, q`.

# %%
import numpy as np

from warpcurv import PhaseState, scalar_invariant
from warpcurv.phase import basin_experiment, blowup_experiment, conjugacy_error, linearize_zero, scaling_map

rep = linearize_zero(-2.0, 4)
print("eigenvalues", rep.eigenvalues)
print("eigenspaces", rep.eigenspaces)

# %% [markdown]
# ## Scaling
#
# `F_c(y, p) = (c y, c^2 p)` pulls `s` back to `c^2 s` and conjugates the flow
# to itself with time rescaled by `c`.

# %%
x = PhaseState([1.0, 2.0], [0.0, 0.0])
print(scalar_invariant(x), scalar_invariant(scaling_map(x, 2.0)))
print("conjugacy error", conjugacy_error(PhaseState([0.5, -0.3], [0.2, 0.1]), 1.7, np.linspace(-0.2, 0.2, 9)))

# %% [markdown]
# ## Basin of the complete solutions
#
# States near the `tanh` member through `(0, -6 1)` integrate for all time and
# settle at `-/+ 2 1`.

# %%
basin = basin_experiment(3, 0.0, 6.0, 1e-2, 5, seed=0)
print(f"{basin['passed']}/{basin['count']} complete; limits {basin['predicted_limits']}")
for s in basin["samples"]:
    print(s["index"], s["completeness"], f"{s['limit_distance']:.2e}")

# %% [markdown]
# ## Finite-time blow-up
#
# Nonzero states with `s >= 0` and `|tr y| >= 1` escape in finite time.

# %%
blowup = blowup_experiment(3, 5, seed=0)
for s in blowup["samples"]:
    print(s["index"], f"s={s['s']:.3f}", "escape", np.round(s["escape_times"], 4))
