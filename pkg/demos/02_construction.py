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
# # From solutions to metrics
#
# A solution defines the metric `dt^2 + sum_j g_jj(t) dx_j^2` with
# `g_jj = g0_j exp(-2 int y_j)`. Its curvature is read off the phase state in
# closed form, and its Ricci tensor is harmonic exactly when the curve solves
# the flow.

# %%
import numpy as np

from warpcurv import PhaseState, build_metric, explicit_solution, integrate, ricci_eigenvalues, scalar_invariant
from warpcurv.construction import classify, completeness_probe, harmonic_residual, oracle_agreement, perturbed_p_chart, weyl_sectional
from warpcurv.flow import Kind, trivial_extend

# %% [markdown]
# ## The round sphere
#
# `y = tan t` in dimension two gives `g_22 = cos^2 t`; padding with a zero
# component gives the product with a line, still of scalar curvature 2.

# %%
sphere = build_metric(trivial_extend(explicit_solution(Kind.TAN, 2, 0.5), 1))
for t in (-1.0, 0.0, 1.0):
    print(f"t={t:+.1f}  g={sphere.g(t)}  cos^2 t={np.cos(t) ** 2:.6f}  s={scalar_invariant(sphere.state(t)):.6f}")

# %% [markdown]
# ## A generic example

# %%
traj = integrate(PhaseState([1.0, 2.0, 3.0], [0.5, -1.0, 0.25]), 0.0, (-0.3, 0.3))
chart = build_metric(traj)
print("Ricci eigenvalues", ricci_eigenvalues(chart.state(0.0)))
print("closed form vs tensor engine", oracle_agreement(chart, 0.1))
print("harmonic residual", harmonic_residual(chart, 0.1))
print("Weyl W_2323 (normalized)", weyl_sectional(chart, 0.0, 2, 3))
print(classify(traj).to_dict())

# %% [markdown]
# Perturbing `p` by one percent leaves the solution set, and both the closed
# form and the tensor engine see it.

# %%
off = perturbed_p_chart(chart, 0.0)
print("off-solution residual", harmonic_residual(off, 0.0))
print("off-solution Codazzi defect", oracle_agreement(off, 0.0)["codazzi"])

# %% [markdown]
# ## Completeness

# %%
for name, t in [("tanh", explicit_solution(Kind.TANH, 3)), ("tan", explicit_solution(Kind.TAN, 3))]:
    print(name, completeness_probe(t).to_dict())
