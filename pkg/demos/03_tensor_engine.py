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
# # The curvature engine
#
# `curvature_at` computes Christoffel symbols, Riemann, Ricci, Weyl and the
# covariant derivative of Ricci from a metric chart. Charts carry analytic
# derivatives when they have them and fall back to Richardson-extrapolated
# finite differences otherwise.

# %%
import numpy as np

from warpcurv.tensor import MetricChart, ScalarField, bochner_residual, check_riemann_symmetries, curvature_at
from warpcurv.warped import hyperbolic2_chart, sphere2_chart

for name, chart in [("sphere", sphere2_chart()), ("hyperbolic plane", hyperbolic2_chart())]:
    rep = curvature_at(chart, np.array([0.8, 0.2]))
    print(f"{name:17s} scalar={rep.scalar:+.12f}")

# %% [markdown]
# ## A metric given only by its values

# %%
def metric(x):
    a = 0.3 * np.sin(x[0]) + 0.2 * x[1] * x[2]
    return np.eye(3) + np.array([[0.5 * x[1] ** 2, a, 0.1], [a, 0.4 * np.cos(x[2]), 0.2 * x[0]], [0.1, 0.2 * x[0], 0.3]])


chart = MetricChart.from_function(metric, 3)
x = np.array([0.2, -0.1, 0.3])
rep = curvature_at(chart, x)
print("mode", chart.derivative_mode, " tolerance", chart.tolerance)
print("Riemann symmetry defect", check_riemann_symmetries(rep))
print("contracted Bianchi defect", rep.div_ricci_minus_half_ds_norm)
print("Weyl in dimension three", np.max(np.abs(rep.weyl)))
print("Codazzi defect", rep.codazzi_defect_norm)

# %% [markdown]
# The Bochner identity holds for every function, which makes it a check on the
# third derivatives.

# %%
phi = ScalarField(value=lambda x: float(np.exp(0.3 * x[0] - 0.2 * x[1] * x[2])))
print("Bochner residual", bochner_residual(chart, phi, x))
