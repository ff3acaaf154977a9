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
# # Warped products
#
# A warped product `B x_phi F` with an Einstein fiber has harmonic curvature
# exactly when a short list of conditions on the base and warping function
# hold. `warhc_check` evaluates them and compares with the Codazzi defect of
# the assembled metric.

# %%
import numpy as np

from warpcurv import PhaseState, build_metric, integrate
from warpcurv.tensor import curvature_at
from warpcurv.warped import (
    WarpedProductSpec,
    appendix_ricci,
    assemble_metric,
    bumpy_surface_chart,
    construction_as_warped,
    interval_base,
    ridge_warping,
    spec_from_dict,
    warhc_check,
)

spec = spec_from_dict(
    {
        "base": {"kind": "interval", "dim": 1},
        "fiber": {"kind": "sphere2", "dim": 2},
        "warping": {"kind": "cosh", "params": {"w": [0.5], "c": 0.1}},
    }
)
x = np.array([0.3, 0.9, 0.2])
print("closed-form Ricci\n", np.round(appendix_ricci(spec, x), 8))
print("engine Ricci\n", np.round(curvature_at(assemble_metric(spec), x).ricci, 8))

# %% [markdown]
# ## Condition reports
#
# The construction metric viewed as a warped product passes; a fiber that is
# not Einstein fails condition (a).

# %%
chart = build_metric(integrate(PhaseState([1.0, -0.5], [0.7, 1.2]), 0.0, (-0.2, 0.2)))
good = warhc_check(construction_as_warped(chart), [chart.point(0.0)])
print(good.flags, good.consistent)

bumpy = WarpedProductSpec(interval_base(), bumpy_surface_chart(), ridge_warping("exp", [1.0]), 0.0)
bad = warhc_check(bumpy, [[0.2, 0.5, 0.1]])
print(bad.flags, bad.consistent)
