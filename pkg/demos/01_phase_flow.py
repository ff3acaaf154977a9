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
# # Integrating the phase flow
#
# A state is a pair of diagonal matrices `(y, p)`, stored as their diagonals.
# The flow is `y' = p`, `p' = (tr y + y) p + (tr y^2) y - (tr y) y^2`, and
# `s = 2 tr p - tr y^2 - (tr y)^2` is conserved along it.

# %%
import numpy as np

from warpcurv import PhaseState, explicit_solution, integrate, scalar_invariant
from warpcurv.flow import Kind, KElement, Scaling, apply_symmetry, attainable_drift, k_equivalent

state = PhaseState([1.0, 2.0, 3.0], [0.5, -1.0, 0.25])
traj = integrate(state, 0.0, (-0.3, 0.3))
print("domain", traj.domain, [s.value for s in (traj.status_minus, traj.status_plus)])
print("s0 =", traj.s0, " relative drift", attainable_drift(traj))

# %% [markdown]
# The dense output is a piecewise quartic, so states can be read at any time
# inside the domain.

# %%
ts = np.linspace(traj.t_minus, traj.t_plus, 5)
for t, x in zip(ts, traj.evaluate(ts)):
    print(f"t={t:+.4f}  y={np.round(x[:3], 4)}  s={scalar_invariant(PhaseState.from_flat(x)):.12f}")

# %% [markdown]
# ## Closed-form members
#
# The identity multiples `y = -2a tanh(n(at+b)) 1` live forever and approach
# `-/+ 2a 1`; the `tan` family escapes in finite time.

# %%
tanh = explicit_solution(Kind.TANH, 3, 1.0)
tan = explicit_solution(Kind.TAN, 3, 1.0)
print("tanh s =", tanh.s0, " tan s =", tan.s0)
print("tan domain", tan.domain, "vs pi/6 =", np.pi / 6)
numeric = integrate(tan.initial, 0.0, (-5.0, 5.0))
print("integrated escape times", numeric.domain)

# %% [markdown]
# ## Symmetries
#
# Time shifts, the reflection `t -> -t` with `y -> -y`, and permutations of the
# diagonal send solutions to solutions; so does `y -> a y(a t)`, which scales
# `s` by `a^2`. `k_equivalent` recovers a witness numerically.

# %%
moved = apply_symmetry(traj, KElement(-1, 0.1, (2, 0, 1)))
print("witness:", k_equivalent(traj, moved))
scaled = apply_symmetry(traj, Scaling(2.0))
print("s ratio under scaling by 2:", scaled.s0 / traj.s0)
