# %% [markdown]
# # Plane waves and their branches
#
# A plane wave ``A = a0 exp(i(q x + omega t))`` solves the delayed CGLE
# when a complex frequency relation holds. Each solution sits on a closed
# curve (the "tube" cross-section) in the ``(theta, a0)`` plane with
# ``theta = omega tau - phi + pi``. As the delay grows the number of
# solutions grows linearly.

# %%
import numpy as np

from dcgle import ModelParams, branch_trace, count_planewaves, find_planewaves, residual_pw, tube_residual

# %% [markdown]
# ## Solutions at fixed parameters

# %%
p = ModelParams.quintic(delta=0.4, tau=20.0)
waves = find_planewaves(p, q=0.0)
print(f"{len(waves)} plane waves with q = 0")
for w in waves[:6]:
    print(f"omega = {w.omega:+.5f}  a0 = {w.a0:.5f}  theta = {w.theta:.4f}"
          f"  |R| = {abs(residual_pw(p, w)):.1e}  tube = {tube_residual(p, w):.1e}")

# %% [markdown]
# ## Growth of the solution count with the delay

# %%
for tau in (5.0, 10.0, 20.0, 40.0):
    n = count_planewaves(ModelParams.quintic(delta=0.4, tau=tau), q=0.0)
    print(f"tau = {tau:5.1f}  count = {n:3d}  count / tau = {n / tau:.3f}")

# %% [markdown]
# ## A branch in the (delta, a0) plane
#
# Parametrizing by frequency gives ``a0(omega)`` and ``delta(omega)``; the
# branch folds more often as the delay grows.

# %%
br = branch_trace(ModelParams.quintic(tau=5.0), q=0.0, omega_grid=np.linspace(-1.5, 1.5, 400))
for seg in br.segments:
    print(f"segment: {len(seg.omega)} points, delta in [{seg.delta.min():.3f}, {seg.delta.max():.3f}]")
