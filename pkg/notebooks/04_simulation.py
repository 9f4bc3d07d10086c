# %% [markdown]
# # Direct simulation
#
# The delayed PDE is integrated with a pseudo-spectral Laplacian, an
# adaptive Cash-Karp 5(4) step and a Hermite-interpolated history. A
# stable plane wave seeded with a small perturbation should relax back,
# while an unstable one drifts to another wave or breaks up.

# %%
import numpy as np

from dcgle import Grid, ModelParams, Modal, estimate_planewave, find_planewaves, integrate, make_initial_history

# %% [markdown]
# ## Seed a plane wave and integrate

# %%
p = ModelParams.quintic(delta=0.4, tau=5.0)
grid = Grid(n_points=64, length=8 * np.pi)
pw = min(find_planewaves(p, q=0.0), key=lambda w: abs(w.omega - 1.0))
print(f"start: omega = {pw.omega:.5f}  a0 = {pw.a0:.5f}")

hist = make_initial_history(grid, pw, Modal(grid.dk, 1e-3 * pw.a0))
res = integrate(p, grid, hist, t_end=50.0, snapshot_every=1.0, observe_every=1.0)
print(f"{res.n_steps} steps, {res.n_rejected} rejected")

# %% [markdown]
# ## Read off the final state

# %%
tail = res.times >= res.times[-1] - p.tau
est = estimate_planewave(res.times[tail], res.snapshots[tail], grid)
print(f"end: plane wave = {est.is_planewave}  q = {est.q:.4f}  omega = {est.omega:.5f}  a0 = {est.a0:.5f}")
obs = res.observables.as_array()
print("max |A| over the last samples:", np.round(obs[-5:, 2], 5))
