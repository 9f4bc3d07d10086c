# %% [markdown]
# # Stability of plane waves
#
# For finite delay the rightmost root of the characteristic function is
# found over a wavenumber grid. For long delays the spectrum splits into a
# strong part (independent of the delay) and a weak part with growth rate
# ``gamma / tau``; both depend only on ``(delta, theta)``.

# %%
import numpy as np

from dcgle import ModelParams, classify_pw_large_delay, find_planewaves, rightmost_root, stability_map

# %% [markdown]
# ## Finite delay

# %%
p = ModelParams.quintic(delta=0.4, tau=5.0)
for w in find_planewaves(p, q=0.0)[:5]:
    r = rightmost_root(p, w)
    print(f"omega = {w.omega:+.4f}  a0 = {w.a0:.4f}  max Re = {r.max_re:+.3e} at k = {r.k:.3f}")

# %% [markdown]
# ## Long delay: a single classification

# %%
c = classify_pw_large_delay(ModelParams.quintic(delta=0.4), q=0.0, theta=1.0)
print(c.kind.name, f"strong max = {c.strong_max:+.4f}", f"weak sup = {c.weak_sup:+.4f}")

# %% [markdown]
# ## A coarse map over (delta, theta)
#
# Codes: 0 stable, 1 weakly unstable, 2 strongly unstable, 3 no solution.

# %%
m = stability_map(ModelParams.quintic(), 0.0, np.linspace(-0.2, 1.0, 7), np.linspace(0.1, 2 * np.pi - 0.1, 9),
                  k_grid=np.linspace(-3, 3, 61), xi_grid=np.linspace(-10, 10, 41))
print(m.kind)
