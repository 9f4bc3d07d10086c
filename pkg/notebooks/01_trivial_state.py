# %% [markdown]
# # Stability of the trivial state
#
# The zero solution of the delayed CGLE is linear, so its spectrum is
# explicit. For finite delay the rightmost root comes from the Lambert W
# function; for long delays the spectrum splits into a strong part
# (``Re lambda = delta``) and a weak part with growth rate ``gamma / tau``.

# %%
import numpy as np

from dcgle import ModelParams, classify_trivial, hopf_curve, trivial_gamma, trivial_rightmost

# %% [markdown]
# ## Rightmost root at finite delay
#
# With ``delta < 0`` the trivial state is stable without feedback. Feedback
# of strength ``eta > |delta|`` destabilizes it at some delays.

# %%
p = ModelParams.quintic(delta=-0.1, eta=0.2, phi=0.0)
for tau in (0.5, 2.0, 10.0, 50.0):
    lam = trivial_rightmost(p.replace(tau=tau), q=0.0)
    print(f"tau = {tau:5.1f}  rightmost root = {lam.real:+.5f} {lam.imag:+.5f}i")

# %% [markdown]
# ## Hopf curves
#
# Points in the (omega, eta, delta) space where a root crosses the
# imaginary axis.

# %%
curve, _ = hopf_curve(p.replace(tau=1.0), q=0.0, omega_grid=np.linspace(-6, 6, 13))
for pt in curve:
    if pt.eta > 0:
        print(f"omega_c = {pt.omega_c:+.1f}  eta = {pt.eta:8.4f}  delta = {pt.delta:+9.4f}")

# %% [markdown]
# ## Large-delay classification
#
# Strong instability when ``delta > 0``, weak when ``-eta < delta <= 0``,
# stable otherwise. The weak growth exponent ``gamma(q, xi)`` shows where
# the pseudo-continuous spectrum is unstable.

# %%
for d in (0.3, -0.1, -0.3):
    c = classify_trivial(ModelParams.quintic(delta=d, eta=0.2))
    print(f"delta = {d:+.1f}: {c.kind.name:<7} two regions = {c.two_regions}")

xi = np.linspace(-5, 5, 11)
g = trivial_gamma(ModelParams.quintic(delta=-0.1, eta=0.2), 0.5, xi)
print(np.round(g, 4))
