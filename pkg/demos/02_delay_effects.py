# %% [markdown]
# What a unit delay does
# ----------------------
# The convection coefficient u(x, t - 1) lags the state.  With a < 0 the
# lag turns the tau = 0 steady states into slow relaxation oscillations;
# with a > 0 the decay rates are unchanged to several digits.

# %%
from delaydisp import fit_decay, preset, preset_members, run

# %%
for name in ("fig5a", "fig5b", "fig5c", "fig5d"):
    s = run(preset(name)).norm_series
    late = s.t >= 5.0
    print(f"{name}  ||u|| on [5, 10]: min {s.l2_u[late].min():.3g}  max {s.l2_u[late].max():.3g}")

# %%
# Positive profiles: the more damping mass, the faster the decay.
for name in ("fig7a", "fig7b", "fig7c", "fig7d"):
    res = run(preset(name))
    print(f"{name}  a = {res.config.profile.label():<24} slope {res.decay.slope:8.4f}")

# %%
# Delay sweep for a = 1.  The rate barely moves with tau.
for label, cfg in preset_members("fig9"):
    s = run(cfg).norm_series
    print(label, round(fit_decay(s.t, s.l2_u, (2.0, 10.0)).slope, 6))
