# %% [markdown]
# The stability certificate
# -------------------------
# The exponential bound ||u_xx(t)||^2 <= (M^2/4) exp(-omega_tilde t) needs
# a small history: M grows like exp(gamma ||v_x||^2 ...) and gamma is
# about 10^4 for nu = 0.01, mu = 0.001.  For the figure data v = sin(pi x)
# M overflows, so only scaled-down histories give a usable delay window.

# %%
import math

import numpy as np

from delaydisp import DampingProfile, HistorySpec, build_operators, preset, run, stability_report
from delaydisp.analysis import theorem_bound_check
from delaydisp.discretization import SpatialGrid

base = preset("fig3a")  # a = 1
ops = build_operators(SpatialGrid(base.n, 1.0))
a1 = DampingProfile.constant(1.0)

# %%
for eps in (1.0, 1e-1, 1e-2, 1e-3, 1e-4):
    rep = stability_report(base.params.replace(tau=base.dt), a1, HistorySpec.constant_profile("sin", amplitude=eps),
                           ops, ds=base.dt)
    print(f"eps {eps:7.0e}  log M {rep.log_M:10.4g}  tau2 {rep.tau2:8.4g}  sigma {rep.sigma:8.4g}  "
          f"tau_hat {rep.tau_hat:8.4g}")

# %%
# Run at half the admissible delay and compare against the bound.
# sin(pi x) has u_x != 0 at the clamped ends; a clamped-compatible bump does not.
for label, hist in (("sin", HistorySpec.constant_profile("sin", amplitude=1e-3)),
                    ("bump", HistorySpec("constant", "bump", (), amplitude=1e-2))):
    rep0 = stability_report(base.params.replace(tau=base.dt), a1, hist, ops, ds=base.dt)
    tau = math.floor(rep0.tau_hat / 2 / base.dt) * base.dt
    params = base.params.replace(tau=tau)
    rep = stability_report(params, a1, hist, ops, ds=base.dt)
    s = run(base.replace(params=params, history=hist)).norm_series
    worst = np.max(s.h2_u**2 / (rep.M**2 / 4 * np.exp(-rep.omega_tilde * s.t)))
    print(f"{label:<5} tau {tau:.3f}  violations {theorem_bound_check(s.t, s.h2_u, rep)}  "
          f"max ||u_xx||^2 / bound {worst:.3f}")
