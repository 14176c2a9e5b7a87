# %% [markdown]
# Convergence checks
# ------------------
# A manufactured solution u* = exp(-t) x^2 (1 - x)^2 meets all four clamped
# conditions; adding the matching source term makes it an exact solution,
# so the error can be measured directly.

# %%
from delaydisp.verify import (
    TIME_STEPS,
    ManufacturedCase,
    clamped_eigen_reference,
    dense_cross_check,
    mms_convergence,
)

case = ManufacturedCase()

# %%
print(mms_convergence(case, grid_sizes=(15, 31, 63, 127), T=0.5)["space"].table())

# %%
for order in (1, 2):
    print(f"BDF{order}")
    print(mms_convergence(case, dt_values=TIME_STEPS, bdf_order=order)["time"].table())

# %%
# Smallest eigenvalue of the clamped fourth difference against beta1^4,
# cos(beta1) cosh(beta1) = 1.
ref = clamped_eigen_reference()
print("beta1^4 =", ref["reference"])
for h, e in zip(ref["h"], ref["errors"]):
    print(f"h {h:.5f}  error {e:.3e}")
print("ratios", [round(r, 3) for r in ref["ratios"]])

# %%
print("banded vs dense step solve:", dense_cross_check(32))
