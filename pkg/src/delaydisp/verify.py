"""Independent numerical oracles for the solver.

* A manufactured solution u*(x, t) = exp(-t) x^2 (ell - x)^2, which meets
  all four clamped conditions, with the matching source term.
* Banded-versus-dense solves of the same step matrix.
* The smallest clamped fourth-difference eigenvalue against beta^4/ell^4,
  where cos(beta) cosh(beta) = 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eig_banded
from scipy.optimize import brentq

from .discretization import SpatialGrid, assemble_d2, assemble_d4, build_operators
from .integrator import StepOperator, integrate
from .model import DampingProfile, HistorySpec, ModelParams, sample_profile

__all__ = [
    "ManufacturedCase",
    "ConvergenceStudy",
    "mms_error",
    "mms_convergence",
    "dense_cross_check",
    "clamped_beta1",
    "clamped_eigen_reference",
    "dirichlet_eigen_check",
    "run_all",
]


# Temporal refinement ladder; the fine fixed grid keeps the space error
# well below the BDF2 error at the smallest step.
TIME_STEPS = (0.05, 0.025, 0.0125)


@dataclass(frozen=True)
class ManufacturedCase:
    params: ModelParams = field(default_factory=lambda: ModelParams(0.01, 0.001, 0.2, 1.0))
    profile: DampingProfile = field(default_factory=lambda: DampingProfile.constant(1.0))
    amplitude: float = 1.0

    def shape(self, x):
        ell = self.params.ell
        return x**2 * (ell - x) ** 2

    def u_star(self, x, t: float):
        return self.amplitude * math.exp(-t) * self.shape(np.asarray(x, dtype=float))

    def forcing(self, x, t: float):
        """u*_t - nu u*_xx + mu u*_xxxx + u*(x, t - tau) u*_x + a u*."""
        x = np.asarray(x, dtype=float)
        p, A = self.params, self.amplitude
        ell = p.ell
        g = x**2 * (ell - x) ** 2
        g1 = 2 * ell**2 * x - 6 * ell * x**2 + 4 * x**3
        g2 = 2 * ell**2 - 12 * ell * x + 12 * x**2
        e = math.exp(-t)
        linear = A * e * (-g - p.nu * g2 + 24.0 * p.mu + self.profile(x) * g)
        convection = A * A * math.exp(-(t - p.tau)) * e * g * g1
        return linear + convection

    def history(self) -> HistorySpec:
        return HistorySpec(kind="separable", phi="bump", phi_params=(), psi="exp", psi_params=(-1.0,),
                           amplitude=self.amplitude, ell=self.params.ell)


def mms_error(case: ManufacturedCase, n: int, dt: float, bdf_order: int, T: float = 1.0) -> float:
    """Max-node error against u* at time T."""
    traj = integrate(case.params, case.profile, case.history(), n, dt, T, bdf_order=bdf_order,
                     forcing=case.forcing)
    exact = case.u_star(traj.grid.nodes, T)
    return float(np.max(np.abs(traj.final_state - exact)))


@dataclass
class ConvergenceStudy:
    axis: str
    steps: list
    errors: list
    orders: list
    monotone: bool

    @property
    def order(self) -> float:
        return self.orders[-1] if self.orders else math.nan

    def within(self, target: float, tol: float) -> bool:
        """Every observed order within ``tol`` of ``target`` and errors decreasing."""
        return self.monotone and all(abs(o - target) <= tol for o in self.orders)

    def table(self) -> str:
        rows = [f"{self.axis:>8} {'error':>12} {'order':>7}"]
        for i, (s, e) in enumerate(zip(self.steps, self.errors)):
            o = f"{self.orders[i - 1]:7.3f}" if i else "       "
            rows.append(f"{s:8.4g} {e:12.4e} {o}")
        return "\n".join(rows)


def _study(axis, steps, errors) -> ConvergenceStudy:
    orders = [math.log(errors[i - 1] / errors[i]) / math.log(steps[i - 1] / steps[i])
              if errors[i] > 0 and errors[i - 1] > 0 else math.nan
              for i in range(1, len(errors))]
    monotone = all(errors[i] < errors[i - 1] for i in range(1, len(errors)))
    return ConvergenceStudy(axis, list(steps), list(errors), orders, monotone)


def mms_convergence(case: ManufacturedCase, grid_sizes=None, dt_values=None, bdf_order: int = 2,
                    T: float = 1.0, fixed_dt: float = 1e-3, fixed_n: int = 3199) -> dict:
    """Observed orders along the spatial and/or temporal axis.

    The spatial study uses ``fixed_dt`` with BDF2 so the time error stays
    below the space error; the temporal study uses ``fixed_n``.
    """
    out = {}
    if grid_sizes:
        if len(grid_sizes) < 3:
            raise ValueError("need at least three grid sizes")
        hs = [case.params.ell / (n + 1) for n in grid_sizes]
        errs = [mms_error(case, n, fixed_dt, 2, T) for n in grid_sizes]
        out["space"] = _study("h", hs, errs)
    if dt_values:
        if len(dt_values) < 3:
            raise ValueError("need at least three time steps")
        errs = [mms_error(case, fixed_n, dt, bdf_order, T) for dt in dt_values]
        out["time"] = _study("dt", list(dt_values), errs)
    return out


def dense_cross_check(n: int = 32, seed: int = 0, dt: float = 1e-3, params: ModelParams | None = None,
                      zero_rhs: bool = False) -> float:
    """Max |banded - dense| over one step solve with random data."""
    rng = np.random.default_rng(seed)
    params = params or ModelParams(0.01, 0.001, 0.1, 1.0)
    grid = SpatialGrid(n, params.ell)
    ops = build_operators(grid)
    a = sample_profile(DampingProfile.combined(1.0, 2.0, 1.0, 2.0, params.ell), grid)
    op = StepOperator(ops, params, a, dt)
    c = rng.standard_normal(n)
    rhs = np.zeros(n) if zero_rhs else rng.standard_normal(n) / dt
    banded = op.solve(c, rhs)
    dense = np.linalg.solve(op.dense(c), rhs)
    return float(np.max(np.abs(banded - dense)))


def clamped_beta1() -> float:
    """First positive root of cos(b) cosh(b) = 1."""
    return brentq(lambda b: math.cos(b) * math.cosh(b) - 1.0, 4.0, 5.0, xtol=1e-15, rtol=1e-15)


def _smallest_d4_eigenvalue(grid: SpatialGrid) -> float:
    d4 = assemble_d4(grid)
    upper = d4.bands[: d4.upper + 1]  # eig_banded wants the upper form
    w = eig_banded(upper, lower=False, eigvals_only=True, select="i", select_range=(0, 0))
    return float(w[0])


def clamped_eigen_reference(grid_sizes=(50, 100, 200, 400), ell: float = 1.0) -> dict:
    """Errors of the smallest D4 eigenvalue and successive error ratios."""
    ref = clamped_beta1() ** 4 / ell**4
    hs, errors = [], []
    for n in grid_sizes:
        grid = SpatialGrid(n, ell)
        hs.append(grid.h)
        errors.append(abs(_smallest_d4_eigenvalue(grid) - ref))
    ratios = [errors[i - 1] / errors[i] for i in range(1, len(errors))]
    return {"reference": ref, "h": hs, "errors": errors, "ratios": ratios}


def dirichlet_eigen_check(n: int = 100, ell: float = 1.0) -> float:
    """Relative gap between the smallest D2 eigenvalue and (2/h^2)(1 - cos(pi h/ell))."""
    grid = SpatialGrid(n, ell)
    d2 = assemble_d2(grid)
    upper = -d2.bands[: d2.upper + 1]
    w = eig_banded(upper, lower=False, eigvals_only=True, select="i", select_range=(0, 0))
    exact = 2.0 / grid.h**2 * (1.0 - math.cos(math.pi * grid.h / ell))
    return abs(float(w[0]) - exact) / exact


def run_all() -> list[tuple[str, str, bool]]:
    """(check, value, passed) rows for the command-line verify table."""
    rows = []
    case = ManufacturedCase()
    space = mms_convergence(case, grid_sizes=(15, 31, 63), T=0.5)["space"]
    rows.append(("mms space order", f"{space.order:.3f}", space.within(2.0, 0.3)))
    for order, target in ((1, 1.0), (2, 2.0)):
        st = mms_convergence(case, dt_values=TIME_STEPS, bdf_order=order)["time"]
        rows.append((f"mms time order BDF{order}", f"{st.order:.3f}", st.within(target, 0.3)))
    disc = dense_cross_check(32)
    rows.append(("dense cross-check n=32", f"{disc:.2e}", disc < 1e-12))
    eig = clamped_eigen_reference()
    r = eig["ratios"][1]
    rows.append(("clamped D4 eigen ratio n=100/200", f"{r:.3f}", abs(r - 4.0) <= 0.5))
    gap = dirichlet_eigen_check()
    rows.append(("Dirichlet D2 discrete eigenvalue", f"{gap:.2e}", gap < 1e-12))
    return rows
