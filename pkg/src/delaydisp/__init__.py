"""Solver and stability diagnostics for a delayed fourth-order dispersive equation

    u_t - nu u_xx + mu u_xxxx + u(x, t - tau) u_x + a(x) u = 0,  0 < x < ell,

with clamped ends u = u_x = 0 and an initial history on [-tau, 0].
"""

__version__ = "0.1.0"

from .model import DampingProfile, HistorySpec, ModelParams, validate_damping  # noqa: E402
from .discretization import SpatialGrid, build_grid, build_operators  # noqa: E402
from .integrator import Thresholds, integrate  # noqa: E402
from .analysis import fit_decay, stability_report  # noqa: E402
from .scenarios import RunConfig, emit, preset, preset_members, run, run_sweep  # noqa: E402

__all__ = [
    "ModelParams",
    "DampingProfile",
    "HistorySpec",
    "validate_damping",
    "SpatialGrid",
    "build_grid",
    "build_operators",
    "Thresholds",
    "integrate",
    "fit_decay",
    "stability_report",
    "RunConfig",
    "emit",
    "preset",
    "preset_members",
    "run",
    "run_sweep",
]
