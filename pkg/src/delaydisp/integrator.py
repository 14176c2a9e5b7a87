"""Semi-implicit BDF1/BDF2 time stepping.

Each step solves

    (alpha/dt) u + mu D4 u - nu D2 u + diag(a) u + diag(c) D1 u = rhs

where c is the delayed state u(., t_{n+1} - tau).  Because c is known data
when tau >= dt, the nonlinear equation costs one banded solve per step.
For tau = 0 the coefficient is the unknown itself and is found by Picard
iteration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import lapack

from .analysis import NormSeries, norms_of
from .delayline import HistoryBuffer, init_from_history, snap_tau
from .discretization import Operators, build_operators, SpatialGrid
from .errors import ConfigurationError, NumericalBreakdown
from .model import DampingProfile, HistorySpec, ModelParams, sample_profile

__all__ = [
    "Thresholds",
    "RunStatus",
    "StepOperator",
    "Trajectory",
    "step_bdf1",
    "step_bdf2",
    "integrate",
]

Forcing = Callable[[np.ndarray, float], np.ndarray]

PICARD_TOL = 1e-10
PICARD_MAX_ITER = 25
KL = KU = 2


@dataclass(frozen=True)
class Thresholds:
    blowup: float = 1e6
    steady_tol: float = 1e-8
    steady_window: float = 1.0
    # a settled state with ||u|| below this is the trivial equilibrium, not a steady state
    zero_tol: float = 1e-6


@dataclass
class RunStatus:
    state: str = "healthy"
    t_blowup: float | None = None
    t_settle: float | None = None
    residual: float | None = None
    steady_norm: float | None = None
    thresholds: Thresholds = field(default_factory=Thresholds)

    def as_dict(self) -> dict:
        return {
            "state": self.state,
            "t_blowup": self.t_blowup,
            "t_settle": self.t_settle,
            "residual": self.residual,
            "steady_norm": self.steady_norm,
            "thresholds": vars(self.thresholds).copy(),
        }


class StepOperator:
    """Banded step matrix with the delayed-convection term added per solve.

    The constant part (alpha/dt) I + mu D4 - nu D2 + diag(a) is assembled
    once.  The last LU factorisation is reused while the convection
    coefficient is unchanged.
    """

    def __init__(self, ops: Operators, params: ModelParams, a_values: np.ndarray, dt: float, alpha: float = 1.0):
        self.ops = ops
        self.dt = dt
        self.alpha = alpha
        n = ops.grid.n
        base = params.mu * ops.d4.padded(KL, KU) - params.nu * ops.d2.padded(KL, KU)
        base[KU] += alpha / dt + np.asarray(a_values, dtype=float)
        self.base = base
        self.half_inv_h = 1.0 / (2.0 * ops.grid.h)
        self.n = n
        self._cached_c: np.ndarray | None = None
        self._lu = None
        self._piv = None
        self.factorizations = 0
        self.solves = 0

    def matrix_bands(self, c: np.ndarray | None) -> np.ndarray:
        ab = self.base.copy()
        if c is not None:
            # row i gets c_i/(2h) * (u_{i+1} - u_{i-1})
            ab[KU - 1, 1:] += c[:-1] * self.half_inv_h
            ab[KU + 1, :-1] -= c[1:] * self.half_inv_h
        return ab

    def dense(self, c: np.ndarray | None) -> np.ndarray:
        from .discretization import BandedOperator

        return BandedOperator(self.n, KL, KU, self.matrix_bands(c)).to_dense()

    def solve(self, c: np.ndarray | None, rhs: np.ndarray) -> np.ndarray:
        key = None if c is None else c
        same = (
            self._lu is not None
            and (
                (key is None and self._cached_c is None)
                or (key is not None and self._cached_c is not None and np.array_equal(key, self._cached_c))
            )
        )
        if not same:
            ab = np.zeros((2 * KL + KU + 1, self.n))
            ab[KL:] = self.matrix_bands(c)
            lu, piv, info = lapack.dgbtrf(ab, KL, KU)
            if info != 0:
                raise NumericalBreakdown(f"banded LU failed (dgbtrf info={info})")
            self._lu, self._piv = lu, piv
            self._cached_c = None if c is None else np.array(c, copy=True)
            self.factorizations += 1
        x, info = lapack.dgbtrs(self._lu, KL, KU, rhs, self._piv)
        if info != 0:
            raise NumericalBreakdown(f"banded solve failed (dgbtrs info={info})")
        self.solves += 1
        return x


@dataclass
class PicardStats:
    steps: int = 0
    iterations: int = 0
    max_iterations: int = 0
    stalls: int = 0
    contraction_ratios: list = field(default_factory=list)
    record_ratios: bool = False


def _implicit_solve(op: StepOperator, rhs: np.ndarray, coefficient, u_guess: np.ndarray,
                    convection: bool, picard: PicardStats | None) -> np.ndarray:
    if not convection:
        return op.solve(None, rhs)
    if coefficient is not None:
        return op.solve(coefficient, rhs)
    # tau = 0: the convection coefficient is the unknown itself
    stats = picard if picard is not None else PicardStats()
    stats.steps += 1
    c = u_guess
    prev_delta = None
    for it in range(1, PICARD_MAX_ITER + 1):
        u_new = op.solve(c, rhs)
        delta = float(np.max(np.abs(u_new - c)))
        if stats.record_ratios and prev_delta is not None and prev_delta > 0:
            stats.contraction_ratios.append(delta / prev_delta)
        prev_delta = delta
        c = u_new
        if delta <= PICARD_TOL * max(1.0, float(np.max(np.abs(u_new)))):
            stats.iterations += it
            stats.max_iterations = max(stats.max_iterations, it)
            return u_new
        if not np.isfinite(delta):
            break
    stats.iterations += PICARD_MAX_ITER
    stats.max_iterations = max(stats.max_iterations, PICARD_MAX_ITER)
    stats.stalls += 1
    # fall back to the lagged coefficient
    return op.solve(u_guess, rhs)


def step_bdf1(u_n: np.ndarray, t_n: float, buffer: HistoryBuffer, op: StepOperator, params: ModelParams,
              forcing: Forcing | None = None, *, convection: bool = True,
              picard: PicardStats | None = None) -> np.ndarray:
    """One backward-Euler step from t_n to t_n + dt."""
    dt = op.dt
    t_new = t_n + dt
    rhs = u_n / dt
    if forcing is not None:
        rhs = rhs + forcing(op.ops.grid.nodes, t_new)
    coefficient = buffer.delayed_state(t_new) if (convection and params.tau > 0) else None
    return _implicit_solve(op, rhs, coefficient, u_n, convection, picard)


def step_bdf2(u_n: np.ndarray, u_nm1: np.ndarray, t_n: float, buffer: HistoryBuffer, op: StepOperator,
              params: ModelParams, forcing: Forcing | None = None, *, convection: bool = True,
              picard: PicardStats | None = None) -> np.ndarray:
    """One BDF2 step; ``op`` must have been built with alpha = 3/2."""
    dt = op.dt
    t_new = t_n + dt
    rhs = (4.0 * u_n - u_nm1) / (2.0 * dt)
    if forcing is not None:
        rhs = rhs + forcing(op.ops.grid.nodes, t_new)
    coefficient = buffer.delayed_state(t_new) if (convection and params.tau > 0) else None
    guess = 2.0 * u_n - u_nm1
    return _implicit_solve(op, rhs, coefficient, guess, convection, picard)


@dataclass
class Trajectory:
    grid: SpatialGrid
    norms: NormSeries
    snapshots: list  # (t, values) pairs
    status: RunStatus
    final_state: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def healthy(self) -> bool:
        return self.status.state != "diverged"


def integrate(params: ModelParams, profile: DampingProfile, history: HistorySpec, n: int, dt: float,
              T_end: float, *, bdf_order: int = 2, snapshot_every: int = 0,
              forcing: Forcing | None = None, convection: bool = True,
              thresholds: Thresholds | None = None, record_picard_ratios: bool = False,
              state_callback: Callable[[float, np.ndarray], None] | None = None) -> Trajectory:
    """Advance from t = 0 to ``T_end`` and record norms at every step.

    ``snapshot_every = k`` stores the full state every k steps (and the
    last one); 0 stores only the initial and final states.  The run stops
    early only when it diverges.
    """
    if bdf_order not in (1, 2):
        raise ConfigurationError(f"bdf_order must be 1 or 2, got {bdf_order}")
    if not dt > 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    if T_end < 0:
        raise ConfigurationError(f"T_end must be non-negative, got {T_end}")
    thresholds = thresholds or Thresholds()
    tau, snapped = snap_tau(params.tau, dt)
    run_params = params.replace(tau=tau) if snapped else params
    grid = SpatialGrid(n, params.ell)
    ops = build_operators(grid)
    a_values = sample_profile(profile, grid)
    buffer = init_from_history(history, grid, run_params, dt)

    n_steps = int(round(T_end / dt))
    if abs(n_steps * dt - T_end) > 1e-9 * max(1.0, T_end):
        raise ConfigurationError(f"T_end={T_end} is not a multiple of dt={dt}")

    op1 = StepOperator(ops, run_params, a_values, dt, alpha=1.0)
    op2 = StepOperator(ops, run_params, a_values, dt, alpha=1.5) if bdf_order == 2 else None
    picard = PicardStats(record_ratios=record_picard_ratios)

    u = np.array(buffer.newest, copy=True)
    u_prev = None
    times = np.empty(n_steps + 1)
    rows = np.empty((n_steps + 1, 4))
    times[0] = 0.0
    rows[0] = norms_of(u, ops, a_values)
    snapshots = [(0.0, u.copy())]
    if state_callback is not None:
        state_callback(0.0, u)
    status = RunStatus(thresholds=thresholds)
    quiet_since = None
    w = ops.quadrature.weights
    last = 0

    for k in range(1, n_steps + 1):
        t_n = (k - 1) * dt
        if bdf_order == 1 or u_prev is None:
            u_new = step_bdf1(u, t_n, buffer, op1, run_params, forcing, convection=convection, picard=picard)
        else:
            u_new = step_bdf2(u, u_prev, t_n, buffer, op2, run_params, forcing, convection=convection, picard=picard)
        t_new = k * dt
        peak = float(np.max(np.abs(u_new))) if u_new.size else 0.0
        if not np.isfinite(peak) or peak > thresholds.blowup:
            status.state = "diverged"
            status.t_blowup = t_new
            break
        buffer.push(u_new, step=k)
        diff = u_new - u
        rate = math.sqrt(float(np.dot(w, diff * diff))) / dt
        u_prev, u = u, u_new
        times[k] = t_new
        rows[k] = norms_of(u, ops, a_values)
        last = k
        if state_callback is not None:
            state_callback(t_new, u)
        if snapshot_every and k % snapshot_every == 0:
            snapshots.append((t_new, u.copy()))
        if status.state == "healthy":
            if rate < thresholds.steady_tol:
                if quiet_since is None:
                    quiet_since = t_n
                if t_new - quiet_since >= thresholds.steady_window - 1e-9 and rows[k, 0] > thresholds.zero_tol:
                    status.state = "steady"
                    status.t_settle = quiet_since
                    status.residual = rate
                    status.steady_norm = float(rows[k, 0])
            else:
                quiet_since = None

    times = times[: last + 1]
    rows = rows[: last + 1]
    if snapshots[-1][0] != times[-1]:
        snapshots.append((float(times[-1]), u.copy()))
    metadata = {
        "tau_requested": params.tau,
        "tau_used": tau,
        "tau_snapped": snapped,
        "interpolated_delay": bool(buffer.interpolating and tau > 0),
        "steps": last,
        "factorizations": op1.factorizations + (op2.factorizations if op2 else 0),
        "solves": op1.solves + (op2.solves if op2 else 0),
        "picard": {
            "steps": picard.steps,
            "iterations": picard.iterations,
            "max_iterations": picard.max_iterations,
            "stalls": picard.stalls,
        },
        "buffer_max_len": buffer.depth,
    }
    if picard.stalls:
        metadata["warnings"] = [f"Picard stalled on {picard.stalls} steps; lagged coefficient used"]
    if record_picard_ratios:
        metadata["picard"]["contraction_ratios"] = picard.contraction_ratios
    return Trajectory(grid, NormSeries.from_rows(times, rows), snapshots, status, u, metadata)
