"""Ring buffer of past states used to evaluate u(., t - tau).

Time stamps are stored as integer step indices k (t = k*dt) so the lattice
stays exact however long the run is.
"""
from __future__ import annotations

import math
from collections import deque

import numpy as np

from .discretization import SpatialGrid
from .errors import ConfigurationError, CoverageError, SequencingError
from .model import HistorySpec, ModelParams, sample_history

__all__ = ["HistoryBuffer", "snap_tau", "init_from_history", "push", "delayed_state"]

# relative distance to the dt lattice below which tau is treated as a multiple of dt
SNAP_RTOL = 1e-9


def snap_tau(tau: float, dt: float) -> tuple[float, bool]:
    """Return (tau', snapped) where tau' is the nearest multiple of dt if tau
    is within floating-point noise of one, else tau unchanged."""
    if tau == 0.0:
        return 0.0, False
    steps = round(tau / dt)
    if steps > 0 and abs(tau / dt - steps) < SNAP_RTOL * max(1.0, steps):
        snapped = steps * dt
        return snapped, snapped != tau
    return tau, False


class HistoryBuffer:
    """States on the lattice covering [newest - tau - dt, newest]."""

    def __init__(self, dt: float, tau: float, n: int):
        if not dt > 0:
            raise ConfigurationError(f"dt must be positive, got {dt}")
        self.dt = float(dt)
        self.tau = float(tau)
        self.n = n
        self.lag = self.tau / self.dt
        self.aligned = abs(self.lag - round(self.lag)) < SNAP_RTOL * max(1.0, self.lag)
        self.interpolating = not self.aligned
        self.depth = math.ceil(self.lag - SNAP_RTOL * max(1.0, self.lag)) + 2 if self.tau > 0 else 1
        self._steps: deque[int] = deque()
        self._states: deque[np.ndarray] = deque()

    def __len__(self) -> int:
        return len(self._steps)

    @property
    def newest_step(self) -> int:
        return self._steps[-1]

    @property
    def oldest_step(self) -> int:
        return self._steps[0]

    @property
    def newest_time(self) -> float:
        return self._steps[-1] * self.dt

    @property
    def oldest_time(self) -> float:
        return self._steps[0] * self.dt

    @property
    def newest(self) -> np.ndarray:
        return self._states[-1]

    def stamps(self) -> list[float]:
        return [k * self.dt for k in self._steps]

    def _append(self, k: int, values: np.ndarray) -> None:
        values = np.array(values, dtype=float)
        values.setflags(write=False)
        self._steps.append(k)
        self._states.append(values)

    def push(self, values: np.ndarray, t: float | None = None, *, step: int | None = None) -> None:
        """Append the state at the next lattice time and evict stale slots.

        Give either the integer ``step`` or the time ``t``; both must equal
        the newest stamp plus one step.
        """
        expected = self.newest_step + 1
        if step is None:
            if t is None:
                step = expected
            else:
                step = round(t / self.dt)
                if abs(t / self.dt - step) > 1e-6:
                    raise SequencingError(f"time {t} is not on the dt={self.dt} lattice")
        if step != expected:
            raise SequencingError(
                f"pushed step {step} (t={step * self.dt}) but expected {expected}"
            )
        if np.shape(values) != (self.n,):
            raise ValueError(f"state must have length {self.n}")
        self._append(step, values)
        while len(self._steps) > self.depth:
            self._steps.popleft()
            self._states.popleft()

    def delayed_state(self, t: float) -> np.ndarray:
        """u(., t - tau), exact on the lattice and linearly interpolated otherwise."""
        q = (t - self.tau) / self.dt
        k = round(q)
        tol = 1e-9 * max(1.0, abs(q))
        if abs(q - k) <= tol:
            q = float(k)
        if q < self.oldest_step - tol or q > self.newest_step + tol:
            raise CoverageError(
                f"t - tau = {t - self.tau} outside stored window "
                f"[{self.oldest_time}, {self.newest_time}]"
            )
        if q == k:
            return self._states[k - self.oldest_step]
        j = math.floor(q)
        theta = q - j
        i = j - self.oldest_step
        return (1.0 - theta) * self._states[i] + theta * self._states[i + 1]

    def state_at_step(self, k: int) -> np.ndarray:
        if not self.oldest_step <= k <= self.newest_step:
            raise CoverageError(f"step {k} not stored")
        return self._states[k - self.oldest_step]


def init_from_history(spec: HistorySpec, grid: SpatialGrid, params: ModelParams, dt: float) -> HistoryBuffer:
    """Fill a buffer with v(., -k*dt), k = ceil(tau/dt) .. 0 (oldest first)."""
    if not dt > 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    tau = params.tau
    if tau > 0 and dt > tau * (1 + SNAP_RTOL):
        raise ConfigurationError(
            f"dt={dt} exceeds tau={tau}: the delayed value would not predate the unknown step"
        )
    buf = HistoryBuffer(dt, tau, grid.n)
    count = buf.depth - 1 if tau > 0 else 1
    for k in range(count - 1, -1, -1):
        s = -k * dt
        if spec.kind == "tabulated":
            # the extra oldest slot is only a guard; a table cannot be extrapolated
            s = max(s, -tau)
        values = sample_history(spec, grid, s, max(tau, k * dt))
        buf._append(-k, values)
    return buf


def push(buffer: HistoryBuffer, state: np.ndarray, t: float) -> None:
    buffer.push(state, t)


def delayed_state(buffer: HistoryBuffer, t: float) -> np.ndarray:
    return buffer.delayed_state(t)
