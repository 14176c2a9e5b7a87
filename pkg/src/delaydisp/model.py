"""Physical parameters, damping profiles and initial histories.

Every damping family is reduced internally to the combined form

    a(x) = b0 + c1*x + c2*sin(k*pi*x/ell)

which has closed-form second and fourth derivatives.  Extremes of a, a''
and a'''' over [0, ell] are located analytically (endpoints plus the
critical points of the trigonometric part), so the hypothesis flags are
exact rather than sampled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .errors import ConfigurationError, CoverageError

if TYPE_CHECKING:
    from .discretization import SpatialGrid

__all__ = [
    "ModelParams",
    "DampingProfile",
    "HistorySpec",
    "HypothesisReport",
    "validate_damping",
    "sample_profile",
    "sample_history",
]

FAMILIES = ("constant", "affine", "sinusoidal", "combined", "tabulated")
_N_COEFFS = {"constant": 1, "affine": 2, "sinusoidal": 3, "combined": 4}

# relative tolerance on finite-difference derivative signs for tabulated profiles
TABULATED_TOL = 1e-6


@dataclass(frozen=True)
class ModelParams:
    """Coefficients of the delayed fourth-order equation.

    Parameters
    ----------
    nu : float
        Diffusion coefficient (> 0).
    mu : float
        Fourth-order coefficient (> 0).
    tau : float
        Time delay (>= 0); ``tau == 0`` gives the undelayed equation.
    ell : float
        Length of the spatial interval (> 0).
    """

    nu: float
    mu: float
    tau: float = 0.0
    ell: float = 1.0

    def __post_init__(self):
        if not self.nu > 0:
            raise ConfigurationError(f"nu must be positive, got {self.nu}")
        if not self.mu > 0:
            raise ConfigurationError(f"mu must be positive, got {self.mu}")
        if not self.ell > 0:
            raise ConfigurationError(f"ell must be positive, got {self.ell}")
        if not self.tau >= 0:
            raise ConfigurationError(f"tau must be non-negative, got {self.tau}")

    def replace(self, **changes) -> "ModelParams":
        data = dict(nu=self.nu, mu=self.mu, tau=self.tau, ell=self.ell)
        data.update(changes)
        return ModelParams(**data)


def _sin_extrema(theta_end: float) -> tuple[float, float]:
    """Exact min and max of sin over the closed interval between 0 and theta_end."""
    lo, hi = sorted((0.0, theta_end))
    values = [math.sin(lo), math.sin(hi)]
    m = math.ceil((lo - math.pi / 2) / math.pi)
    while True:
        theta = math.pi / 2 + m * math.pi
        if theta > hi:
            break
        if theta >= lo:
            values.append(1.0 if m % 2 == 0 else -1.0)
        m += 1
    # sin(0) is exactly 0; sin(pi) in floating point is 1.2e-16 and must not flip a sign flag
    values = [0.0 if abs(v) < 1e-15 else v for v in values]
    return min(values), max(values)


@dataclass(frozen=True)
class DampingProfile:
    """Damping coefficient a(x) on [0, ell].

    ``a0`` (the minimum of a) and ``sup_norm`` (max |a|) are always
    recomputed from the coefficients and cannot be passed in.
    """

    family: str
    coefficients: tuple
    ell: float = 1.0
    a0: float = field(init=False)
    sup_norm: float = field(init=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(
                f"unknown damping family {self.family!r}; expected one of {FAMILIES}"
            )
        coeffs = tuple(float(c) for c in self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        if self.family == "tabulated":
            if len(coeffs) < 5:
                raise ConfigurationError(
                    f"tabulated profile needs at least 5 samples, got {len(coeffs)}"
                )
            values = np.asarray(coeffs)
            lo, hi = float(values.min()), float(values.max())
        else:
            if len(coeffs) != _N_COEFFS[self.family]:
                raise ConfigurationError(
                    f"{self.family} profile takes {_N_COEFFS[self.family]} "
                    f"coefficients, got {len(coeffs)}"
                )
            lo, hi = self._extremes()
        object.__setattr__(self, "a0", lo)
        object.__setattr__(self, "sup_norm", max(abs(lo), abs(hi)))

    # constructors -----------------------------------------------------

    @classmethod
    def constant(cls, c0: float, ell: float = 1.0) -> "DampingProfile":
        return cls("constant", (c0,), ell)

    @classmethod
    def affine(cls, b0: float, c1: float, ell: float = 1.0) -> "DampingProfile":
        return cls("affine", (b0, c1), ell)

    @classmethod
    def sinusoidal(cls, b0: float, c2: float, k: float = 1.0, ell: float = 1.0):
        return cls("sinusoidal", (b0, c2, k), ell)

    @classmethod
    def combined(cls, b0: float, c1: float, c2: float, k: float, ell: float = 1.0):
        return cls("combined", (b0, c1, c2, k), ell)

    @classmethod
    def tabulated(cls, values, ell: float = 1.0) -> "DampingProfile":
        """Samples of a on a uniform grid over [0, ell], endpoints included."""
        return cls("tabulated", tuple(np.asarray(values, dtype=float).ravel()), ell)

    # evaluation -------------------------------------------------------

    @property
    def is_analytic(self) -> bool:
        return self.family != "tabulated"

    def combined_coefficients(self) -> tuple[float, float, float, float]:
        """(b0, c1, c2, k) of the equivalent combined form."""
        c = self.coefficients
        if self.family == "constant":
            return c[0], 0.0, 0.0, 1.0
        if self.family == "affine":
            return c[0], c[1], 0.0, 1.0
        if self.family == "sinusoidal":
            return c[0], 0.0, c[1], c[2]
        if self.family == "combined":
            return c
        raise ConfigurationError("tabulated profiles have no closed form")

    def _wavenumber(self) -> float:
        return self.combined_coefficients()[3] * math.pi / self.ell

    def table_nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.ell, len(self.coefficients))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.family == "tabulated":
            return np.interp(x, self.table_nodes(), np.asarray(self.coefficients))
        b0, c1, c2, _ = self.combined_coefficients()
        w = self._wavenumber()
        return b0 + c1 * x + c2 * np.sin(w * x)

    def second_derivative(self, x):
        b0, c1, c2, _ = self.combined_coefficients()
        w = self._wavenumber()
        return -c2 * w**2 * np.sin(w * np.asarray(x, dtype=float))

    def fourth_derivative(self, x):
        b0, c1, c2, _ = self.combined_coefficients()
        w = self._wavenumber()
        return c2 * w**4 * np.sin(w * np.asarray(x, dtype=float))

    def _extremes(self) -> tuple[float, float]:
        b0, c1, c2, _ = self.combined_coefficients()
        w = self._wavenumber()
        xs = [0.0, self.ell]
        if c2 != 0.0 and w != 0.0:
            r = -c1 / (c2 * w)
            if abs(r) <= 1.0:
                base = math.acos(r)
                lo, hi = sorted((0.0, w * self.ell))
                for theta0 in (base, -base):
                    m = math.floor((lo - theta0) / (2 * math.pi))
                    while theta0 + 2 * math.pi * m <= hi:
                        theta = theta0 + 2 * math.pi * m
                        if theta >= lo:
                            xs.append(min(max(theta / w, 0.0), self.ell))
                        m += 1
        values = self(np.array(xs))
        return float(values.min()), float(values.max())

    def label(self) -> str:
        if self.family == "tabulated":
            return f"tabulated[{len(self.coefficients)}]"
        b0, c1, c2, k = self.combined_coefficients()
        parts = [f"{b0:g}"]
        if c1:
            parts.append(f"{c1:+g}x")
        if c2:
            parts.append(f"{c2:+g}sin({k:g}pi x/{self.ell:g})")
        return "".join(parts)


@dataclass(frozen=True)
class HypothesisReport:
    positive_above_a0: bool
    concave_second_derivative: bool
    nonneg_fourth_derivative: bool
    a0: float
    sup_norm: float

    @property
    def all_hold(self) -> bool:
        return (
            self.positive_above_a0
            and self.concave_second_derivative
            and self.nonneg_fourth_derivative
        )

    def as_dict(self) -> dict:
        return {
            "positive_above_a0": self.positive_above_a0,
            "concave_second_derivative": self.concave_second_derivative,
            "nonneg_fourth_derivative": self.nonneg_fourth_derivative,
            "a0": self.a0,
            "sup_norm": self.sup_norm,
        }


def validate_damping(profile: DampingProfile, grid: SpatialGrid | None = None) -> HypothesisReport:
    """Check a(x) > a0 > 0, a'' <= 0 and a'''' >= 0 on [0, ell].

    Analytic families are decided exactly.  Tabulated profiles use
    centred finite differences on their own sample table, with a relative
    tolerance of ``TABULATED_TOL``.  ``grid`` is accepted for interface
    symmetry with the other sampling routines and is not needed.
    """
    if profile.is_analytic:
        b0, c1, c2, k = profile.combined_coefficients()
        w = k * math.pi / profile.ell
        smin, smax = _sin_extrema(w * profile.ell)
        d2 = (-c2 * w**2 * smin, -c2 * w**2 * smax)
        d4 = (c2 * w**4 * smin, c2 * w**4 * smax)
        concave = max(d2) <= 0.0
        fourth = min(d4) >= 0.0
    else:
        values = np.asarray(profile.coefficients)
        ds = profile.ell / (len(values) - 1)
        scale = max(profile.sup_norm, 1.0)
        second = (values[2:] - 2 * values[1:-1] + values[:-2]) / ds**2
        fourth_fd = (
            values[4:] - 4 * values[3:-1] + 6 * values[2:-2] - 4 * values[1:-3] + values[:-4]
        ) / ds**4
        concave = bool(np.all(second <= TABULATED_TOL * scale / profile.ell**2))
        fourth = bool(np.all(fourth_fd >= -TABULATED_TOL * scale / profile.ell**4))
    return HypothesisReport(
        positive_above_a0=profile.a0 > 0.0,
        concave_second_derivative=bool(concave),
        nonneg_fourth_derivative=bool(fourth),
        a0=profile.a0,
        sup_norm=profile.sup_norm,
    )


def sample_profile(profile: DampingProfile, grid: SpatialGrid) -> np.ndarray:
    """Values of a at the interior nodes of ``grid``."""
    return np.asarray(profile(grid.nodes), dtype=float)


_SPACE_SHAPES = ("sin", "bump", "zero")
_TIME_SHAPES = ("one", "exp")
HISTORY_KINDS = ("separable", "constant", "tabulated")


@dataclass(frozen=True)
class HistorySpec:
    """Initial history v(x, s) for s in [-tau, 0].

    ``kind="constant"`` means v(x, s) = amplitude * phi(x) for every s.
    ``kind="separable"`` multiplies that by psi(s).  Space shapes:
    ``"sin"`` (params ``(k,)``: sin(k pi x / ell)), ``"bump"``
    (x^2 (ell - x)^2) and ``"zero"``.  Time shapes: ``"one"`` and
    ``"exp"`` (params ``(rate,)``: exp(rate * s)).

    ``kind="tabulated"`` takes ``s_nodes`` (increasing, ending at 0) and a
    ``table`` of shape (len(s_nodes), m) holding profiles on a uniform
    grid of m points over [0, ell]; it is interpolated linearly in both
    variables.
    """

    kind: str = "constant"
    phi: str = "sin"
    phi_params: tuple = (1.0,)
    psi: str = "one"
    psi_params: tuple = ()
    amplitude: float = 1.0
    ell: float = 1.0
    s_nodes: tuple = ()
    table: tuple = ()

    def __post_init__(self):
        if self.kind not in HISTORY_KINDS:
            raise ConfigurationError(f"unknown history kind {self.kind!r}")
        if self.kind == "tabulated":
            s = np.asarray(self.s_nodes, dtype=float)
            tab = np.asarray(self.table, dtype=float)
            if s.ndim != 1 or tab.ndim != 2 or tab.shape[0] != s.size or s.size < 1:
                raise ConfigurationError("tabulated history needs table of shape (len(s_nodes), m)")
            if np.any(np.diff(s) <= 0) or s[-1] != 0.0:
                raise ConfigurationError("s_nodes must increase strictly and end at 0")
            object.__setattr__(self, "s_nodes", tuple(s))
            object.__setattr__(self, "table", tuple(map(tuple, tab)))
            return
        if self.phi not in _SPACE_SHAPES:
            raise ConfigurationError(f"unknown space shape {self.phi!r}")
        if self.psi not in _TIME_SHAPES:
            raise ConfigurationError(f"unknown time shape {self.psi!r}")
        object.__setattr__(self, "phi_params", tuple(float(p) for p in self.phi_params))
        object.__setattr__(self, "psi_params", tuple(float(p) for p in self.psi_params))

    @classmethod
    def constant_profile(cls, shape: str = "sin", amplitude: float = 1.0, k: float = 1.0, ell: float = 1.0):
        params = (k,) if shape == "sin" else ()
        return cls("constant", shape, params, amplitude=amplitude, ell=ell)

    @classmethod
    def zero(cls, ell: float = 1.0) -> "HistorySpec":
        return cls("constant", "zero", (), amplitude=0.0, ell=ell)

    def space(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.phi == "zero":
            return np.zeros_like(x)
        if self.phi == "sin":
            k = self.phi_params[0] if self.phi_params else 1.0
            return self.amplitude * np.sin(k * np.pi * x / self.ell)
        return self.amplitude * x**2 * (self.ell - x) ** 2

    def time(self, s: float) -> float:
        if self.kind == "constant" or self.psi == "one":
            return 1.0
        return math.exp(self.psi_params[0] * s)

    def __call__(self, x, s: float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "tabulated":
            s_nodes = np.asarray(self.s_nodes)
            table = np.asarray(self.table)
            if s < s_nodes[0] - 1e-12 or s > 1e-12:
                raise CoverageError(f"s={s} outside tabulated history [{s_nodes[0]}, 0]")
            xs = np.linspace(0.0, self.ell, table.shape[1])
            j = int(np.clip(np.searchsorted(s_nodes, s, side="right") - 1, 0, s_nodes.size - 1))
            if j == s_nodes.size - 1:
                return np.interp(x, xs, table[j])
            theta = (s - s_nodes[j]) / (s_nodes[j + 1] - s_nodes[j])
            row = (1 - theta) * table[j] + theta * table[j + 1]
            return np.interp(x, xs, row)
        return self.space(x) * self.time(s)

    def is_clamped_consistent(self, tol: float = 1e-12) -> bool:
        """True when the profile and its slope vanish at both ends."""
        h = 1e-6 * self.ell
        ends = np.array([0.0, self.ell])
        values = self(ends, 0.0)
        slopes = (self(ends + h, 0.0) - self(ends - h, 0.0)) / (2 * h)
        scale = max(1.0, abs(self.amplitude))
        return bool(np.all(np.abs(values) <= tol * scale) and np.all(np.abs(slopes) <= 1e-6 * scale))


def sample_history(spec: HistorySpec, grid: SpatialGrid, s: float, tau: float) -> np.ndarray:
    """Interior-node samples of v(., s); ``s`` must lie in [-tau, 0]."""
    eps = 1e-12 * max(1.0, tau)
    if s < -tau - eps or s > eps:
        raise CoverageError(f"history time s={s} outside [-{tau}, 0]")
    return np.asarray(spec(grid.nodes, s), dtype=float)
