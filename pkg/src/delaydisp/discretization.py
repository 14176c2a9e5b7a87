"""Uniform grid and banded finite-difference operators for clamped ends.

Unknowns live at the interior nodes x_i = i*h, i = 1..n, with h = ell/(n+1).
The boundary values u_0 = u_{n+1} = 0 are eliminated, and the clamped
condition u_x = 0 is imposed through the centred ghost relation
u_{-1} = u_1 (and u_{n+2} = u_n), which turns the first fourth-difference
row into (7, -4, 1)/h^4.

Banded storage follows the LAPACK / ``scipy.linalg.solve_banded``
convention: ``bands[upper + i - j, j] == A[i, j]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .model import ModelParams

__all__ = [
    "SpatialGrid",
    "BandedOperator",
    "Quadrature",
    "Operators",
    "build_grid",
    "assemble_d1",
    "assemble_d2",
    "assemble_d4",
    "build_quadrature",
    "build_operators",
    "l2_inner",
]

MIN_NODES = 5


@dataclass(frozen=True)
class SpatialGrid:
    n: int
    ell: float
    h: float = field(init=False)
    nodes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < MIN_NODES:
            raise ConfigurationError(f"grid needs n >= {MIN_NODES} interior nodes, got {self.n}")
        if not self.ell > 0:
            raise ConfigurationError(f"ell must be positive, got {self.ell}")
        h = self.ell / (self.n + 1)
        nodes = h * np.arange(1, self.n + 1)
        nodes.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "nodes", nodes)


def build_grid(params: ModelParams, n: int) -> SpatialGrid:
    return SpatialGrid(n, params.ell)


@dataclass(frozen=True)
class BandedOperator:
    """Square matrix in diagonal-ordered banded storage."""

    n: int
    lower: int
    upper: int
    bands: np.ndarray = field(repr=False)

    def __post_init__(self):
        if np.shape(self.bands) != (self.lower + self.upper + 1, self.n):
            raise ValueError(
                f"bands must have shape ({self.lower + self.upper + 1}, {self.n}), got {np.shape(self.bands)}"
            )

    def apply(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape != (self.n,):
            raise ValueError(f"expected vector of length {self.n}, got shape {u.shape}")
        out = self.bands[self.upper] * u
        for d in range(1, self.upper + 1):
            out[:-d] += self.bands[self.upper - d, d:] * u[d:]
        for d in range(1, self.lower + 1):
            out[d:] += self.bands[self.upper + d, :-d] * u[:-d]
        return out

    __matmul__ = apply

    def to_dense(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        for d in range(-self.lower, self.upper + 1):
            row = self.bands[self.upper - d]
            if d >= 0:
                A[np.arange(self.n - d), np.arange(d, self.n)] = row[d:]
            else:
                A[np.arange(-d, self.n), np.arange(self.n + d)] = row[: self.n + d]
        return A

    def is_symmetric(self) -> bool:
        if self.lower != self.upper:
            return False
        for d in range(1, self.upper + 1):
            if not np.array_equal(self.bands[self.upper - d, d:], self.bands[self.upper + d, :-d]):
                return False
        return True

    def padded(self, lower: int, upper: int) -> np.ndarray:
        """Copy of the bands embedded in a wider (lower, upper) layout."""
        out = np.zeros((lower + upper + 1, self.n))
        out[upper - self.upper : upper + self.lower + 1] = self.bands
        return out


def _from_diagonals(n: int, diagonals: dict[int, np.ndarray]) -> BandedOperator:
    width = max(abs(d) for d in diagonals)
    bands = np.zeros((2 * width + 1, n))
    for d, values in diagonals.items():
        values = np.broadcast_to(np.asarray(values, dtype=float), (n - abs(d),))
        if d >= 0:
            bands[width - d, d:] = values
        else:
            bands[width - d, : n + d] = values
    bands.setflags(write=False)
    return BandedOperator(n, width, width, bands)


def assemble_d1(grid: SpatialGrid) -> BandedOperator:
    """Centred first difference; boundary neighbours are the zero end values."""
    n, c = grid.n, 1.0 / (2 * grid.h)
    return _from_diagonals(n, {-1: -c, 0: 0.0, 1: c})


def assemble_d2(grid: SpatialGrid) -> BandedOperator:
    """Second difference (1, -2, 1)/h^2 with homogeneous Dirichlet ends."""
    n, c = grid.n, 1.0 / grid.h**2
    return _from_diagonals(n, {-1: c, 0: -2 * c, 1: c})


def assemble_d4(grid: SpatialGrid) -> BandedOperator:
    """Fourth difference (1, -4, 6, -4, 1)/h^4 with clamped ends."""
    n, c = grid.n, 1.0 / grid.h**4
    main = np.full(n, 6 * c)
    # ghost elimination: u_{-1} = u_1 adds one extra copy of u_1 to the 6
    main[0] = main[-1] = 7 * c
    return _from_diagonals(n, {-2: c, -1: -4 * c, 0: main, 1: -4 * c, 2: c})


@dataclass(frozen=True)
class Quadrature:
    """Trapezoidal weights with zero end values (all equal to h)."""

    weights: np.ndarray = field(repr=False)

    def integrate(self, f: np.ndarray) -> float:
        return float(np.dot(self.weights, f))


def build_quadrature(grid: SpatialGrid) -> Quadrature:
    w = np.full(grid.n, grid.h)
    w.setflags(write=False)
    return Quadrature(w)


def l2_inner(quadrature: Quadrature, u: np.ndarray, w: np.ndarray) -> float:
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    if u.shape != w.shape or u.shape != quadrature.weights.shape:
        raise ValueError(
            f"dimension mismatch: {u.shape}, {w.shape} vs {quadrature.weights.shape}"
        )
    return float(np.dot(quadrature.weights * u, w))


@dataclass(frozen=True)
class Operators:
    """Everything the integrator and the norm diagnostics need for one grid."""

    grid: SpatialGrid
    d1: BandedOperator
    d2: BandedOperator
    d4: BandedOperator
    quadrature: Quadrature


def build_operators(grid: SpatialGrid) -> Operators:
    return Operators(grid, assemble_d1(grid), assemble_d2(grid), assemble_d4(grid), build_quadrature(grid))
