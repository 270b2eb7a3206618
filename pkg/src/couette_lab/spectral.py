"""Chebyshev collocation on (-1, 1): nodes, differentiation, quadrature, norms
and Dirichlet Helmholtz solves.

Nodes are the Gauss-Lobatto points ``y_j = cos(j*pi/(n-1))``, so ``y[0] = 1``
and ``y[-1] = -1``. Boundary conditions are imposed by replacing the first and
last rows of the collocation operator.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Union

import numpy as np
import scipy.linalg as sla

from .errors import ConfigError, NumericalError

MIN_NODES = 8


@dataclass(frozen=True, eq=False)
class ChebGrid:
    """Collocation grid with dense differentiation matrices and Clenshaw-Curtis
    weights. Arrays are read-only; instances hash by identity so they can key
    factorization caches."""

    n: int
    nodes: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    weights: np.ndarray

    @property
    def y(self) -> np.ndarray:
        return self.nodes

    @property
    def interior(self) -> slice:
        return slice(1, self.n - 1)


@dataclass
class ModeField:
    """Node values of one horizontal Fourier mode."""

    k: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)

    def check(self, grid: ChebGrid) -> "ModeField":
        if self.values.shape != (grid.n,):
            raise ConfigError(f"field has shape {self.values.shape}, grid has n={grid.n}")
        return self


FieldLike = Union[ModeField, np.ndarray]


def as_values(f: FieldLike, grid: Optional[ChebGrid] = None) -> np.ndarray:
    v = f.values if isinstance(f, ModeField) else np.asarray(f)
    if grid is not None and v.shape != (grid.n,):
        raise ConfigError(f"field has shape {v.shape}, grid has n={grid.n}")
    return v


def chebyshev_nodes(n: int) -> np.ndarray:
    """Gauss-Lobatto nodes cos(j*pi/(n-1)), descending from 1 to -1."""
    if n < 2:
        raise ConfigError("need at least two nodes")
    N = n - 1
    # sin form is exactly antisymmetric about 0
    return np.sin(np.pi * (N - 2 * np.arange(n)) / (2 * N))


def _diff_matrix(n: int) -> np.ndarray:
    N = n - 1
    j = np.arange(n)
    c = np.ones(n)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** j
    # x_i - x_j via the product-of-sines identity, free of cancellation
    dx = 2.0 * np.sin((j[:, None] + j[None, :]) * np.pi / (2 * N)) * np.sin(
        (j[None, :] - j[:, None]) * np.pi / (2 * N)
    )
    np.fill_diagonal(dx, 1.0)
    D = np.outer(c, 1.0 / c) / dx
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


def clenshaw_curtis_weights(n: int) -> np.ndarray:
    N = n - 1
    theta = np.pi * np.arange(n) / N
    w = np.zeros(n)
    v = np.ones(N - 1)
    inner = theta[1:-1]
    if N % 2 == 0:
        w[0] = w[-1] = 1.0 / (N**2 - 1)
        for m in range(1, N // 2):
            v -= 2.0 * np.cos(2 * m * inner) / (4 * m**2 - 1)
        v -= np.cos(N * inner) / (N**2 - 1)
    else:
        w[0] = w[-1] = 1.0 / N**2
        for m in range(1, (N - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * m * inner) / (4 * m**2 - 1)
    w[1:-1] = 2.0 * v / N
    return w


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@lru_cache(maxsize=None)
def build_grid(n: int) -> ChebGrid:
    """Build (and memoize) the n-point grid. Rejects n < 8."""
    if int(n) != n or n < MIN_NODES:
        raise ConfigError(f"grid needs n >= {MIN_NODES} nodes, got {n}")
    n = int(n)
    d1 = _diff_matrix(n)
    d2 = d1 @ d1
    np.fill_diagonal(d2, 0.0)
    np.fill_diagonal(d2, -d2.sum(axis=1))
    return ChebGrid(
        n=n,
        nodes=_frozen(chebyshev_nodes(n)),
        d1=_frozen(d1),
        d2=_frozen(d2),
        weights=_frozen(clenshaw_curtis_weights(n)),
    )


Weight = Union[None, np.ndarray, Callable[[np.ndarray], np.ndarray]]


def _weight_values(grid: ChebGrid, weight: Weight) -> np.ndarray:
    if weight is None:
        return grid.weights
    w = weight(grid.nodes) if callable(weight) else np.asarray(weight, dtype=float)
    if w.shape != (grid.n,):
        raise ConfigError("weight must give one value per node")
    if np.any(w < 0):
        raise ConfigError("weight must be nonnegative")
    return grid.weights * w


def wall_distance_weight(y: np.ndarray) -> np.ndarray:
    """The (1 - |y|) weight."""
    return np.clip(1.0 - np.abs(y), 0.0, None)


def inner(grid: ChebGrid, f: FieldLike, g: FieldLike) -> complex:
    """Quadrature inner product sum_j w_j f_j conj(g_j)."""
    return complex(np.sum(grid.weights * as_values(f, grid) * np.conj(as_values(g, grid))))


def weighted_l2_norm(grid: ChebGrid, f: FieldLike, weight: Weight = None) -> float:
    """(sum_j w_j weight(y_j) |f_j|^2)^(1/2)."""
    v = as_values(f, grid)
    return float(np.sqrt(np.sum(_weight_values(grid, weight) * np.abs(v) ** 2)))


def sup_norm(f: FieldLike) -> float:
    v = as_values(f)
    return float(np.max(np.abs(v))) if v.size else 0.0


def derivative(grid: ChebGrid, f: FieldLike) -> np.ndarray:
    return grid.d1 @ as_values(f, grid)


def _check_lu(lu_piv, what: str):
    diag = np.abs(np.diag(lu_piv[0]))
    if not np.all(np.isfinite(diag)) or diag.min() <= 1e-14 * max(diag.max(), 1.0):
        raise NumericalError(f"{what}: singular collocation system")
    return lu_piv


def dirichlet_rows(A: np.ndarray) -> np.ndarray:
    """Replace the first/last rows of A by identity rows."""
    A = np.array(A, copy=True)
    A[0, :] = 0.0
    A[-1, :] = 0.0
    A[0, 0] = 1.0
    A[-1, -1] = 1.0
    return A


@lru_cache(maxsize=256)
def _helmholtz_lu(grid: ChebGrid, k2: float, shift: float = 0.0):
    A = dirichlet_rows(grid.d2 - (k2 + shift) * np.eye(grid.n))
    return _check_lu(sla.lu_factor(A), "Helmholtz solve")


def solve_helmholtz(grid: ChebGrid, k: float, rhs: FieldLike, bc=(0.0, 0.0)) -> np.ndarray:
    """Solve (d_y^2 - k^2) u = rhs in the interior with u(1) = bc[0], u(-1) = bc[1]."""
    r = np.array(as_values(rhs, grid), dtype=complex)
    r[0], r[-1] = bc
    return sla.lu_solve(_helmholtz_lu(grid, float(k) ** 2), r)


def solve_helmholtz_field(grid: ChebGrid, k: int, rhs: FieldLike, bc=(0.0, 0.0)) -> ModeField:
    return ModeField(k, solve_helmholtz(grid, k, rhs, bc))


@lru_cache(maxsize=64)
def _riesz_lu(grid: ChebGrid):
    A = dirichlet_rows(np.eye(grid.n) - grid.d2)
    return _check_lu(sla.lu_factor(A), "H^-1 Riesz solve")


def hminus1_norm(grid: ChebGrid, f: FieldLike) -> float:
    """Norm of f in the dual of H^1_0: ||w||_{H^1} where (1 - d_y^2) w = f,
    w(+-1) = 0."""
    r = np.array(as_values(f, grid), dtype=complex)
    r[0] = r[-1] = 0.0
    w = sla.lu_solve(_riesz_lu(grid), r)
    dw = grid.d1 @ w
    return float(np.sqrt(np.sum(grid.weights * (np.abs(w) ** 2 + np.abs(dw) ** 2))))
