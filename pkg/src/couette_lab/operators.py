"""Per-mode linearized operators around Couette flow, vorticity-to-velocity
inversion and the non-slip closure.

For wavenumber k the linear part of both transport equations is

    L = -kappa (d_y^2 - k^2) + i k y

with kappa = mu for temperature and kappa = nu for vorticity. Temperature has
Dirichlet data at the walls. Vorticity has no boundary condition of its own;
instead the stream function must satisfy psi = d_y psi = 0 at y = +-1, which is
closed here with the influence-matrix construction in :class:`InfluenceSolver`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla
from numpy.polynomial import chebyshev as C

from .errors import ConfigError, NumericalError
from .spectral import (
    ChebGrid,
    FieldLike,
    ModeField,
    _check_lu,
    _helmholtz_lu,
    as_values,
    dirichlet_rows,
    solve_helmholtz,
)

TEMPERATURE = "temperature"
VORTICITY = "vorticity"
KINDS = (TEMPERATURE, VORTICITY)

DEFAULT_NU0 = 1.0
DEFAULT_K_CAP = 32


@dataclass(frozen=True)
class FluidParams:
    """Viscosity and thermal diffusivity.

    Both must lie in (0, nu0]. ``allow_inviscid`` admits zeros, which only the
    transport conservation tests use.
    """

    nu: float
    mu: float
    nu0: float = DEFAULT_NU0
    allow_inviscid: bool = False

    def __post_init__(self):
        for name in ("nu", "mu"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0 or (v == 0 and not self.allow_inviscid):
                raise ConfigError(f"{name} must be positive, got {v}")
            if v > self.nu0:
                raise ConfigError(f"{name}={v} exceeds the cap nu0={self.nu0}")

    @property
    def min_diffusivity(self) -> float:
        return min(self.nu, self.mu)


@dataclass(frozen=True, eq=False)
class ModeOperator:
    """Dense collocation matrix of L for one wavenumber.

    For ``kind == "temperature"`` the first and last rows are Dirichlet identity
    rows. For ``kind == "vorticity"`` they are zero: the closure is supplied by
    the evolution scheme.
    """

    k: int
    kind: str
    matrix: np.ndarray
    params: FluidParams
    grid: ChebGrid

    @property
    def diffusivity(self) -> float:
        return self.params.mu if self.kind == TEMPERATURE else self.params.nu

    @property
    def interior(self) -> np.ndarray:
        """The operator restricted to interior unknowns (zero wall values)."""
        s = self.grid.interior
        return self.matrix[s, s]

    def raw(self) -> np.ndarray:
        """L at every node, without boundary-row replacement."""
        return linear_matrix(self.grid, self.k, self.diffusivity)

    def apply(self, f: FieldLike) -> np.ndarray:
        return self.matrix @ as_values(f, self.grid)


def linear_matrix(grid: ChebGrid, k: float, kappa: float) -> np.ndarray:
    """-kappa (D2 - k^2 I) + i k diag(y)."""
    n = grid.n
    return -kappa * (grid.d2 - k**2 * np.eye(n)) + 1j * k * np.diag(grid.nodes)


def assemble_mode_operator(grid: ChebGrid, k: int, params: FluidParams, kind: str) -> ModeOperator:
    if kind not in KINDS:
        raise ConfigError(f"unknown operator kind {kind!r}")
    kappa = params.mu if kind == TEMPERATURE else params.nu
    A = linear_matrix(grid, k, kappa)
    if kind == TEMPERATURE:
        A = dirichlet_rows(A)
    else:
        A[0, :] = 0.0
        A[-1, :] = 0.0
    A.setflags(write=False)
    return ModeOperator(k=int(k), kind=kind, matrix=A, params=params, grid=grid)


# -- compatibility -----------------------------------------------------------


def _homogeneous_basis(grid: ChebGrid, k: int) -> np.ndarray:
    # e^{k(y-1)} and e^{-k(y+1)}: the same span as e^{+-ky}, scaled to stay <= 1
    a = abs(k)
    y = grid.nodes
    return np.stack([np.exp(a * (y - 1.0)), np.exp(-a * (y + 1.0))])


def compatibility_inner_products(grid: ChebGrid, k: int, w: FieldLike) -> np.ndarray:
    """Quadrature inner products <w, e^{ky}>, <w, e^{-ky}> (unscaled basis)."""
    y = grid.nodes
    v = as_values(w, grid)
    return np.array([np.sum(grid.weights * v * np.exp(s * k * y)) for s in (1.0, -1.0)])


def compatibility_projection(grid: ChebGrid, k: int, w: FieldLike, k_cap: int = DEFAULT_K_CAP) -> ModeField:
    """Remove from w its quadrature-orthogonal component in span{e^{ky}, e^{-ky}}."""
    if k == 0:
        raise ConfigError("compatibility projection needs k != 0")
    if abs(k) > k_cap:
        raise ConfigError(f"|k|={abs(k)} exceeds the cap {k_cap}")
    v = np.asarray(as_values(w, grid), dtype=complex)
    H = _homogeneous_basis(grid, k)
    G = (H * grid.weights) @ H.T
    b = (H * grid.weights) @ v
    coef = np.linalg.solve(G, b)
    return ModeField(int(k), v - coef @ H)


# -- velocity recovery -------------------------------------------------------


class Velocity(NamedTuple):
    u1: np.ndarray
    u2: np.ndarray
    psi: np.ndarray
    residual: float
    """Non-slip mismatch: max |u1| at the walls."""


def integrate_from_bottom(grid: ChebGrid, f: np.ndarray) -> np.ndarray:
    """Spectral antiderivative F with F(-1) = 0 (interpolant integrated exactly)."""
    f = np.asarray(f)
    y = grid.nodes
    deg = grid.n - 1
    out = []
    for part in (f.real, f.imag):
        c = C.chebfit(y, part, deg)
        out.append(C.chebval(y, C.chebint(c, lbnd=-1.0)))
    return out[0] + 1j * out[1]


def velocity_from_vorticity(grid: ChebGrid, k: int, w: FieldLike) -> Velocity:
    """u1 = d_y psi, u2 = -i k psi with (d_y^2 - k^2) psi = w, psi(+-1) = 0.

    For k = 0 the mean flow is u1 = int_{-1}^y w with u2 = 0; a nonzero value at
    y = 1 signals a vorticity with nonzero mean and is returned as the residual.
    """
    v = as_values(w, grid)
    if k == 0:
        u1 = integrate_from_bottom(grid, v)
        return Velocity(u1, np.zeros_like(u1), np.zeros_like(u1), float(abs(u1[0])))
    psi = solve_helmholtz(grid, k, v)
    u1 = grid.d1 @ psi
    u2 = -1j * k * psi
    return Velocity(u1, u2, psi, float(max(abs(u1[0]), abs(u1[-1]))))


# -- shifted solves ----------------------------------------------------------


class TemperatureSolver:
    """Solves (s + L_mu) theta = r at interior nodes with theta(+-1) = 0."""

    def __init__(self, grid: ChebGrid, k: int, mu: float, shift: complex):
        self.grid, self.k, self.mu, self.shift = grid, k, mu, shift
        M = shift * np.eye(grid.n) + linear_matrix(grid, k, mu)
        self._lu = _check_lu(sla.lu_factor(dirichlet_rows(M)), "temperature solve")

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        r = np.array(rhs, dtype=complex)
        r[0] = r[-1] = 0.0
        out = sla.lu_solve(self._lu, r)
        out[0] = out[-1] = 0.0
        return out


class InfluenceSolver:
    """Solves (s + L_nu) w = r at interior nodes together with the non-slip
    condition on the stream function, psi(+-1) = d_y psi(+-1) = 0.

    The wall values of w are the two unknowns that close the system. A particular
    solution with zero wall vorticity is corrected by the two homogeneous
    solutions w_a (w(1)=1, w(-1)=0) and w_b (w(1)=0, w(-1)=1); their
    coefficients solve the 2x2 influence system that zeroes d_y psi at the walls.

    With nu = 0 there is no closure: the transport equation is solved at every
    node, which keeps psi(+-1) = 0 but lets u1 slip.
    """

    def __init__(self, grid: ChebGrid, k: int, nu: float, shift: complex):
        if k == 0:
            raise ConfigError("the influence closure is defined for k != 0")
        self.grid, self.k, self.nu, self.shift = grid, k, nu, shift
        n = grid.n
        M = shift * np.eye(n) + linear_matrix(grid, k, nu)
        self.inviscid = nu == 0
        if self.inviscid:
            self._lu = _check_lu(sla.lu_factor(M), "inviscid vorticity solve")
            return
        self._lu = _check_lu(sla.lu_factor(dirichlet_rows(M)), "vorticity solve")
        e = np.zeros((n, 2), dtype=complex)
        e[0, 0] = 1.0
        e[-1, 1] = 1.0
        self._homog = sla.lu_solve(self._lu, e)
        # wall slopes of psi as linear functionals of w
        zero_walls = np.eye(n)
        zero_walls[0, 0] = zero_walls[-1, -1] = 0.0
        psi_op = sla.lu_solve(_helmholtz_lu(grid, float(k) ** 2), zero_walls)
        self._slope = (grid.d1 @ psi_op)[[0, -1], :]
        G = self._slope @ self._homog
        if abs(np.linalg.det(G)) < 1e-300 or not np.all(np.isfinite(G)):
            raise NumericalError(f"influence matrix singular at k={k}")
        self._G_lu = sla.lu_factor(G)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        r = np.array(rhs, dtype=complex)
        if self.inviscid:
            return sla.lu_solve(self._lu, r)
        r[0] = r[-1] = 0.0
        wp = sla.lu_solve(self._lu, r)
        c = sla.lu_solve(self._G_lu, -(self._slope @ wp))
        return wp + self._homog @ c
