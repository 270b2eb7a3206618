"""Pseudo-spectral evolution of the full perturbation system around Couette flow.

Per horizontal mode k != 0

    (d_t - nu (d_y^2 - k^2) + i k y) w_k  = -i k th_k - i k f1_k - d_y f2_k
    (d_t - mu (d_y^2 - k^2) + i k y) th_k = -i k g1_k - d_y g2_k

with f = (u1 w, u2 w) and g = (u1 th, u2 th) formed in physical x space. The
mean flow is carried by u1_0 itself,

    d_t u1_0 - nu d_y^2 u1_0 = -f2_0,      u1_0(+-1) = 0,   w_0 = d_y u1_0
    d_t th_0 - mu d_y^2 th_0 = -d_y g2_0,

and u2_0 = 0 identically.

Time stepping is Crank-Nicolson on the linear operators (including the buoyancy
source, averaged over the step after the temperature update) and second-order
Adams-Bashforth on the fluxes, after a damped first step (see :func:`start`). Only k = 0..k_max is stored; negative modes are
the complex conjugates, so reality holds by construction.
"""
from __future__ import annotations

import json
import logging
import math
import struct
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from typing import BinaryIO, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla

from .errors import ConfigError, NumericalError
from .ledger import EnergyLedger
from .operators import (
    DEFAULT_K_CAP,
    FluidParams,
    InfluenceSolver,
    TemperatureSolver,
    compatibility_projection,
    linear_matrix,
)
from .spectral import ChebGrid, _helmholtz_lu, build_grid, dirichlet_rows

log = logging.getLogger(__name__)

BLOWUP_FACTOR = 1e6
CFL_NUMBER = 0.5


class CFLViolation(NumericalError):
    """The step exceeds the explicit advection limit."""

    def __init__(self, dt: float, suggested_dt: float):
        super().__init__(f"dt={dt:g} violates the advection CFL limit; use dt <= {suggested_dt:.3e}")
        self.dt = dt
        self.suggested_dt = suggested_dt


def dealiased_points(k_max: int) -> int:
    """Even x-grid size with at least 3(2 k_max + 1)/2 points."""
    return 2 * math.ceil(3 * (2 * k_max + 1) / 4)


@dataclass
class ChannelState:
    """Modes k = 0..k_max of vorticity and temperature at time ``time``.

    ``u0`` is the mean streamwise velocity; ``omega[0]`` is kept equal to its
    y-derivative. ``u1``/``u2`` are derived and refreshed by :func:`refresh`.
    ``history`` holds the flux terms of the previous step for the
    Adams-Bashforth extrapolation.
    """

    grid: ChebGrid
    k_max: int
    omega: np.ndarray
    theta: np.ndarray
    u0: np.ndarray
    time: float = 0.0
    u1: Optional[np.ndarray] = field(default=None, repr=False)
    u2: Optional[np.ndarray] = field(default=None, repr=False)
    history: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]] = field(default=None, repr=False)

    @property
    def ks(self) -> np.ndarray:
        return np.arange(self.k_max + 1)

    def mode(self, name: str, k: int) -> np.ndarray:
        a = getattr(self, name)
        return a[k] if k >= 0 else np.conj(a[-k])

    def full(self, name: str) -> np.ndarray:
        """Array of shape (2 k_max + 1, n) ordered k = -k_max..k_max."""
        a = getattr(self, name)
        return np.concatenate([np.conj(a[:0:-1]), a], axis=0)

    def max_mode_norm(self) -> float:
        w = self.grid.weights
        nw = np.sqrt((np.abs(self.omega) ** 2) @ w)
        nt = np.sqrt((np.abs(self.theta) ** 2) @ w)
        return float(max(nw.max(), nt.max()))

    def noslip_residual(self) -> float:
        return float(max(np.abs(self.u1[:, [0, -1]]).max(), np.abs(self.u2[:, [0, -1]]).max()))

    def copy(self) -> "ChannelState":
        return replace(self, omega=self.omega.copy(), theta=self.theta.copy(), u0=self.u0.copy(),
                       u1=None if self.u1 is None else self.u1.copy(),
                       u2=None if self.u2 is None else self.u2.copy())


@lru_cache(maxsize=16)
def _velocity_ops(grid: ChebGrid, k_max: int) -> Tuple[np.ndarray, np.ndarray]:
    """Stacked dense maps w_k -> psi_k and w_k -> d_y psi_k for k = 1..k_max."""
    n = grid.n
    zero_walls = np.eye(n)
    zero_walls[0, 0] = zero_walls[-1, -1] = 0.0
    psi = np.stack([sla.lu_solve(_helmholtz_lu(grid, float(k) ** 2), zero_walls) for k in range(1, k_max + 1)])
    return psi, grid.d1 @ psi


def _apply(ops: np.ndarray, f: np.ndarray) -> np.ndarray:
    return np.einsum("kij,kj->ki", ops, f)


def refresh(state: ChannelState) -> ChannelState:
    """Recompute velocities from the vorticity modes (in place)."""
    g, K = state.grid, state.k_max
    u1 = np.zeros((K + 1, g.n), dtype=complex)
    u2 = np.zeros_like(u1)
    u1[0] = state.u0
    if K > 0:
        psi_op, dpsi_op = _velocity_ops(g, K)
        w = state.omega[1:]
        u1[1:] = _apply(dpsi_op, w)
        u2[1:] = -1j * np.arange(1, K + 1)[:, None] * _apply(psi_op, w)
    state.u1, state.u2 = u1, u2
    return state


def make_state(grid: ChebGrid, k_max: int, omega: Optional[np.ndarray] = None,
               theta: Optional[np.ndarray] = None, u0: Optional[np.ndarray] = None,
               time: float = 0.0) -> ChannelState:
    """Assemble a state from mode arrays (k = 0..k_max). ``omega[0]`` is ignored
    in favour of ``d_y u0``."""
    if k_max < 0 or k_max > DEFAULT_K_CAP:
        raise ConfigError(f"k_max must lie in [0, {DEFAULT_K_CAP}]")
    shape = (k_max + 1, grid.n)
    om = np.zeros(shape, dtype=complex) if omega is None else np.array(omega, dtype=complex)
    th = np.zeros(shape, dtype=complex) if theta is None else np.array(theta, dtype=complex)
    if om.shape != shape or th.shape != shape:
        raise ConfigError(f"mode arrays must have shape {shape}")
    u = np.zeros(grid.n) if u0 is None else np.array(u0, dtype=float)
    om[0] = grid.d1 @ u
    th[0] = th[0].real
    return refresh(ChannelState(grid, k_max, om, th, u, float(time)))


# -- fluxes -------------------------------------------------------------------


@dataclass
class NonlinearFluxes:
    """Modes k = 0..k_max of f1 = u1 w, f2 = u2 w, g1 = u1 th, g2 = u2 th."""

    f1: np.ndarray
    f2: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    max_speed: float = 0.0

    def full(self, name: str) -> np.ndarray:
        a = getattr(self, name)
        return np.concatenate([np.conj(a[:0:-1]), a], axis=0)


def to_physical(modes: np.ndarray, nx: int) -> np.ndarray:
    """Values on nx equispaced x points of sum_k c_k e^{ikx} (real field)."""
    c = np.zeros((nx // 2 + 1,) + modes.shape[1:], dtype=complex)
    c[: modes.shape[0]] = modes
    c[0] = c[0].real
    return np.fft.irfft(c, n=nx, axis=0) * nx


def from_physical(values: np.ndarray, k_max: int) -> np.ndarray:
    nx = values.shape[0]
    return np.fft.rfft(values, axis=0)[: k_max + 1] / nx


def compute_fluxes(state: ChannelState) -> NonlinearFluxes:
    """Quadratic products on the 3/2-padded x grid, truncated to |k| <= k_max."""
    if state.u1 is None:
        refresh(state)
    nx = dealiased_points(state.k_max)
    u1 = to_physical(state.u1, nx)
    u2 = to_physical(state.u2, nx)
    w = to_physical(state.omega, nx)
    th = to_physical(state.theta, nx)
    K = state.k_max
    speed = float(np.sqrt(u1**2 + u2**2).max()) if u1.size else 0.0
    return NonlinearFluxes(
        f1=from_physical(u1 * w, K), f2=from_physical(u2 * w, K),
        g1=from_physical(u1 * th, K), g2=from_physical(u2 * th, K),
        max_speed=speed,
    )


def direct_fluxes(state: ChannelState) -> NonlinearFluxes:
    """Reference convolution sums f_k = sum_l u_l w_{k-l} over retained modes."""
    K = state.k_max
    U1, U2, W, T = (state.full(a) for a in ("u1", "u2", "omega", "theta"))
    out = {name: np.zeros((K + 1, state.grid.n), dtype=complex) for name in ("f1", "f2", "g1", "g2")}
    for k in range(K + 1):
        for l in range(-K, K + 1):
            m = k - l
            if -K <= m <= K:
                out["f1"][k] += U1[l + K] * W[m + K]
                out["f2"][k] += U2[l + K] * W[m + K]
                out["g1"][k] += U1[l + K] * T[m + K]
                out["g2"][k] += U2[l + K] * T[m + K]
    return NonlinearFluxes(**out)


def _tendencies(state: ChannelState, fl: NonlinearFluxes):
    g = state.grid
    ik = 1j * state.ks[:, None]
    n_theta = -ik * fl.g1 - fl.g2 @ g.d1.T
    n_omega = -ik * fl.f1 - fl.f2 @ g.d1.T
    n_mean = -fl.f2[0].real
    return n_omega, n_theta, n_mean


# -- step ---------------------------------------------------------------------


class StepOperators:
    """Dense per-mode solution maps of the theta-scheme

        (1/(a dt) + L) f' = (1/(a dt) - (1-a)/a L) f + F / a

    for one (grid, k_max, nu, mu, dt, a); a = 1/2 is Crank-Nicolson, a = 1 is
    backward Euler."""

    def __init__(self, grid: ChebGrid, k_max: int, params: FluidParams, dt: float, implicitness: float = 0.5):
        if not dt > 0:
            raise ConfigError("dt must be positive")
        if not 0.5 <= implicitness <= 1.0:
            raise ConfigError("implicitness must lie in [1/2, 1]")
        self.grid, self.k_max, self.params, self.dt = grid, k_max, params, dt
        a = implicitness
        self.implicitness = a
        n, s, b = grid.n, 1.0 / (a * dt), (1.0 - a) / a
        eye = np.eye(n)
        self.theta_solve = np.stack([TemperatureSolver(grid, k, params.mu, s).solve(eye)
                                     for k in range(k_max + 1)])
        self.omega_solve = np.stack([InfluenceSolver(grid, k, params.nu, s).solve(eye)
                                     for k in range(1, k_max + 1)])
        nu = params.nu
        if nu > 0:
            lu = sla.lu_factor(dirichlet_rows(s * eye - nu * grid.d2))
            walls = eye.copy()
            walls[0, 0] = walls[-1, -1] = 0.0
            self.mean_solve = sla.lu_solve(lu, walls)
        else:
            self.mean_solve = eye / s
        self.theta_explicit = np.stack([s * eye - b * linear_matrix(grid, k, params.mu) for k in range(k_max + 1)])
        self.omega_explicit = np.stack([s * eye - b * linear_matrix(grid, k, nu) for k in range(1, k_max + 1)])
        self.mean_explicit = s * eye + b * nu * grid.d2


@lru_cache(maxsize=8)
def step_operators(grid: ChebGrid, k_max: int, params: FluidParams, dt: float,
                   implicitness: float = 0.5) -> StepOperators:
    return StepOperators(grid, k_max, params, dt, implicitness)


def cfl_limit(state: ChannelState, fluxes: Optional[NonlinearFluxes] = None) -> float:
    fl = compute_fluxes(state) if fluxes is None else fluxes
    dx = 2 * np.pi / dealiased_points(state.k_max)
    return math.inf if fl.max_speed == 0 else CFL_NUMBER * dx / fl.max_speed


def _advance(state: ChannelState, params: FluidParams, dt: float, nonlinear: bool,
             implicitness: float, extrapolate: bool) -> ChannelState:
    ops = step_operators(state.grid, state.k_max, params, float(dt), implicitness)
    g, K = state.grid, state.k_max
    if nonlinear:
        fl = compute_fluxes(state)
        limit = cfl_limit(state, fl)
        if dt > limit:
            raise CFLViolation(dt, 0.9 * limit)
        cur = _tendencies(state, fl)
    else:
        cur = (np.zeros_like(state.omega), np.zeros_like(state.theta), np.zeros(g.n))
    if extrapolate and state.history is not None:
        forcing = [1.5 * c - 0.5 * p for c, p in zip(cur, state.history)]
    else:
        forcing = list(cur)
    a = ops.implicitness
    n_omega, n_theta, n_mean = (f / a for f in forcing)

    theta = _apply(ops.theta_solve, _apply(ops.theta_explicit, state.theta) + n_theta)
    theta[0] = theta[0].real
    omega = np.zeros_like(state.omega)
    if K > 0:
        ik = 1j * np.arange(1, K + 1)[:, None]
        buoyancy = ((1 - a) * state.theta[1:] + a * theta[1:]) / a
        rhs = _apply(ops.omega_explicit, state.omega[1:]) - ik * buoyancy + n_omega[1:]
        omega[1:] = _apply(ops.omega_solve, rhs)
    u0 = ops.mean_solve @ (ops.mean_explicit @ state.u0 + n_mean)
    omega[0] = g.d1 @ u0
    new = ChannelState(g, K, omega, theta, u0, state.time + dt, history=cur)
    refresh(new)
    if not (np.all(np.isfinite(omega)) and np.all(np.isfinite(theta))):
        raise NumericalError(f"non-finite state at t={new.time:g}")
    return new


def step(state: ChannelState, params: FluidParams, dt: float, nonlinear: bool = True) -> ChannelState:
    """Advance by dt with Crank-Nicolson on the linear part and Adams-Bashforth
    on the fluxes (forward Euler when no flux history is stored). The buoyancy
    source is the average of the old and new temperature. The input state is not
    modified."""
    return _advance(state, params, dt, nonlinear, 0.5, True)


def start(state: ChannelState, params: FluidParams, dt: float, nonlinear: bool = True) -> ChannelState:
    """First step of a run: two backward-Euler half steps.

    Crank-Nicolson leaves the stiffest modes (wall vorticity set by the no-slip
    closure) with amplification close to -1, so any inconsistency in the data
    would ring for the whole run. The damped start removes it at O(dt^2) local
    cost and leaves the flux history at spacing dt for the next step.
    """
    half = _advance(state, params, 0.5 * dt, nonlinear, 1.0, False)
    new = _advance(half, params, 0.5 * dt, nonlinear, 1.0, False)
    # the fluxes at t0, spaced dt before the next Adams-Bashforth step
    new.history = half.history
    return new


def integrate(state: ChannelState, params: FluidParams, dt: float, steps: int,
              nonlinear: bool = True) -> ChannelState:
    """Damped start followed by steps - 1 Crank-Nicolson/Adams-Bashforth steps."""
    if steps < 1:
        return state
    state = start(state, params, dt, nonlinear)
    for _ in range(steps - 1):
        state = step(state, params, dt, nonlinear)
    return state


# -- initial data -------------------------------------------------------------

VELOCITY_PROFILES = ("quartic", "odd_quartic", "random")
TEMPERATURE_PROFILES = ("parabola", "sine", "bump", "random")


def stream_profile(name: str, y: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Stream-function shapes with psi = d_y psi = 0 at the walls."""
    env = (1 - y**2) ** 2
    if name == "quartic":
        return env
    if name == "odd_quartic":
        return y * env
    if name == "random":
        return env * np.polynomial.polynomial.polyval(y, rng.standard_normal(6))
    raise ConfigError(f"unknown velocity profile {name!r}; choose from {VELOCITY_PROFILES}")


def temperature_profile(name: str, y: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    if name == "parabola":
        return 1 - y**2
    if name == "sine":
        return np.sin(np.pi * (y + 1) / 2)
    if name == "bump":
        return (1 - y**2) ** 2
    if name == "random":
        return (1 - y**2) * np.polynomial.polynomial.polyval(y, rng.standard_normal(6))
    raise ConfigError(f"unknown temperature profile {name!r}; choose from {TEMPERATURE_PROFILES}")


@dataclass(frozen=True)
class ModeSpec:
    k: int
    profile: str
    amplitude: complex = 1.0

    @classmethod
    def parse(cls, d: dict) -> "ModeSpec":
        try:
            amp = d.get("amplitude", 1.0)
            if isinstance(amp, (list, tuple)):
                amp = complex(amp[0], amp[1])
            return cls(int(d["k"]), str(d["profile"]), complex(amp))
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise ConfigError(f"bad mode entry {d!r}: {exc}") from exc

    def to_dict(self) -> dict:
        return {"k": self.k, "profile": self.profile, "amplitude": [self.amplitude.real, self.amplitude.imag]}


def data_bounds(grid: ChebGrid, omega: np.ndarray, theta: np.ndarray):
    """Per-k (k = 0..K) norms ||w||, ||d_y w||, ||th|| and the summed bounds
    D_E = sum_k ||w_k|| + sum_{k!=0} ||d_y w_k|| / |k|, D_H = ||th_0|| + sum_{k!=0} |k|^(1/6) ||th_k||
    (sums over both signs of k)."""
    w = grid.weights
    nw = np.sqrt((np.abs(omega) ** 2) @ w)
    ndw = np.sqrt((np.abs(omega @ grid.d1.T) ** 2) @ w)
    nt = np.sqrt((np.abs(theta) ** 2) @ w)
    ks = np.arange(omega.shape[0])
    DE = nw[0] + 2 * np.sum(nw[1:] + ndw[1:] / ks[1:])
    DH = nt[0] + 2 * np.sum(ks[1:] ** (1 / 6) * nt[1:])
    return nw, ndw, nt, float(DE), float(DH)


def initial_state(grid: ChebGrid, k_max: int, nu: float, mu: float, eps0: float, eps1: float,
                  velocity_modes: Sequence[ModeSpec], temperature_modes: Sequence[ModeSpec],
                  seed: int = 0) -> ChannelState:
    """Build the initial state from named profiles, project each w_k (k != 0) onto
    the compatible subspace and scale so that D_E = eps0 m^(1/2) and
    D_H = eps1 m^(11/12) with m = min(nu, mu)."""
    rng = np.random.default_rng(seed)
    y = grid.nodes
    n = grid.n
    psi = np.zeros((k_max + 1, n), dtype=complex)
    theta = np.zeros((k_max + 1, n), dtype=complex)
    for spec in velocity_modes:
        if not 0 <= spec.k <= k_max:
            raise ConfigError(f"velocity mode k={spec.k} outside 0..{k_max}")
        psi[spec.k] += spec.amplitude * stream_profile(spec.profile, y, rng)
    for spec in temperature_modes:
        if not 0 <= spec.k <= k_max:
            raise ConfigError(f"temperature mode k={spec.k} outside 0..{k_max}")
        theta[spec.k] += spec.amplitude * temperature_profile(spec.profile, y, rng)
    theta[:, [0, -1]] = 0.0
    theta[0] = theta[0].real
    u0 = (grid.d1 @ psi[0].real)
    u0[[0, -1]] = 0.0
    omega = np.zeros_like(psi)
    omega[0] = grid.d1 @ u0
    for k in range(1, k_max + 1):
        if np.any(psi[k]):
            w = grid.d2 @ psi[k] - k * k * psi[k]
            omega[k] = compatibility_projection(grid, k, w).values
    m = min(nu, mu)
    _, _, _, DE, DH = data_bounds(grid, omega, theta)
    a = eps0 * math.sqrt(m) / DE if DE > 0 else 0.0
    b = eps1 * m ** (11 / 12) / DH if DH > 0 else 0.0
    return make_state(grid, k_max, a * omega, b * theta, a * u0)


# -- snapshots ----------------------------------------------------------------

SNAPSHOT_HEADER = struct.Struct("<iid")


def write_snapshot(fh: BinaryIO, state: ChannelState):
    """Append one record: int32 n, int32 k_max, float64 time (little endian), then
    complex128 node values of w_k for k = -k_max..k_max, then th_k in the same
    order; each mode is n values ordered from y = 1 to y = -1."""
    fh.write(SNAPSHOT_HEADER.pack(state.grid.n, state.k_max, state.time))
    fh.write(np.ascontiguousarray(state.full("omega"), dtype="<c16").tobytes())
    fh.write(np.ascontiguousarray(state.full("theta"), dtype="<c16").tobytes())


def read_snapshots(fh: BinaryIO) -> Iterator[Tuple[float, np.ndarray, np.ndarray]]:
    """Yield (time, omega, theta) with arrays of shape (2 k_max + 1, n)."""
    while True:
        head = fh.read(SNAPSHOT_HEADER.size)
        if not head:
            return
        if len(head) < SNAPSHOT_HEADER.size:
            raise ValueError("truncated snapshot header")
        n, K, t = SNAPSHOT_HEADER.unpack(head)
        count = (2 * K + 1) * n
        body = fh.read(2 * count * 16)
        if len(body) < 2 * count * 16:
            raise ValueError("truncated snapshot body")
        arr = np.frombuffer(body, dtype="<c16").reshape(2, 2 * K + 1, n)
        yield t, arr[0].copy(), arr[1].copy()


# -- runs ---------------------------------------------------------------------


@dataclass
class RunConfig:
    n: int = 128
    k_max: int = 16
    nu: float = 1e-2
    mu: float = 1e-2
    eps0: float = 0.1
    eps1: float = 0.1
    T: float = 1.0
    dt: float = 1e-2
    sample_interval: int = 10
    seed: int = 0
    velocity_modes: List[ModeSpec] = field(default_factory=list)
    temperature_modes: List[ModeSpec] = field(default_factory=list)
    nonlinear: bool = True
    cfl_policy: str = "error"
    """'error' raises on a CFL violation; 'depart' ends the run as departed."""
    ledger_csv: Optional[str] = None
    audit_csv: Optional[str] = None
    snapshot_path: Optional[str] = None

    def __post_init__(self):
        self.velocity_modes = [m if isinstance(m, ModeSpec) else ModeSpec.parse(m) for m in self.velocity_modes]
        self.temperature_modes = [m if isinstance(m, ModeSpec) else ModeSpec.parse(m) for m in self.temperature_modes]
        if self.n < 8:
            raise ConfigError("n must be at least 8")
        if not 0 <= self.k_max <= DEFAULT_K_CAP:
            raise ConfigError(f"k_max must lie in [0, {DEFAULT_K_CAP}]")
        if not (self.T > 0 and self.dt > 0) or self.dt > self.T:
            raise ConfigError("need 0 < dt <= T")
        if self.sample_interval < 1:
            raise ConfigError("sample_interval must be >= 1")
        if self.eps0 < 0 or self.eps1 < 0:
            raise ConfigError("eps0 and eps1 must be nonnegative")
        if self.cfl_policy not in ("error", "depart"):
            raise ConfigError("cfl_policy must be 'error' or 'depart'")
        FluidParams(self.nu, self.mu)

    @property
    def steps(self) -> int:
        return int(math.ceil(self.T / self.dt - 1e-9))

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown run config keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        d = asdict(self)
        d["velocity_modes"] = [m.to_dict() for m in self.velocity_modes]
        d["temperature_modes"] = [m.to_dict() for m in self.temperature_modes]
        return d

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc


@dataclass
class RunResult:
    state: ChannelState
    ledger: EnergyLedger
    departed: bool
    reason: str
    steps: int
    max_noslip_residual: float
    initial_bound_E: float
    initial_bound_H: float

    def __iter__(self):
        yield self.state
        yield self.ledger


def _sample(ledger: EnergyLedger, state: ChannelState):
    ledger.accumulate(state.time, state.full("omega"), state.full("u1"), state.full("u2"), state.full("theta"))


def run(config: RunConfig, snapshot: Optional[BinaryIO] = None) -> RunResult:
    """Evolve from the configured data to T, sampling the ledger every
    ``sample_interval`` steps and at the final time."""
    grid = build_grid(config.n)
    params = FluidParams(config.nu, config.mu)
    state = initial_state(grid, config.k_max, config.nu, config.mu, config.eps0, config.eps1,
                          config.velocity_modes, config.temperature_modes, config.seed)
    nw, ndw, nt, DE, DH = data_bounds(grid, state.omega, state.theta)
    mirror = lambda a: np.concatenate([a[:0:-1], a])  # noqa: E731
    ledger = EnergyLedger(config.k_max, config.nu, config.mu, grid.weights, grid.nodes)
    ledger.set_initial(mirror(nw), mirror(ndw), mirror(nt))
    _sample(ledger, state)
    if snapshot is not None:
        write_snapshot(snapshot, state)
    initial_size = state.max_mode_norm()
    departed, reason = False, ""
    residual = 0.0
    nsteps = config.steps
    last_sampled = 0
    for i in range(1, nsteps + 1):
        dt = min(config.dt, config.T - state.time) if i == nsteps else config.dt
        if dt <= 0:
            break
        if i == nsteps and abs(dt - config.dt) > 1e-12:
            state = replace(state, history=None)
        try:
            advance = start if i == 1 else step
            state = advance(state, params, dt, config.nonlinear)
        except CFLViolation as exc:
            if config.cfl_policy == "error":
                raise
            departed, reason = True, f"CFL limit exceeded at t={state.time:g} ({exc})"
            break
        except NumericalError as exc:
            departed, reason = True, f"non-finite state at t={state.time:g}: {exc}"
            break
        size = state.max_mode_norm()
        if initial_size > 0 and size > BLOWUP_FACTOR * initial_size:
            departed, reason = True, f"mode norm grew by more than {BLOWUP_FACTOR:g} at t={state.time:g}"
        if i % config.sample_interval == 0 or i == nsteps or departed:
            residual = max(residual, state.noslip_residual())
            _sample(ledger, state)
            last_sampled = i
            if snapshot is not None:
                write_snapshot(snapshot, state)
        if departed:
            break
    log.info("run finished at t=%g after %d steps (departed=%s)", state.time, last_sampled, departed)
    return RunResult(state, ledger, departed, reason, last_sampled, residual, DE, DH)
