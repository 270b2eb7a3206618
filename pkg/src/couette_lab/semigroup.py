"""Linear per-mode evolution, decay fits, space-time norms and forced-estimate
verification.

Time stepping is Crank-Nicolson on the whole linear operator (diffusion and
the i k y drift together) with forcing evaluated at half steps:

    (2/dt + L) f^{n+1} = (2/dt - L) f^n + 2 F(t_n + dt/2)
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla
from scipy.integrate import trapezoid

from .errors import ConfigError, NumericalError, WindowNotFound
from .operators import (
    TEMPERATURE,
    VORTICITY,
    FluidParams,
    InfluenceSolver,
    ModeOperator,
    TemperatureSolver,
    assemble_mode_operator,
    compatibility_inner_products,
    linear_matrix,
)
from .spectral import (
    ChebGrid,
    FieldLike,
    Weight,
    _helmholtz_lu,
    as_values,
    wall_distance_weight,
    weighted_l2_norm,
)

ForcingFn = Callable[[float], Tuple[Optional[np.ndarray], Optional[np.ndarray]]]


@dataclass
class Trajectory:
    """Recorded states of one mode. ``values[i]`` is the field at ``times[i]``."""

    grid: ChebGrid
    k: int
    kappa: float
    kind: str
    times: np.ndarray
    values: np.ndarray
    forcing_sq: Optional[np.ndarray] = None
    """Per step: ||g1||^2, ||g2||^2 at the half step, times dt (midpoint rule)."""

    def __post_init__(self):
        if len(self.times) != len(self.values):
            raise ValueError("times and values differ in length")

    def norms(self, weight: Weight = None) -> np.ndarray:
        wts = self.grid.weights if weight is None else self.grid.weights * (
            weight(self.grid.nodes) if callable(weight) else np.asarray(weight))
        return np.sqrt(np.abs(self.values) ** 2 @ wts)

    def scaled(self, a: float) -> "Trajectory":
        return Trajectory(self.grid, self.k, self.kappa, self.kind, self.times.copy(), a * self.values)


@dataclass(frozen=True)
class DecayFit:
    k: int
    mu: float
    rate: float
    window: Tuple[float, float]
    r2: float

    CSV_COLUMNS = ("k", "mu", "rate", "window_start", "window_end", "r2")

    def row(self) -> tuple:
        return (self.k, self.mu, self.rate, self.window[0], self.window[1], self.r2)


def _forcing_rhs(grid: ChebGrid, k: int, g1, g2) -> np.ndarray:
    r = np.zeros(grid.n, dtype=complex)
    if g1 is not None:
        r -= 1j * k * np.asarray(g1)
    if g2 is not None:
        r -= grid.d1 @ np.asarray(g2)
    return r


def _sq(grid: ChebGrid, g) -> float:
    return 0.0 if g is None else float(np.sum(grid.weights * np.abs(g) ** 2))


def evolve_linear(
    op: ModeOperator,
    init: FieldLike,
    forcing: Optional[ForcingFn] = None,
    T: float = 1.0,
    dt: float = 1e-2,
    record_every: int = 1,
) -> Trajectory:
    """Crank-Nicolson evolution of one mode.

    ``forcing(t)`` returns the flux pair (g1, g2) entering as ``-i k g1 - d_y g2``.
    Temperature modes keep zero wall values; vorticity modes (k != 0) use the
    non-slip influence closure.
    """
    grid = op.grid
    if dt <= 0 or dt > T:
        raise ConfigError("need 0 < dt <= T")
    nsteps = int(round(T / dt))
    if abs(nsteps * dt - T) > 1e-9 * T:
        raise ConfigError("T must be an integer multiple of dt")
    f = np.array(as_values(init, grid), dtype=complex)
    k, kappa = op.k, op.diffusivity
    if op.kind == TEMPERATURE:
        if abs(f[0]) > 1e-12 or abs(f[-1]) > 1e-12:
            raise ConfigError("temperature data must vanish at the walls")
        f[0] = f[-1] = 0.0
        solver = TemperatureSolver(grid, k, kappa, 2.0 / dt)
    elif k == 0:
        raise ConfigError("the k=0 vorticity mode is evolved through the mean flow")
    else:
        solver = InfluenceSolver(grid, k, kappa, 2.0 / dt)
    explicit = (2.0 / dt) * np.eye(grid.n) - linear_matrix(grid, k, kappa)
    times, values, fsq = [0.0], [f.copy()], []
    for step in range(nsteps):
        t = step * dt
        rhs = explicit @ f
        g1 = g2 = None
        if forcing is not None:
            g1, g2 = forcing(t + 0.5 * dt)
            rhs += 2.0 * _forcing_rhs(grid, k, g1, g2)
        f = solver.solve(rhs)
        if not np.all(np.isfinite(f)):
            raise NumericalError(f"step {step} produced non-finite values")
        fsq.append((_sq(grid, g1) * dt, _sq(grid, g2) * dt))
        if (step + 1) % record_every == 0 or step + 1 == nsteps:
            times.append((step + 1) * dt)
            values.append(f.copy())
    return Trajectory(grid, k, kappa, op.kind, np.array(times), np.array(values),
                      forcing_sq=np.array(fsq).reshape(-1, 2))


def default_horizon(k: int, mu: float, factor: float = 20.0) -> float:
    """factor / max(mu^(1/3) |k|^(2/3), mu)."""
    return factor / max(mu ** (1 / 3) * abs(k) ** (2 / 3), mu)


def fit_enhanced_dissipation(traj: Trajectory, window: Tuple[float, float] = (1e-6, 1e-1),
                             min_points: int = 8) -> DecayFit:
    """Least-squares slope of log ||f(t)|| over the samples whose norm lies in
    ``window`` times the maximum norm."""
    norms = traj.norms()
    peak = norms.max()
    if peak == 0.0:
        raise WindowNotFound("trajectory is identically zero")
    lo, hi = window
    if norms[-1] > lo * peak:
        raise WindowNotFound(
            f"norm only decayed to {norms[-1] / peak:.2e} of its maximum; extend the horizon")
    ipeak = int(np.argmax(norms))
    rel = norms / peak
    mask = (rel >= lo) & (rel <= hi)
    mask[:ipeak] = False
    if mask.sum() < min_points:
        raise WindowNotFound(f"only {int(mask.sum())} samples inside the fit window")
    t = traj.times[mask]
    z = np.log(norms[mask])
    slope, intercept = np.polyfit(t, z, 1)
    resid = z - (slope * t + intercept)
    ss_tot = np.sum((z - z.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(traj.k, traj.kappa, float(-slope), (float(t[0]), float(t[-1])), float(np.clip(r2, 0.0, 1.0)))


def time_norm(times: np.ndarray, y_norms: np.ndarray, p) -> float:
    """L^p in time of a sampled nonnegative function (trapezoid for p = 2)."""
    y_norms = np.asarray(y_norms, dtype=float)
    if p == 2:
        if len(times) < 2:
            return 0.0
        return float(np.sqrt(trapezoid(y_norms**2, times)))
    if p in (np.inf, "inf"):
        return float(y_norms.max()) if y_norms.size else 0.0
    raise ConfigError(f"unsupported time exponent {p}")


def _space_norms(traj: Trajectory, q, weight: Weight) -> np.ndarray:
    if q == 2:
        return traj.norms(weight)
    if q in (np.inf, "inf"):
        a = np.abs(traj.values)
        if weight is not None:
            w = weight(traj.grid.nodes) if callable(weight) else np.asarray(weight)
            a = a * np.sqrt(w)
        return a.max(axis=1)
    raise ConfigError(f"unsupported space exponent {q}")


def spacetime_norm(traj: Trajectory, p=2, q=2, weight: Weight = None) -> float:
    """||f||_{L^p_t L^q_y} over the recorded samples."""
    return time_norm(traj.times, _space_norms(traj, q, weight), p)


# -- energy balance ----------------------------------------------------------


@dataclass(frozen=True)
class EnergyBalance:
    initial: float
    final: float
    dissipation: float
    rel_error: float


def energy_balance(traj: Trajectory) -> EnergyBalance:
    """||f(T)||^2 + 2 kappa int (||d_y f||^2 + k^2 ||f||^2) against ||f(0)||^2.

    Needs every step recorded. The dissipation is integrated with the midpoint
    state (f^n + f^{n+1}) / 2, the discrete analogue of the continuous balance for
    Crank-Nicolson; ||d_y f||^2 uses the quadrature of |D1 f|^2.
    """
    g = traj.grid
    mid = 0.5 * (traj.values[1:] + traj.values[:-1])
    dmid = mid @ g.d1.T
    dts = np.diff(traj.times)
    per_step = (np.abs(dmid) ** 2 + traj.k**2 * np.abs(mid) ** 2) @ g.weights
    diss = 2.0 * traj.kappa * float(np.sum(per_step * dts))
    norms2 = traj.norms() ** 2
    e0, e1 = float(norms2[0]), float(norms2[-1])
    rel = abs(e1 + diss - e0) / e0 if e0 > 0 else abs(e1 + diss)
    return EnergyBalance(e0, e1, diss, rel)


# -- forcing -----------------------------------------------------------------


@dataclass(frozen=True)
class ForcingSpec:
    """Forcing for the verification runs.

    kind:
      ``none``      no forcing
      ``noise``     random smooth profile sum_j a_j(t) sin(j pi (y+1)/2), j <= modes,
                    coefficients piecewise constant on bins of width ``bin_width``;
                    independent of grid resolution and time step
      ``resonant``  time-harmonic F(y) e^{i omega t} with the (omega, F) pair that
                    maximizes the forced response (see :func:`worst_case_forcing`)
    component: 1 or 2, which flux (g1 or g2) is forced.
    Forcing is switched off for t >= t_off (if given).
    """

    kind: str = "none"
    component: int = 1
    amplitude: float = 1.0
    t_off: Optional[float] = None
    seed: int = 0
    modes: int = 8
    bin_width: float = 0.5
    omega_count: int = 97

    def __post_init__(self):
        if self.kind not in ("none", "noise", "resonant"):
            raise ConfigError(f"unknown forcing kind {self.kind!r}")
        if self.component not in (1, 2):
            raise ConfigError("forcing component must be 1 or 2")

    def scaled(self, a: float) -> "ForcingSpec":
        return ForcingSpec(self.kind, self.component, self.amplitude * a, self.t_off,
                           self.seed, self.modes, self.bin_width, self.omega_count)


def _noise_forcing(grid: ChebGrid, spec: ForcingSpec, T: float) -> Callable[[float], np.ndarray]:
    rng = np.random.default_rng(spec.seed)
    nbins = int(np.ceil(T / spec.bin_width)) + 1
    coef = rng.standard_normal((nbins, spec.modes)) + 1j * rng.standard_normal((nbins, spec.modes))
    j = np.arange(1, spec.modes + 1)
    basis = np.sin(np.outer(j, np.pi * (grid.nodes + 1.0) / 2.0))

    def g(t: float) -> np.ndarray:
        b = min(int(t // spec.bin_width), nbins - 1)
        return spec.amplitude * (coef[b] @ basis)

    return g


@dataclass(frozen=True)
class WorstCase:
    omega: float
    profile: np.ndarray
    gain: float
    """Asymptotic implied constant: L^2_t left-hand rate over forcing rate."""


def _out_blocks(grid: ChebGrid, kind: str, k: int, kappa: float, S: np.ndarray) -> np.ndarray:
    W = np.sqrt(grid.weights)
    if kind == TEMPERATURE:
        return (kappa * k * k) ** (1 / 6) * (W[:, None] * S)
    Z = np.eye(grid.n)
    Z[0, 0] = Z[-1, -1] = 0.0
    Hinv = sla.lu_solve(_helmholtz_lu(grid, float(k) ** 2), Z)
    P = Hinv @ S
    return np.vstack([
        abs(k) * W[:, None] * (grid.d1 @ P),
        abs(k) * W[:, None] * (-1j * k * P),
        (kappa * k * k) ** 0.25 * W[:, None] * S,
    ])


def forcing_weight(kind: str, component: int, k: int, kappa: float) -> float:
    """Coefficient of ||g||^2_{L^2L^2} on the right-hand side."""
    ak = abs(k)
    if kind == TEMPERATURE:
        return kappa ** (-1 / 3) * ak ** (4 / 3) if component == 1 else 1.0 / kappa
    return kappa ** -0.5 * ak if component == 1 else 1.0 / kappa


def worst_case_forcing(grid: ChebGrid, kind: str, k: int, kappa: float, component: int,
                       omegas: Optional[Sequence[float]] = None, refine: bool = True) -> WorstCase:
    """Time frequency and y-profile maximizing the L^2_t left-hand side per unit
    forcing, found by SVD of the weighted frequency response on a grid of
    frequencies (then refined by golden-section search around the best one)."""
    if k == 0:
        raise ConfigError("worst-case forcing is defined for k != 0")
    if omegas is None:
        omegas = np.linspace(-1.6 * abs(k), 1.6 * abs(k), 97)
    n = grid.n
    W = np.sqrt(grid.weights)
    inp = -1j * k * np.eye(n) if component == 1 else -np.array(grid.d1)
    rhs_w = forcing_weight(kind, component, k, kappa)

    def evaluate(om: float):
        if kind == TEMPERATURE:
            S = TemperatureSolver(grid, k, kappa, 1j * om).solve(np.eye(n, dtype=complex))
        else:
            S = InfluenceSolver(grid, k, kappa, 1j * om).solve(np.eye(n, dtype=complex))
        O = _out_blocks(grid, kind, k, kappa, S @ inp) / W[None, :]
        u, s, vh = sla.svd(O)
        return s[0] ** 2 / rhs_w, vh[0].conj() / W

    scores = [evaluate(om)[0] for om in omegas]
    i = int(np.argmax(scores))
    best_om = float(omegas[i])
    if refine and len(omegas) > 2:
        a = float(omegas[max(i - 1, 0)])
        b = float(omegas[min(i + 1, len(omegas) - 1)])
        phi = (np.sqrt(5) - 1) / 2
        c, d = b - phi * (b - a), a + phi * (b - a)
        fc, fd = evaluate(c)[0], evaluate(d)[0]
        for _ in range(30):
            if fc > fd:
                b, d, fd = d, c, fc
                c = b - phi * (b - a)
                fc = evaluate(c)[0]
            else:
                a, c, fc = c, d, fd
                d = a + phi * (b - a)
                fd = evaluate(d)[0]
        cand = 0.5 * (a + b)
        if evaluate(cand)[0] > scores[i]:
            best_om = cand
    gain, prof = evaluate(best_om)
    prof = prof / weighted_l2_norm(grid, prof)
    return WorstCase(best_om, prof, float(gain))


def build_forcing(grid: ChebGrid, kind: str, k: int, kappa: float, spec: ForcingSpec, T: float):
    """Return (forcing callable or None, WorstCase or None)."""
    if spec.kind == "none" or spec.amplitude == 0.0:
        return None, None
    wc = None
    if spec.kind == "noise":
        g = _noise_forcing(grid, spec, T)
    else:
        wc = worst_case_forcing(grid, kind, k, kappa, spec.component,
                                np.linspace(-1.6 * abs(k), 1.6 * abs(k), spec.omega_count))
        prof, om, amp = wc.profile, wc.omega, spec.amplitude

        def g(t: float) -> np.ndarray:
            return amp * np.exp(1j * om * t) * prof

    t_off = spec.t_off

    def forcing(t: float):
        if t_off is not None and t >= t_off:
            return None, None
        v = g(t)
        return (v, None) if spec.component == 1 else (None, v)

    return forcing, wc


# -- verification reports ----------------------------------------------------


@dataclass
class VerificationReport:
    name: str
    k: int
    param: float
    lhs_terms: dict = field(default_factory=dict)
    rhs_terms: dict = field(default_factory=dict)
    implied_C: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def lhs(self) -> float:
        return float(sum(self.lhs_terms.values()))

    @property
    def rhs(self) -> float:
        return float(sum(self.rhs_terms.values()))


def _implied(lhs: float, rhs: float) -> float:
    if lhs == 0.0:
        return 0.0
    return lhs / rhs if rhs > 0 else float("inf")


def _forcing_norms_sq(traj: Trajectory) -> Tuple[float, float]:
    if traj.forcing_sq is None or len(traj.forcing_sq) == 0:
        return 0.0, 0.0
    s = traj.forcing_sq.sum(axis=0)
    return float(s[0]), float(s[1])


def verify_prop25(grid: ChebGrid, k: int, mu: float, forcing: ForcingSpec, T: float, dt: float) -> VerificationReport:
    """Inhomogeneous temperature estimate from zero data:
    (mu k^2)^(1/3) ||th||^2_{L2L2} + ||th||^2_{LinfL2}
      <= C (mu^(-1/3) |k|^(4/3) ||g1||^2 + mu^(-1) ||g2||^2)."""
    op = assemble_mode_operator(grid, k, FluidParams(nu=mu, mu=mu), TEMPERATURE)
    fn, wc = build_forcing(grid, TEMPERATURE, k, mu, forcing, T)
    traj = evolve_linear(op, np.zeros(grid.n, dtype=complex), fn, T, dt)
    return _temperature_report("forced_temperature", traj, mu, wc, include_data=False)


def verify_prop26(grid: ChebGrid, k: int, mu: float, init: FieldLike, forcing: ForcingSpec,
                  T: float, dt: float) -> VerificationReport:
    """Full temperature estimate: as verify_prop25 plus ||th_in||^2 on the right."""
    op = assemble_mode_operator(grid, k, FluidParams(nu=mu, mu=mu), TEMPERATURE)
    fn, wc = build_forcing(grid, TEMPERATURE, k, mu, forcing, T)
    traj = evolve_linear(op, init, fn, T, dt)
    return _temperature_report("temperature", traj, mu, wc, include_data=True)


def _temperature_report(name: str, traj: Trajectory, mu: float, wc, include_data: bool) -> VerificationReport:
    k = traj.k
    g1sq, g2sq = _forcing_norms_sq(traj)
    lhs = {
        "enhanced_L2L2": (mu * k * k) ** (1 / 3) * spacetime_norm(traj, 2, 2) ** 2,
        "LinfL2": spacetime_norm(traj, np.inf, 2) ** 2,
    }
    rhs = {}
    if include_data:
        rhs["data"] = weighted_l2_norm(traj.grid, traj.values[0]) ** 2
    rhs["g1"] = forcing_weight(TEMPERATURE, 1, k, mu) * g1sq if k != 0 else 0.0
    rhs["g2"] = forcing_weight(TEMPERATURE, 2, k, mu) * g2sq
    rep = VerificationReport(name, k, mu, lhs, rhs)
    rep.implied_C = _implied(rep.lhs, rep.rhs)
    if wc is not None:
        rep.extra.update(omega=wc.omega, predicted_gain=wc.gain)
    return rep


def verify_prop21(grid: ChebGrid, k: int, nu: float, w_init: FieldLike, forcing: ForcingSpec,
                  T: float, dt: float, tol: float = 1e-8) -> VerificationReport:
    """Vorticity estimate under the non-slip closure:
    |k| ||u||^2_{LinfLinf} + k^2 ||u||^2_{L2L2} + (nu k^2)^(1/2) ||w||^2_{L2L2}
    + ||(1-|y|)^(1/2) w||^2_{LinfL2}
      <= C (||w_in||^2 + k^-2 ||d_y w_in||^2 + nu^(-1/2) |k| ||f1||^2 + nu^(-1) ||f2||^2).
    """
    if k == 0:
        raise ConfigError("the vorticity estimate needs k != 0")
    w0 = np.array(as_values(w_init, grid), dtype=complex)
    ip = compatibility_inner_products(grid, k, w0)
    scale = max(weighted_l2_norm(grid, w0), 1e-300)
    if np.max(np.abs(ip)) > tol * scale * np.exp(abs(k)):
        raise ConfigError(f"initial vorticity is not compatible: <w, e^(+-ky)> = {ip}")
    op = assemble_mode_operator(grid, k, FluidParams(nu=nu, mu=nu), VORTICITY)
    fn, wc = build_forcing(grid, VORTICITY, k, nu, forcing, T)
    traj = evolve_linear(op, w0, fn, T, dt)
    # velocity along the trajectory
    Z = np.eye(grid.n)
    Z[0, 0] = Z[-1, -1] = 0.0
    Hinv = sla.lu_solve(_helmholtz_lu(grid, float(k) ** 2), Z)
    psi = traj.values @ Hinv.T
    u1 = psi @ grid.d1.T
    u2 = -1j * k * psi
    umag2 = np.abs(u1) ** 2 + np.abs(u2) ** 2
    u_l2 = np.sqrt(umag2 @ grid.weights)
    u_inf = np.sqrt(umag2.max(axis=1))
    t = traj.times
    g1sq, g2sq = _forcing_norms_sq(traj)
    lhs = {
        "u_LinfLinf": abs(k) * time_norm(t, u_inf, np.inf) ** 2,
        "u_L2L2": k * k * time_norm(t, u_l2, 2) ** 2,
        "w_L2L2": (nu * k * k) ** 0.5 * spacetime_norm(traj, 2, 2) ** 2,
        "w_weighted_LinfL2": spacetime_norm(traj, np.inf, 2, wall_distance_weight) ** 2,
    }
    rhs = {
        "data": weighted_l2_norm(grid, w0) ** 2,
        "data_dy": weighted_l2_norm(grid, grid.d1 @ w0) ** 2 / k**2,
        "f1": forcing_weight(VORTICITY, 1, k, nu) * g1sq,
        "f2": forcing_weight(VORTICITY, 2, k, nu) * g2sq,
    }
    rep = VerificationReport("vorticity", k, nu, lhs, rhs)
    rep.implied_C = _implied(rep.lhs, rep.rhs)
    rep.extra["noslip_residual"] = float(max(np.abs(u1[:, 0]).max(), np.abs(u1[:, -1]).max()))
    if wc is not None:
        rep.extra.update(omega=wc.omega, predicted_gain=wc.gain)
    return rep


REPORT_COLUMNS = ("name", "k", "param", "lhs_terms", "rhs_terms", "lhs", "rhs", "implied_C")


def report_row(rep: VerificationReport) -> tuple:
    def fmt(d):
        return ";".join(f"{key}={val!r}" for key, val in d.items())

    return (rep.name, rep.k, rep.param, fmt(rep.lhs_terms), fmt(rep.rhs_terms), rep.lhs, rep.rhs, rep.implied_C)
