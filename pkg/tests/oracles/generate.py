"""Regenerate the frozen reference values in tests/oracle_values.py.

Each value comes from a route independent of the code path it checks:
closed forms, a finite-difference discretization, or the same computation at
doubled resolution. Run from the repository root:

    python tests/oracles/generate.py
"""
import os
import sys

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import quad

sys.path.insert(0, os.path.dirname(__file__))
from gap_fd import gap  # noqa: E402


def hminus1_of_one():
    # w = 1 - cosh y / cosh 1 solves (1 - d^2) w = 1, w(+-1) = 0
    w = lambda y: 1 - np.cosh(y) / np.cosh(1)  # noqa: E731
    dw = lambda y: -np.sinh(y) / np.cosh(1)  # noqa: E731
    val, _ = quad(lambda y: w(y) ** 2 + dw(y) ** 2, -1, 1, epsabs=1e-14, epsrel=1e-14)
    return float(np.sqrt(val))


def exp_vorticity_slip(k=1):
    # psi'' - k^2 psi = e^{ky}: psi = y e^{ky} / (2k) + A e^{ky} + B e^{-ky}
    e = np.exp
    M = np.array([[e(k), e(-k)], [e(-k), e(k)]])
    rhs = -np.array([e(k) / (2 * k), -e(-k) / (2 * k)])
    A, B = np.linalg.solve(M, rhs)
    dpsi = lambda y: (1 + k * y) * e(k * y) / (2 * k) + k * A * e(k * y) - k * B * e(-k * y)  # noqa: E731
    return float(max(abs(dpsi(1.0)), abs(dpsi(-1.0))))


def fd_decay_rate(k=1, mu=1e-4, N=3000, factor=20.0, samples=4000):
    """Exact-in-time propagation of the FD operator (expm_multiply), then a
    least-squares slope of log||theta|| over the [1e-6, 1e-1] window."""
    h = 2.0 / (N + 1)
    y = -1 + h * np.arange(1, N + 1)
    main = mu * (2 / h**2 + k * k) + 1j * k * y
    off = -mu / h**2 * np.ones(N - 1)
    A = sp.diags([off, main, off], [-1, 0, 1], format="csc")
    T = factor / max(mu ** (1 / 3) * k ** (2 / 3), mu)
    f0 = np.sin(np.pi * (y + 1) / 2).astype(complex)
    traj = spla.expm_multiply(-A, f0, start=0, stop=T, num=samples + 1, endpoint=True)
    t = np.linspace(0, T, samples + 1)
    nrm = np.sqrt(h * np.sum(np.abs(traj) ** 2, axis=1))
    rel = nrm / nrm.max()
    mask = (rel >= 1e-6) & (rel <= 1e-1)
    mask[: int(np.argmax(nrm))] = False
    slope = np.polyfit(t[mask], np.log(nrm[mask]), 1)[0]
    return float(-slope)


def smooth_forcing(n, seed=7, count=40, decay=0.8):
    from couette_lab.spectral import build_grid, weighted_l2_norm
    rng = np.random.default_rng(seed)
    c = (rng.standard_normal(count) + 1j * rng.standard_normal(count)) * decay ** np.arange(count)
    g = build_grid(n)
    f = np.polynomial.chebyshev.chebval(g.nodes, c)
    return g, f / weighted_l2_norm(g, f)


def resolvent_ratio_doubled():
    from couette_lab.resolvent import lemma24_ratios
    g, f = smooth_forcing(128)
    return lemma24_ratios(g, 1, 1e-3, 0.0, f).ratio_l2


def forced_temperature_doubled():
    from couette_lab.harness import verification_horizon
    from couette_lab.semigroup import ForcingSpec, verify_prop25
    from couette_lab.spectral import build_grid
    T, dt = verification_horizon(1, 1e-3)
    return verify_prop25(build_grid(192), 1, 1e-3, ForcingSpec("noise", 1, seed=11, t_off=0.5 * T), T, dt).implied_C


def compatible_init(n, k=1, seed=5):
    from couette_lab.spectral import build_grid
    g = build_grid(n)
    rng = np.random.default_rng(seed)
    y = g.nodes
    psi = (1 - y**2) ** 2 * np.polynomial.polynomial.polyval(y, rng.standard_normal(5) + 1j * rng.standard_normal(5))
    return g, g.d2 @ psi - k * k * psi


def vorticity_decay_doubled():
    from couette_lab.harness import verification_horizon
    from couette_lab.semigroup import ForcingSpec, verify_prop21
    T, dt = verification_horizon(1, 1e-3)
    g, w = compatible_init(192)
    return verify_prop21(g, 1, 1e-3, w, ForcingSpec("none"), T, dt).implied_C


def thermal_run_refined():
    from couette_lab.nonlinear import RunConfig, run
    cfg = RunConfig(n=96, k_max=8, nu=1e-2, mu=1e-2, eps0=0.0, eps1=0.1, T=5.0, dt=0.005,
                    temperature_modes=[{"k": 1, "profile": "sine"}])
    st = run(cfg).state
    return float(np.sqrt(np.sum((np.abs(st.full("theta")) ** 2) @ st.grid.weights)))


def desk_sweep_max():
    from couette_lab.resolvent import default_lambda_grid, sweep_resolvent
    res = sweep_resolvent(128, [1, 2, 4, 8], [1e-2, 1e-3, 1e-4], default_lambda_grid(21), 20, 1234)
    return res.max_ratio()


if __name__ == "__main__":
    out = {
        "HMINUS1_OF_ONE": hminus1_of_one(),
        "EXP_VORTICITY_SLIP_K1": exp_vorticity_slip(1),
        "GAP_K1": {mu: gap(1, mu) for mu in (1e-2, 1e-3, 1e-4)},
        "DECAY_RATE_K1_MU1E4": fd_decay_rate(),
        "RESOLVENT_RATIO_K1_MU1E3": resolvent_ratio_doubled(),
        "FORCED_TEMPERATURE_NOISE_C": forced_temperature_doubled(),
        "VORTICITY_FREE_DECAY_C": vorticity_decay_doubled(),
        "THERMAL_RUN_THETA_NORM": thermal_run_refined(),
        "DESK_SWEEP_MAX_RATIO": desk_sweep_max(),
    }
    for key, val in out.items():
        print(f"{key} = {val!r}")
