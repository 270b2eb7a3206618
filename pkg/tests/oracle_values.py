"""Reference values frozen from tests/oracles/generate.py.

Each was computed by a route independent of the code under test; see the
generator for how.
"""

# closed form w = 1 - cosh y / cosh 1, integrated by adaptive quadrature
HMINUS1_OF_ONE = 0.6905155234232394

# max |psi'(+-1)| for (d^2 - 1) psi = e^y, psi(+-1) = 0, closed form
EXP_VORTICITY_SLIP_K1 = 1.2577089869418043

# min_lambda sigma_min(L - i lambda) at k=1, second-order finite differences, N=6000
GAP_K1 = {
    1e-2: 0.16424263820312315,
    1e-3: 0.07347341423328105,
    1e-4: 0.033828426998446674,
}

# fitted decay rate at k=1, mu=1e-4: finite-difference operator, exact exponential in time
DECAY_RATE_K1_MU1E4 = 0.057180800016207886

# ratio_l2 at k=1, mu=1e-3, lambda=0, smooth seeded forcing, evaluated at n=128
RESOLVENT_RATIO_K1_MU1E3 = 2.1518611718098377

# implied constants at k=1, kappa=1e-3, evaluated at n=192
FORCED_TEMPERATURE_NOISE_C = 0.046649949508301425
VORTICITY_FREE_DECAY_C = 0.029876611052702465

# total theta L2 norm at T=5, eps0=0, single sine mode, nu=mu=1e-2, n=96, k_max=8, dt=0.005
THERMAL_RUN_THETA_NORM = 0.0006396746840178287

# max ratio_l2 of the pinned desk sweep (n=128, seed 1234)
DESK_SWEEP_MAX_RATIO = 1.6083097035961929
