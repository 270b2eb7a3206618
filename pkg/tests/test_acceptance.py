"""Acceptance criteria 1-10.

Each test records one line per checked part through the ``criterion`` fixture;
the terminal summary prints one PASS/FAIL line per criterion.
"""
import io
import json
import math
import time

import numpy as np
import pytest

from couette_lab import cli
from couette_lab.harness import ScanConfig, classify_run, decay_fit, verify_estimates, verify_point
from couette_lab.ledger import EnergyLedger, audit_bootstrap, main_estimate_check
from couette_lab.nonlinear import ModeSpec, RunConfig, initial_state, integrate, make_state, read_snapshots, run
from couette_lab.operators import TEMPERATURE, FluidParams, integrate_from_bottom, assemble_mode_operator
from couette_lab.resolvent import (
    default_lambda_grid, gearhart_pruss_gap, solve_resolvent, sweep_resolvent, uniformity_spread,
)
from couette_lab.semigroup import ForcingSpec, default_horizon, energy_balance, evolve_linear, fit_enhanced_dissipation
from couette_lab.spectral import build_grid, solve_helmholtz

VMODES = [ModeSpec(1, "quartic", 1.0), ModeSpec(2, "odd_quartic", 0.5j), ModeSpec(0, "quartic", 0.5)]
TMODES = [ModeSpec(1, "sine", 1.0), ModeSpec(0, "parabola", 0.5), ModeSpec(3, "bump", 0.5)]


def temp_op(grid, k, mu):
    return assemble_mode_operator(grid, k, FluidParams(mu, mu), TEMPERATURE)


def smooth_wall_field(grid, seed, count=20, decay=0.7):
    rng = np.random.default_rng(seed)
    c = (rng.standard_normal(count) + 1j * rng.standard_normal(count)) * decay ** np.arange(count)
    return (1 - grid.nodes**2) * np.polynomial.chebyshev.chebval(grid.nodes, c)


# -- 1 -----------------------------------------------------------------------


def test_c1_manufactured_solves(criterion):
    t0 = time.perf_counter()
    g = build_grid(64)
    y = g.nodes
    errs = []
    for k in (0, 1, 3, 8):
        exact = np.sin(np.pi * y) * np.exp(y)
        lap = np.exp(y) * ((1 - np.pi**2) * np.sin(np.pi * y) + 2 * np.pi * np.cos(np.pi * y))
        errs.append(np.max(np.abs(solve_helmholtz(g, k, lap - k * k * exact) - exact)))
    exact = np.sin(np.pi * y) * np.exp(y)
    dyy = np.exp(y) * ((1 - np.pi**2) * np.sin(np.pi * y) + 2 * np.pi * np.cos(np.pi * y))
    for k, mu, lam in ((1, 1e-2, 0.0), (2, 1e-3, 0.4), (4, 1e-4, -0.9)):
        f = -mu * (dyy - k * k * exact) + 1j * k * (y - lam) * exact
        errs.append(np.max(np.abs(solve_resolvent(temp_op(g, k, mu), lam, f) - exact)))
    elapsed = time.perf_counter() - t0
    ok = max(errs) <= 1e-9 and elapsed < 1.0
    assert criterion(1, ok, f"max error {max(errs):.2e} (<= 1e-9) in {elapsed:.2f} s (< 1 s)")


# -- 2 -----------------------------------------------------------------------


def test_c2_diffusion_rate(criterion):
    t0 = time.perf_counter()
    g = build_grid(64)
    worst = 0.0
    for mu in (1e-1, 1e-2, 1e-3):
        op = temp_op(g, 0, mu)
        T = default_horizon(0, mu, 20)
        init = np.sin(np.pi * (g.nodes + 1) / 2).astype(complex)
        fit = fit_enhanced_dissipation(evolve_linear(op, init, None, T, T / 2000))
        exact = mu * np.pi**2 / 4
        worst = max(worst, abs(gearhart_pruss_gap(op) / exact - 1), abs(fit.rate / exact - 1))
    elapsed = time.perf_counter() - t0
    ok = worst <= 0.01 and elapsed < 10
    assert criterion(2, ok, f"worst relative deviation from mu pi^2/4 {worst:.2e} (<= 1e-2) in {elapsed:.1f} s")


# -- 3 -----------------------------------------------------------------------


def test_c3_resolvent_uniformity(criterion):
    res = sweep_resolvent(128, [1, 2, 4, 8], [1e-2, 1e-3, 1e-4], default_lambda_grid(21, 1.5), 20, seed=2024)
    assert not res.failures and len(res.samples) == 4 * 3 * 21 * 20
    sp = uniformity_spread(res)
    a, b = max(sp["across_mu"].values()), max(sp["across_k"].values())
    assert criterion(3, a < 3 and b < 3, f"max spread across mu {a:.2f}, across k {b:.2f} (< 3)")


# -- 4 -----------------------------------------------------------------------


def test_c4_decay_scaling(criterion, tmp_path):
    in_mu = decay_fit({"k_list": [1, 2, 4], "mu_list": [1e-2, 1e-3, 1e-4, 1e-5]}, str(tmp_path / "mu"))
    in_k = decay_fit({"k_list": [1, 2, 4, 8], "mu_list": [1e-4]}, str(tmp_path / "k"))
    mu_slopes = {k: v["slope"] for k, v in in_mu["mu_exponent"].items()}
    k_slope = in_k["k_exponent"]["0.0001"]["slope"]
    ok_mu = all(abs(s - 1 / 3) <= 0.05 for s in mu_slopes.values()) and len(mu_slopes) == 3
    ok_k = abs(k_slope - 2 / 3) <= 0.1
    criterion(4, ok_mu, "mu slopes " + ", ".join(f"k={k}: {s:.3f}" for k, s in mu_slopes.items()) + " (1/3 +- 0.05)")
    criterion(4, ok_k, f"k slope at mu=1e-4: {k_slope:.3f} (2/3 +- 0.1)")
    assert ok_mu and ok_k


# -- 5 -----------------------------------------------------------------------


def test_c5_energy_identity(criterion):
    g = build_grid(64)
    worst = 0.0
    for k in (0, 1, 4):
        for mu in (1e-2, 1e-3, 1e-4):
            tr = evolve_linear(temp_op(g, k, mu), smooth_wall_field(g, k), None, 5.0, 0.01)
            worst = max(worst, energy_balance(tr).rel_error)
    assert criterion(5, worst <= 1e-6, f"worst relative balance error {worst:.2e} (<= 1e-6)")


# -- 6 -----------------------------------------------------------------------


def test_c6_forced_uniformity(criterion, tmp_path):
    summary = verify_estimates({}, str(tmp_path))
    spreads = summary["implied_C_spread"]
    worst = max(spreads.values())
    criterion(6, worst < 3 and len(spreads) == 4, f"max implied-C spread {worst:.2f} over {len(spreads)} sweeps (< 3)")
    dev = 0.0
    for name in ("forced_temperature", "vorticity"):
        for comp in (1, 2):
            for kind in ("resonant", "noise"):
                spec = ForcingSpec(kind, comp, seed=4)
                a = verify_point(name, 64, 2, 1e-3, spec).implied_C
                for s in (1e-3, 7.5, 1e4):
                    dev = max(dev, abs(verify_point(name, 64, 2, 1e-3, spec.scaled(s)).implied_C / a - 1))
    criterion(6, dev <= 1e-10, f"forcing rescaling changes implied C by {dev:.1e} (<= 1e-10)")
    assert worst < 3 and dev <= 1e-10


# -- 7 -----------------------------------------------------------------------


def theta_l2(state):
    return float(np.sqrt(np.sum((np.abs(state.full("theta")) ** 2) @ state.grid.weights)))


def stacked(state):
    return np.concatenate([state.omega.ravel(), state.theta.ravel()])


def test_c7_solver_validation(criterion):
    g = build_grid(64)
    s0 = initial_state(g, 4, 1e-2, 1e-2, 30.0, 0.1, VMODES, TMODES)
    s = integrate(s0, FluidParams(0.0, 0.0, allow_inviscid=True), 1e-3, 10000)
    drift = abs(theta_l2(s) / theta_l2(s0) - 1)
    criterion(7, drift <= 1e-6, f"inviscid theta drift over [0, 10] {drift:.1e} (<= 1e-6)")

    p = FluidParams(1e-2, 1e-2)
    s = initial_state(build_grid(48), 4, 1e-2, 1e-2, 1e-8, 1e-8, VMODES, TMODES)
    x, y = stacked(integrate(s, p, 0.01, 100)), stacked(integrate(s, p, 0.01, 100, nonlinear=False))
    dev = np.linalg.norm(x - y) / np.linalg.norm(y)
    criterion(7, dev <= 1e-6, f"nonlinear vs linear at amplitude 1e-8: {dev:.1e} (<= 1e-6)")

    s = initial_state(build_grid(48), 4, 1e-2, 1e-2, 1.0, 1.0, VMODES, TMODES)
    ref = stacked(integrate(s, p, 0.05 / 16, 320))
    e1, e2 = (np.linalg.norm(stacked(integrate(s, p, dt, int(round(1 / dt)))) - ref) for dt in (0.05, 0.025))
    ratio = e1 / e2
    criterion(7, abs(ratio / 4 - 1) <= 0.2, f"dt halving error ratio {ratio:.2f} (4 +- 20%)")
    assert drift <= 1e-6 and dev <= 1e-6 and abs(ratio / 4 - 1) <= 0.2


# -- 8 and 9 -----------------------------------------------------------------


def threshold_config(nu):
    T = 2 * nu**-0.5
    steps = int(math.ceil(T / 0.02))
    return RunConfig(n=128, k_max=16, nu=nu, mu=nu, eps0=0.1, eps1=0.1, T=T, dt=T / steps, sample_interval=10,
                     velocity_modes=list(VMODES), temperature_modes=list(TMODES))


@pytest.fixture(scope="module")
def stable_runs():
    out = {}
    for nu in (1e-2, 1e-3):
        snap = io.BytesIO()
        out[nu] = (run(threshold_config(nu), snapshot=snap), snap)
    return out


def test_c8_threshold_property(criterion, stable_runs):
    ok = True
    for nu, (res, _) in stable_runs.items():
        me = main_estimate_check(res.ledger, 0.1, 0.1, 4.0)
        good = (not res.departed) and me.pass_E and me.pass_H
        ok &= good
        criterion(8, good, f"nu=mu={nu:g}: sum E/data {me.sum_E / (me.bound_E / 4):.2f}, "
                           f"sum H/data {me.sum_H / (me.bound_H / 4):.2f} (<= 4), departed={res.departed}")
    scan = ScanConfig(nu_list=[1e-3], n=128, k_max=16)
    o = classify_run(scan, 1e-3, 1e-3, 1.0)
    criterion(8, not o.stable, f"amplitude 1 at nu=1e-3 classified {o.label} ({o.reason})")
    assert ok and not o.stable


def test_c9_bootstrap_audit(criterion, stable_runs):
    worst_h, finite = 0.0, True
    for nu, (res, snap) in stable_runs.items():
        led = res.ledger
        rows = audit_bootstrap(led)
        finite &= all(math.isfinite(r.implied_C) for r in rows)
        finite &= {r.inequality for r in rows} >= {"E_k", "E_0", "H_0", "H_low"}
        # rebuild the ledger from the recorded fields, once as stored and once scaled by a
        snap.seek(0)
        g, K = res.state.grid, led.k_max
        states = []
        for t, om, th in read_snapshots(snap):
            u0 = integrate_from_bottom(g, om[K]).real
            states.append(make_state(g, K, om[K:], th[K:], u0, t))

        def rebuilt(a):
            out = EnergyLedger(K, led.nu, led.mu, g.weights, g.nodes)
            for st in states:
                out.accumulate(st.time, *(a * st.full(f) for f in ("omega", "u1", "u2", "theta")))
            return audit_bootstrap(out)

        base = rebuilt(1.0)
        for a in (0.5, 3.0):
            for r, s in zip(base, rebuilt(a)):
                for lin, scaled in ((r.lhs, s.lhs), (r.data, s.data)):
                    worst_h = max(worst_h, abs(scaled - a * lin) / max(abs(a * lin), 1e-300))
                if r.quadratic:
                    worst_h = max(worst_h, abs(s.quadratic / (a * a * r.quadratic) - 1))
    ok = finite and worst_h <= 1e-10
    assert criterion(9, ok, f"implied constants finite: {finite}; homogeneity deviation {worst_h:.1e} (<= 1e-10)")


# -- 10 ----------------------------------------------------------------------


CLI_CONFIGS = {
    "resolvent-sweep": ({"n": 32, "k_list": [1, 2], "mu_list": [1e-2, 1e-3], "lambda_count": 3, "trials": 3,
                         "seed": 5}, ["resolvent_sweep.csv"]),
    "decay-fit": ({"n": 32, "k_list": [1, 2, 4], "mu_list": [1e-1, 1e-2, 1e-3], "n_fine": 32}, ["decay_fit.csv"]),
    "verify-estimates": ({"n": 32, "k_list": [1, 2], "kappa_list": [1e-2], "forcing": "noise", "seed": 3,
                          "horizon_factor": 5.0}, ["verify_estimates.csv"]),
    "simulate": ({"n": 24, "k_max": 3, "nu": 1e-2, "mu": 1e-2, "eps0": 0.5, "eps1": 0.5, "T": 1.0, "dt": 0.05,
                  "seed": 9, "velocity_modes": [{"k": 1, "profile": "quartic"}, {"k": 2, "profile": "random"}],
                  "temperature_modes": [{"k": 1, "profile": "sine"}]}, ["ledger.csv", "audit.csv"]),
    "threshold-scan": ({"nu_list": [1e-2], "n": 24, "k_max": 3, "horizon_factor": 0.1, "bracket": [0.01, 1.0],
                        "rel_width": 2.0, "workers": 2}, ["threshold_scan.csv"]),
}


def test_c10_determinism(criterion, tmp_path):
    bad = []
    for name, (cfg, outputs) in CLI_CONFIGS.items():
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(cfg))
        for d in ("a", "b"):
            assert cli.main([name, str(path), "--output-dir", str(tmp_path / name / d)]) == 0
        for out in outputs:
            if (tmp_path / name / "a" / out).read_bytes() != (tmp_path / name / "b" / out).read_bytes():
                bad.append(f"{name}/{out}")
    audit_cfg = tmp_path / "audit.json"
    audit_cfg.write_text(json.dumps({"ledger_csv": str(tmp_path / "simulate" / "a" / "ledger.csv")}))
    for d in ("a", "b"):
        assert cli.main(["audit-energy", str(audit_cfg), "--output-dir", str(tmp_path / "audit" / d)]) == 0
    if (tmp_path / "audit" / "a" / "audit.csv").read_bytes() != (tmp_path / "audit" / "b" / "audit.csv").read_bytes():
        bad.append("audit-energy/audit.csv")
    assert criterion(10, not bad, "all six subcommands byte-identical" if not bad else f"differs: {bad}")
