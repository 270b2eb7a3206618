import numpy as np
import pytest
from hypothesis import given, strategies as st

from couette_lab.errors import ConfigError
from couette_lab.operators import (
    TEMPERATURE, VORTICITY, FluidParams, InfluenceSolver, TemperatureSolver, assemble_mode_operator,
    compatibility_inner_products, compatibility_projection, velocity_from_vorticity,
)
from couette_lab.spectral import build_grid, inner, weighted_l2_norm
from oracle_values import EXP_VORTICITY_SLIP_K1


def rand_field(n, seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def smooth_field(grid, seed, count=24, decay=0.7):
    rng = np.random.default_rng(seed)
    c = (rng.standard_normal(count) + 1j * rng.standard_normal(count)) * decay ** np.arange(count)
    return np.polynomial.chebyshev.chebval(grid.nodes, c)


def test_params_validation():
    with pytest.raises(ConfigError):
        FluidParams(0.0, 1e-3)
    with pytest.raises(ConfigError):
        FluidParams(1e-3, -1.0)
    with pytest.raises(ConfigError):
        FluidParams(1e-3, 2.0)
    with pytest.raises(ConfigError):
        FluidParams(float("nan"), 1e-3)
    assert FluidParams(0.0, 0.0, allow_inviscid=True).min_diffusivity == 0.0
    assert FluidParams(1e-2, 1e-3).min_diffusivity == 1e-3


def test_unknown_kind(grid64):
    with pytest.raises(ConfigError):
        assemble_mode_operator(grid64, 1, FluidParams(1e-2, 1e-2), "pressure")


def test_pure_diffusion_spectrum(grid64):
    op = assemble_mode_operator(grid64, 0, FluidParams(1.0, 1.0), TEMPERATURE)
    ev = np.linalg.eigvals(op.interior)
    assert ev.real.min() == pytest.approx(np.pi**2 / 4, abs=1e-6)


def test_temperature_operator_on_parabola(grid64):
    mu = 0.3
    op = assemble_mode_operator(grid64, 1, FluidParams(mu, mu), TEMPERATURE)
    y = grid64.nodes
    expected = -mu * (-2 - (1 - y**2)) + 1j * y * (1 - y**2)
    got = op.apply(1 - y**2)
    assert np.max(np.abs(got[1:-1] - expected[1:-1])) <= 1e-10
    assert got[0] == 0 and got[-1] == 0


def test_vorticity_operator_has_open_walls(grid64):
    op = assemble_mode_operator(grid64, 2, FluidParams(1e-2, 1e-3), VORTICITY)
    assert np.all(op.matrix[0] == 0) and np.all(op.matrix[-1] == 0)
    assert op.diffusivity == 1e-2
    assert np.allclose(op.matrix[1:-1], op.raw()[1:-1])


@given(st.integers(-8, 8), st.integers(0, 2**31 - 1), st.sampled_from([TEMPERATURE, VORTICITY]))
def test_reality_symmetry(k, seed, kind):
    g = build_grid(32)
    p = FluidParams(1e-2, 3e-3)
    f = rand_field(32, seed)
    a = assemble_mode_operator(g, k, p, kind).apply(f)
    b = assemble_mode_operator(g, -k, p, kind).apply(np.conj(f))
    assert np.allclose(b, np.conj(a), rtol=0, atol=1e-12 * np.max(np.abs(a)) + 1e-300)


def test_operator_is_immutable(grid64):
    op = assemble_mode_operator(grid64, 1, FluidParams(1e-2, 1e-2), TEMPERATURE)
    with pytest.raises(ValueError):
        op.matrix[1, 1] = 0


# -- compatibility ---------------------------------------------------------------


@pytest.mark.parametrize("k", [1, 3, -2])
def test_projection_kills_exponentials(grid64, k):
    for s in (1, -1):
        p = compatibility_projection(grid64, k, np.exp(s * k * grid64.nodes))
        assert np.max(np.abs(compatibility_inner_products(grid64, k, p))) <= 1e-12


@pytest.mark.parametrize("k", [8, -5, 16, 32])
def test_projection_large_k_relative(grid64, k):
    # the projected field is rounding noise of size eps ||w||; measure against the scale
    e = weighted_l2_norm(grid64, np.exp(abs(k) * grid64.nodes))
    for s in (1, -1):
        w = np.exp(s * k * grid64.nodes)
        p = compatibility_projection(grid64, k, w)
        ip = compatibility_inner_products(grid64, k, p)
        assert np.max(np.abs(ip)) <= 1e-12 * weighted_l2_norm(grid64, w) * e


def test_projection_rejects_bad_k(grid64):
    with pytest.raises(ConfigError):
        compatibility_projection(grid64, 0, np.ones(64))
    with pytest.raises(ConfigError):
        compatibility_projection(grid64, 33, np.ones(64))


@given(st.integers(1, 16), st.integers(0, 2**31 - 1))
def test_projection_is_orthogonal_projector(k, seed):
    g = build_grid(48)
    w = rand_field(48, seed)
    v = rand_field(48, seed + 1)
    Pw = compatibility_projection(g, k, w).values
    Pv = compatibility_projection(g, k, v).values
    scale = weighted_l2_norm(g, w)
    # idempotent
    assert weighted_l2_norm(g, compatibility_projection(g, k, Pw).values - Pw) <= 1e-12 * scale
    # self-adjoint in the quadrature inner product
    assert abs(inner(g, Pw, v) - inner(g, w, Pv)) <= 1e-12 * scale * weighted_l2_norm(g, v)
    # norm nonincreasing
    assert weighted_l2_norm(g, Pw) <= scale * (1 + 1e-12)


def test_projection_leaves_compatible_field(grid64):
    w = compatibility_projection(grid64, 2, rand_field(64, 3)).values
    again = compatibility_projection(grid64, 2, w).values
    assert np.max(np.abs(again - w)) <= 1e-12 * np.max(np.abs(w))


# -- velocity ----------------------------------------------------------------------


def test_zero_vorticity(grid64):
    for k in (0, 2):
        v = velocity_from_vorticity(grid64, k, np.zeros(64))
        assert np.all(v.u1 == 0) and np.all(v.u2 == 0) and v.residual == 0


def test_manufactured_velocity(grid64):
    y = grid64.nodes
    psi = (1 - y**2) ** 2
    w = (12 * y**2 - 4) - psi
    v = velocity_from_vorticity(grid64, 1, w)
    assert np.max(np.abs(v.u1 - (-4 * y * (1 - y**2)))) <= 1e-8
    assert np.max(np.abs(v.u2 + 1j * psi)) <= 1e-8
    assert v.residual <= 1e-8


def test_incompatible_vorticity_slips(grid64):
    v = velocity_from_vorticity(grid64, 1, np.exp(grid64.nodes))
    assert v.residual == pytest.approx(EXP_VORTICITY_SLIP_K1, rel=1e-10)


@given(st.integers(1, 12), st.integers(0, 2**31 - 1))
def test_velocity_identities(k, seed):
    g = build_grid(64)
    w = compatibility_projection(g, k, smooth_field(g, seed)).values
    v = velocity_from_vorticity(g, k, w)
    scale = np.max(np.abs(w))
    # vorticity = d_y u1 - i k u2 in the interior
    w_back = g.d1 @ v.u1 - 1j * k * v.u2
    assert np.max(np.abs(w_back - w)[1:-1]) <= 1e-8 * scale
    # divergence free by construction
    assert np.max(np.abs(1j * k * v.u1 + g.d1 @ v.u2)) <= 1e-10 * scale
    # non-slip for compatible data
    assert v.residual <= 1e-8 * scale


def test_mean_flow_recovery(grid64):
    y = grid64.nodes
    v = velocity_from_vorticity(grid64, 0, y)  # zero mean: u1 = (y^2 - 1) / 2
    assert np.max(np.abs(v.u1 - (y**2 - 1) / 2)) <= 1e-12
    assert v.residual <= 1e-12 and np.all(v.u2 == 0)
    v = velocity_from_vorticity(grid64, 0, np.ones(64))  # u1 = y + 1, slips at y = 1
    assert v.u1[-1] == pytest.approx(0, abs=1e-14)
    assert v.residual == pytest.approx(2.0, rel=1e-12)


# -- shifted solvers -------------------------------------------------------------


def test_temperature_solver_residual(grid64):
    k, mu, s = 3, 1e-3, 40.0
    rhs = rand_field(64, 9)
    th = TemperatureSolver(grid64, k, mu, s).solve(rhs)
    L = assemble_mode_operator(grid64, k, FluidParams(mu, mu), TEMPERATURE).raw()
    assert th[0] == 0 and th[-1] == 0
    assert np.max(np.abs((s * th + L @ th - rhs)[1:-1])) <= 1e-9 * np.max(np.abs(rhs))


@pytest.mark.parametrize("k", [1, 4, -3])
def test_influence_solver_noslip(grid64, k):
    nu, s = 1e-3, 50.0
    rhs = smooth_field(grid64, k + 10)
    w = InfluenceSolver(grid64, k, nu, s).solve(rhs)
    L = assemble_mode_operator(grid64, k, FluidParams(nu, nu), VORTICITY).raw()
    assert np.max(np.abs((s * w + L @ w - rhs)[1:-1])) <= 1e-8 * np.max(np.abs(rhs))
    v = velocity_from_vorticity(grid64, k, w)
    assert v.residual <= 1e-10 * np.max(np.abs(w))


def test_influence_solution_is_compatible(grid64):
    # with a resolved wall layer the discrete inner products vanish as well
    w = InfluenceSolver(grid64, 2, 0.1, 1.0).solve(smooth_field(grid64, 4))
    assert np.max(np.abs(compatibility_inner_products(grid64, 2, w))) <= 1e-10 * np.max(np.abs(w))


def test_influence_solver_matrix_rhs(grid64):
    S = InfluenceSolver(grid64, 2, 1e-2, 10.0)
    R = np.stack([rand_field(64, i) for i in range(3)], axis=1)
    cols = np.stack([S.solve(R[:, i]) for i in range(3)], axis=1)
    assert np.allclose(S.solve(R), cols, atol=1e-13)


def test_influence_needs_nonzero_k(grid64):
    with pytest.raises(ConfigError):
        InfluenceSolver(grid64, 0, 1e-2, 1.0)
