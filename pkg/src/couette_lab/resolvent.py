"""Resolvent problem for the temperature operator and its empirical bounds.

Solves

    -mu (d_y^2 - k^2) Theta + i k (y - lam) Theta = F,   Theta(+-1) = 0

for real lam and measures the weighted norm ratios that control the semigroup.
"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import NumericalError
from .operators import TEMPERATURE, FluidParams, ModeOperator, assemble_mode_operator
from .spectral import ChebGrid, FieldLike, as_values, build_grid, hminus1_norm, weighted_l2_norm

log = logging.getLogger(__name__)

WORKERS_ENV = "COUETTE_LAB_WORKERS"


@dataclass(frozen=True)
class ResolventSample:
    k: int
    mu: float
    lam: float
    trial: int
    norm_f: float
    norm_theta: float
    norm_dtheta: float
    norm_shift: float
    ratio_l2: float
    ratio_hm1: float

    CSV_COLUMNS = ("k", "mu", "lambda", "trial", "norm_f", "norm_theta", "norm_dtheta",
                   "norm_shift", "ratio_l2", "ratio_hm1")

    def row(self) -> tuple:
        return tuple(getattr(self, f.name) for f in fields(self))


def _resolvent_matrix(op: ModeOperator, lam: float) -> np.ndarray:
    A = np.array(op.matrix, dtype=complex)
    s = op.grid.interior
    idx = np.arange(op.grid.n)[s]
    A[idx, idx] -= 1j * op.k * lam
    return A


def solve_resolvent(op: ModeOperator, lam: float, f: FieldLike) -> np.ndarray:
    """Theta with (L - i k lam) Theta = F in the interior and Theta(+-1) = 0."""
    if op.kind != TEMPERATURE:
        raise ValueError("resolvent solves use the temperature operator")
    r = np.array(as_values(f, op.grid), dtype=complex)
    r[0] = r[-1] = 0.0
    A = _resolvent_matrix(op, lam)
    try:
        lu = sla.lu_factor(A, check_finite=True)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise NumericalError(f"resolvent solve failed: {exc}") from exc
    theta = sla.lu_solve(lu, r)
    theta[0] = theta[-1] = 0.0
    if not np.all(np.isfinite(theta)):
        cond = np.linalg.cond(A)
        raise NumericalError(f"resolvent solve failed (condition estimate {cond:.3e})")
    return theta


def _ratios(grid: ChebGrid, k: int, mu: float, lam: float, f: np.ndarray, theta: np.ndarray, trial: int = 0):
    norm_f = weighted_l2_norm(grid, f)
    if norm_f == 0.0:
        return ResolventSample(k, mu, lam, trial, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    y = grid.nodes
    n_theta = weighted_l2_norm(grid, theta)
    n_dtheta = weighted_l2_norm(grid, grid.d1 @ theta)
    n_shift = weighted_l2_norm(grid, (y - lam) * theta)
    ak = abs(k)
    lhs_l2 = mu ** (2 / 3) * ak ** (1 / 3) * n_dtheta + (mu * k * k) ** (1 / 3) * n_theta + ak * n_shift
    lhs_hm1 = mu * n_dtheta + mu ** (2 / 3) * ak ** (1 / 3) * n_theta
    return ResolventSample(
        k=int(k), mu=float(mu), lam=float(lam), trial=int(trial), norm_f=norm_f,
        norm_theta=n_theta, norm_dtheta=n_dtheta, norm_shift=n_shift,
        ratio_l2=lhs_l2 / norm_f, ratio_hm1=lhs_hm1 / hminus1_norm(grid, f),
    )


def lemma24_ratios(grid: ChebGrid, k: int, mu: float, lam: float, f: FieldLike, trial: int = 0) -> ResolventSample:
    """Solve the resolvent problem and return the L^2 and H^-1 bound ratios."""
    f = np.asarray(as_values(f, grid), dtype=complex)
    if weighted_l2_norm(grid, f) == 0.0:
        return _ratios(grid, k, mu, lam, f, np.zeros_like(f), trial)
    op = assemble_mode_operator(grid, k, FluidParams(nu=mu, mu=mu), TEMPERATURE)
    return _ratios(grid, k, mu, lam, f, solve_resolvent(op, lam, f), trial)


def _weighted_interior(op: ModeOperator, lam: float) -> np.ndarray:
    g = op.grid
    s = g.interior
    w = np.sqrt(g.weights[s])
    A = np.array(op.interior, dtype=complex) - 1j * op.k * lam * np.eye(g.n - 2)
    return (w[:, None] * A) / w[None, :]


def smallest_singular_value(op: ModeOperator, lam: float) -> float:
    """sigma_min of (L - i k lam) on interior unknowns in the quadrature L^2 norm."""
    return float(sla.svdvals(_weighted_interior(op, lam))[-1])


def gearhart_pruss_gap(op: ModeOperator, lambda_grid: Optional[Sequence[float]] = None) -> float:
    """Psi = min over the lambda grid of sigma_min(L - i k lam)."""
    if lambda_grid is None:
        lambda_grid = default_lambda_grid(121)
    lams = np.asarray(lambda_grid, dtype=float)
    if lams.min() > -1.5 or lams.max() < 1.5:
        log.warning("lambda grid does not cover [-1.5, 1.5]")
    if op.k == 0:
        # i k lam vanishes, every grid point gives the same matrix
        lams = lams[:1]
    return min(smallest_singular_value(op, lam) for lam in lams)


def default_lambda_grid(count: int = 21, half_width: float = 1.5) -> np.ndarray:
    return np.linspace(-half_width, half_width, count)


def random_forcing(grid: ChebGrid, rng: np.random.Generator) -> np.ndarray:
    """Complex node-value white noise normalized to unit quadrature L^2 norm."""
    f = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
    return f / weighted_l2_norm(grid, f)


@dataclass(frozen=True)
class _Point:
    index: int
    n: int
    k: int
    mu: float
    lam: float
    trials: int
    seed: int


def _run_point(p: _Point):
    grid = build_grid(p.n)
    rng = np.random.default_rng(p.seed + p.index)
    try:
        op = assemble_mode_operator(grid, p.k, FluidParams(nu=p.mu, mu=p.mu), TEMPERATURE)
        lu = sla.lu_factor(_resolvent_matrix(op, p.lam))
        out = []
        for t in range(p.trials):
            f = random_forcing(grid, rng)
            r = f.copy()
            r[0] = r[-1] = 0.0
            theta = sla.lu_solve(lu, r)
            if not np.all(np.isfinite(theta)):
                raise NumericalError("non-finite resolvent solution")
            out.append(_ratios(grid, p.k, p.mu, p.lam, f, theta, t))
        return out, None
    except Exception as exc:  # noqa: BLE001 - reported per point, sweep continues
        return [], f"k={p.k} mu={p.mu} lambda={p.lam}: {exc}"


@dataclass
class SweepResult:
    samples: list
    failures: list

    def max_ratio(self, k: Optional[int] = None, mu: Optional[float] = None, attr: str = "ratio_l2") -> float:
        vals = [getattr(s, attr) for s in self.samples
                if (k is None or s.k == k) and (mu is None or s.mu == mu)]
        return max(vals) if vals else float("nan")


def worker_count(default: int = 1) -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, default)))
    except ValueError:
        return default


def sweep_resolvent(
    n: int,
    k_list: Iterable[int],
    mu_list: Iterable[float],
    lambda_list: Iterable[float],
    trials: int,
    seed: int,
    workers: Optional[int] = None,
) -> SweepResult:
    """Resolvent bound ratios for random forcings over a parameter grid.

    Point i draws its forcings from ``default_rng(seed + i)``, so duplicate
    parameter points give independent samples and the result does not depend on
    the worker count.
    """
    k_list, mu_list, lambda_list = list(k_list), list(mu_list), list(lambda_list)
    if not (k_list and mu_list and lambda_list) or trials < 1:
        raise ValueError("sweep needs nonempty parameter lists and trials >= 1")
    points = []
    for k in k_list:
        for mu in mu_list:
            for lam in lambda_list:
                points.append(_Point(len(points), n, int(k), float(mu), float(lam), int(trials), int(seed)))
    workers = worker_count() if workers is None else workers
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_point, points))
    else:
        results = [_run_point(p) for p in points]
    samples, failures = [], []
    for out, err in results:
        samples.extend(out)
        if err:
            log.warning("sweep point failed: %s", err)
            failures.append(err)
    samples.sort(key=lambda s: (s.k, s.mu, s.lam, s.trial))
    return SweepResult(samples, failures)


def uniformity_spread(result: SweepResult, attr: str = "ratio_l2") -> dict:
    """Max/min of the per-point maxima, across mu at each k and across k at each mu."""
    ks = sorted({s.k for s in result.samples})
    mus = sorted({s.mu for s in result.samples})
    table = {(k, mu): result.max_ratio(k, mu, attr) for k in ks for mu in mus}
    across_mu = {k: max(table[k, m] for m in mus) / min(table[k, m] for m in mus) for k in ks}
    across_k = {m: max(table[k, m] for k in ks) / min(table[k, m] for k in ks) for m in mus}
    return {"table": table, "across_mu": across_mu, "across_k": across_k}


def sample_dict(s: ResolventSample) -> dict:
    """Fields keyed by CSV column name, in column order."""
    return dict(zip(ResolventSample.CSV_COLUMNS, s.row()))
