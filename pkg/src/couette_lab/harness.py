"""Experiment drivers, the stability threshold scan and power-law fits.

Every driver takes a plain dict (parsed from a JSON config file), writes its
outputs into ``output_dir`` and returns a summary dict. Outputs depend only on
the config, so repeated invocations produce identical bytes.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .errors import ConfigError
from .ledger import audit_bootstrap, audit_to_csv, main_estimate_check, read_ledger_csv
from .nonlinear import ModeSpec, RunConfig, compute_fluxes, initial_state, run
from .operators import TEMPERATURE, FluidParams, assemble_mode_operator
from .resolvent import (
    ResolventSample,
    default_lambda_grid,
    gearhart_pruss_gap,
    sweep_resolvent,
    uniformity_spread,
    worker_count,
)
from .semigroup import (
    REPORT_COLUMNS,
    DecayFit,
    ForcingSpec,
    default_horizon,
    evolve_linear,
    fit_enhanced_dissipation,
    report_row,
    verify_prop21,
    verify_prop25,
    verify_prop26,
)
from .spectral import build_grid

log = logging.getLogger(__name__)

ENVELOPE_NOTE = "stability = sum E_k <= C x data bound and sum H_k <= C x data bound, no blow-up (operational convention)"


# -- output helpers ----------------------------------------------------------


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def csv_text(format_name: str, columns: Sequence[str], rows: Iterable[Sequence], note: str = "") -> str:
    buf = io.StringIO()
    buf.write(f"# format: {format_name}/1{'; ' + note if note else ''}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def json_text(format_name: str, payload: dict) -> str:
    return json.dumps({"format": f"{format_name}/1", **_clean(payload)}, indent=2, sort_keys=True) + "\n"


def _write(out_dir: str, name: str, text: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def _take(cfg: dict, allowed: Dict[str, object], what: str) -> dict:
    unknown = set(cfg) - set(allowed)
    if unknown:
        raise ConfigError(f"{what}: unknown keys {sorted(unknown)}")
    out = dict(allowed)
    out.update(cfg)
    missing = [k for k, v in out.items() if v is _REQUIRED]
    if missing:
        raise ConfigError(f"{what}: missing keys {missing}")
    return out


_REQUIRED = object()


# -- power-law fits ----------------------------------------------------------


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    r2: float
    half_width: float
    """Half-width of the 95% confidence interval of the slope."""


def fit_exponent(points: Sequence[Tuple[float, float]], confidence: float = 0.95) -> ExponentFit:
    """Ordinary least squares of log y on log x."""
    pts = list(points)
    if len(pts) < 3:
        raise ConfigError("exponent fit needs at least 3 points")
    x = np.array([p[0] for p in pts], dtype=float)
    y = np.array([p[1] for p in pts], dtype=float)
    if np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(x * y)):
        raise ConfigError("exponent fit needs positive finite values")
    lx, ly = np.log(x), np.log(y)
    if np.ptp(lx) == 0:
        raise ConfigError("exponent fit needs at least two distinct x values")
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    dof = len(pts) - 2
    se = math.sqrt(ss_res / dof / np.sum((lx - lx.mean()) ** 2)) if dof > 0 else math.inf
    half = float(stats.t.ppf(0.5 + confidence / 2, dof) * se) if dof > 0 else math.inf
    return ExponentFit(float(slope), float(intercept), float(np.clip(r2, 0.0, 1.0)), half)


# -- resolvent sweep ---------------------------------------------------------


def resolvent_sweep(cfg: dict, out_dir: str = ".") -> dict:
    c = _take(cfg, {"n": 128, "k_list": [1, 2, 4, 8], "mu_list": [1e-2, 1e-3, 1e-4],
                    "lambda_list": None, "lambda_count": 21, "lambda_half_width": 1.5,
                    "trials": 20, "seed": 1234}, "resolvent-sweep")
    lams = c["lambda_list"] if c["lambda_list"] is not None else \
        default_lambda_grid(c["lambda_count"], c["lambda_half_width"]).tolist()
    result = sweep_resolvent(c["n"], c["k_list"], c["mu_list"], lams, c["trials"], c["seed"])
    _write(out_dir, "resolvent_sweep.csv",
           csv_text("resolvent-sweep", ResolventSample.CSV_COLUMNS, (s.row() for s in result.samples)))
    summary = {"samples": len(result.samples), "failures": result.failures,
               "max_ratio_l2": result.max_ratio(), "max_ratio_hm1": result.max_ratio(attr="ratio_hm1")}
    if result.samples:
        spread = uniformity_spread(result)
        summary["max_ratio_l2_by_point"] = [{"k": k, "mu": mu, "max_ratio_l2": v}
                                            for (k, mu), v in sorted(spread["table"].items())]
        summary["spread_across_mu"] = {str(k): v for k, v in spread["across_mu"].items()}
        summary["spread_across_k"] = {repr(m): v for m, v in spread["across_k"].items()}
    _write(out_dir, "resolvent_sweep.json", json_text("resolvent-sweep", summary))
    return summary


# -- decay fits --------------------------------------------------------------

DECAY_COLUMNS = ("k", "mu", "rate", "window_start", "window_end", "r2", "gap", "rate_over_scale")


def decay_step(k: int, mu: float, dt_factor: float = 0.02) -> float:
    """Time step resolving the decay time 1/max(mu^(1/3) |k|^(2/3), mu) and the
    shear period 2 pi/|k|."""
    tau = 1.0 / max(mu ** (1 / 3) * abs(k) ** (2 / 3), mu)
    return min(dt_factor * tau, 0.05 / max(abs(k), 1))


def decay_fit_point(n: int, k: int, mu: float, horizon_factor: float = 20.0,
                    dt_factor: float = 0.02, max_records: int = 2000) -> Tuple[DecayFit, float]:
    """Evolve sin(pi (y+1)/2) under the unforced temperature operator, fit the
    decay rate and return it with the resolvent gap Psi."""
    grid = build_grid(n)
    op = assemble_mode_operator(grid, k, FluidParams(mu, mu), TEMPERATURE)
    T = default_horizon(k, mu, horizon_factor)
    steps = int(math.ceil(T / decay_step(k, mu, dt_factor)))
    dt = T / steps
    init = np.sin(np.pi * (grid.nodes + 1) / 2).astype(complex)
    traj = evolve_linear(op, init, None, T, dt, record_every=max(1, steps // max_records))
    return fit_enhanced_dissipation(traj), gearhart_pruss_gap(op)


def decay_fit(cfg: dict, out_dir: str = ".") -> dict:
    c = _take(cfg, {"n": 128, "k_list": [1, 2, 4, 8], "mu_list": [1e-2, 1e-3, 1e-4, 1e-5],
                    "n_fine": 192, "fine_below_mu": 1e-5, "horizon_factor": 20.0,
                    "dt_factor": 0.02}, "decay-fit")
    rows, fits = [], {}
    for k in c["k_list"]:
        for mu in c["mu_list"]:
            n = c["n_fine"] if mu <= c["fine_below_mu"] else c["n"]
            fit, gap = decay_fit_point(n, int(k), float(mu), c["horizon_factor"], c["dt_factor"])
            scale = mu ** (1 / 3) * abs(k) ** (2 / 3) if k else mu
            rows.append((k, mu, fit.rate, fit.window[0], fit.window[1], fit.r2, gap, fit.rate / scale))
            fits[k, mu] = fit.rate
    _write(out_dir, "decay_fit.csv", csv_text("decay-fit", DECAY_COLUMNS, rows))
    summary: dict = {"points": len(rows), "mu_exponent": {}, "k_exponent": {}}
    ks, mus = sorted(set(c["k_list"])), sorted(set(c["mu_list"]))
    for k in ks:
        if k != 0 and len(mus) >= 3:
            summary["mu_exponent"][str(k)] = asdict(fit_exponent([(m, fits[k, m]) for m in mus]))
    for m in mus:
        nz = [k for k in ks if k != 0]
        if len(nz) >= 3:
            summary["k_exponent"][repr(m)] = asdict(fit_exponent([(k, fits[k, m]) for k in nz]))
    _write(out_dir, "decay_fit.json", json_text("decay-fit", summary))
    return summary


# -- forced verification -----------------------------------------------------

VERIFY_COLUMNS = ("estimate", "component", "amplitude") + REPORT_COLUMNS[1:] + ("forcing_omega", "predicted_gain")


def verification_horizon(k: int, kappa: float, factor: float = 20.0, max_steps: int = 2000,
                         dt_max: float = 0.05) -> Tuple[float, float]:
    """T = factor (kappa k^2)^(-1/3) and a step dividing it."""
    T = factor * (kappa * k * k) ** (-1 / 3)
    dt = min(dt_max, T / max_steps)
    steps = int(math.ceil(T / dt))
    return T, T / steps


def verify_point(name: str, n: int, k: int, kappa: float, spec: ForcingSpec,
                 horizon_factor: float = 20.0):
    grid = build_grid(n)
    T, dt = verification_horizon(k, kappa, horizon_factor)
    if name == "forced_temperature":
        return verify_prop25(grid, k, kappa, spec, T, dt)
    if name == "temperature":
        init = np.sin(np.pi * (grid.nodes + 1) / 2).astype(complex)
        return verify_prop26(grid, k, kappa, init, spec, T, dt)
    if name == "vorticity":
        return verify_prop21(grid, k, kappa, np.zeros(grid.n, dtype=complex), spec, T, dt)
    raise ConfigError(f"unknown estimate {name!r}")


def verify_estimates(cfg: dict, out_dir: str = ".") -> dict:
    c = _take(cfg, {"n": 96, "k_list": [1, 2, 4], "kappa_list": [1e-2, 1e-3, 1e-4],
                    "estimates": ["forced_temperature", "vorticity"], "components": [1, 2],
                    "forcing": "resonant", "amplitudes": [1.0], "seed": 0,
                    "horizon_factor": 20.0}, "verify-estimates")
    rows, spreads = [], {}
    for name in c["estimates"]:
        for comp in c["components"]:
            for amp in c["amplitudes"]:
                Cs = []
                for k in c["k_list"]:
                    for kap in c["kappa_list"]:
                        spec = ForcingSpec(c["forcing"], int(comp), float(amp), seed=int(c["seed"]))
                        rep = verify_point(name, c["n"], int(k), float(kap), spec, c["horizon_factor"])
                        Cs.append(rep.implied_C)
                        rows.append((name, comp, amp) + report_row(rep)[1:]
                                    + (rep.extra.get("omega", math.nan), rep.extra.get("predicted_gain", math.nan)))
                pos = [x for x in Cs if x > 0]
                spreads[f"{name}/g{comp}/a={amp!r}"] = max(pos) / min(pos) if pos else math.nan
    _write(out_dir, "verify_estimates.csv", csv_text("verify-estimates", VERIFY_COLUMNS, rows))
    summary = {"rows": len(rows), "implied_C_spread": spreads}
    _write(out_dir, "verify_estimates.json", json_text("verify-estimates", summary))
    return summary


# -- nonlinear runs ----------------------------------------------------------


def simulate(cfg: dict, out_dir: str = ".", envelope: float = 4.0) -> dict:
    config = RunConfig.from_dict(dict(cfg))
    snap = None
    if config.snapshot_path:
        os.makedirs(out_dir, exist_ok=True)
        snap = open(os.path.join(out_dir, config.snapshot_path), "wb")
    try:
        result = run(config, snap)
    finally:
        if snap is not None:
            snap.close()
    ledger_name = config.ledger_csv or "ledger.csv"
    audit_name = config.audit_csv or "audit.csv"
    _write(out_dir, ledger_name, result.ledger.to_csv())
    rows = audit_bootstrap(result.ledger)
    _write(out_dir, audit_name, audit_to_csv(rows))
    me = main_estimate_check(result.ledger, config.eps0, config.eps1, envelope)
    summary = {
        "departed": result.departed, "reason": result.reason, "steps": result.steps,
        "final_time": result.state.time, "sum_E": me.sum_E, "sum_H": me.sum_H,
        "bound_E": me.bound_E, "bound_H": me.bound_H, "pass_E": me.pass_E, "pass_H": me.pass_H,
        "tail_E": me.tail_E, "tail_H": me.tail_H, "data_bound_E": result.initial_bound_E,
        "data_bound_H": result.initial_bound_H, "max_noslip_residual": result.max_noslip_residual,
        "max_implied_C": _max_by_inequality(rows), "envelope": envelope, "note": ENVELOPE_NOTE,
    }
    _write(out_dir, "simulate.json", json_text("simulate", summary))
    return summary


def _max_by_inequality(rows) -> dict:
    out: Dict[str, float] = {}
    for r in rows:
        out[r.inequality] = max(out.get(r.inequality, 0.0), r.implied_C)
    return out


def audit_energy(cfg: dict, out_dir: str = ".") -> dict:
    c = _take(cfg, {"ledger_csv": _REQUIRED, "eps0": 0.0, "eps1": 0.0, "envelope": 4.0,
                    "audit_csv": "audit.csv"}, "audit-energy")
    try:
        with open(c["ledger_csv"], encoding="utf-8") as fh:
            table = read_ledger_csv(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read ledger: {exc}") from exc
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"malformed ledger CSV: {exc}") from exc
    rows = audit_bootstrap(table)
    _write(out_dir, c["audit_csv"], audit_to_csv(rows))
    me = main_estimate_check(table, c["eps0"], c["eps1"], c["envelope"])
    summary = {"max_implied_C": _max_by_inequality(rows), **asdict(me), "envelope": c["envelope"]}
    _write(out_dir, "audit_energy.json", json_text("audit-energy", summary))
    return summary


# -- threshold scan ----------------------------------------------------------


@dataclass(frozen=True)
class Outcome:
    nu: float
    mu: float
    amplitude: float
    stable: bool
    sum_E: float = 0.0
    bound_E: float = 0.0
    sum_H: float = 0.0
    bound_H: float = 0.0
    dt: float = 0.0
    reason: str = ""

    @property
    def label(self) -> str:
        return "stable" if self.stable else "departed"


OUTCOME_COLUMNS = ("nu", "mu", "amplitude", "outcome", "sum_E", "bound_E", "sum_H", "bound_H", "dt", "reason")


@dataclass
class ScanConfig:
    """Threshold scan settings.

    The amplitude A of a run is the peak initial perturbation speed
    max |u_in| (the wall speed of the background flow is 1). Data are built from
    the configured profiles with eps0 = eps1, so the temperature is scaled by
    the same factor relative to min(nu, mu)^(11/12) as the velocity is
    relative to min(nu, mu)^(1/2).
    """

    nu_list: List[float] = field(default_factory=lambda: [1e-2, 1e-3])
    mu_list: Optional[List[float]] = None
    bracket: Tuple[float, float] = (0.01, 1.0)
    rel_width: float = 1.25
    horizon_factor: float = 2.0
    n: int = 128
    k_max: int = 16
    dt_max: float = 0.02
    dt_ref: float = 0.005
    sample_interval: int = 10
    envelope: float = 4.0
    seed: int = 0
    velocity_modes: List[ModeSpec] = field(default_factory=lambda: list(DEFAULT_VELOCITY_MODES))
    temperature_modes: List[ModeSpec] = field(default_factory=lambda: list(DEFAULT_TEMPERATURE_MODES))
    workers: Optional[int] = None
    probe_amplitudes: List[float] = field(default_factory=list)
    """Extra amplitudes classified at every nu after bisection; they feed the
    monotonicity check, which a bisection log alone can never violate."""

    def __post_init__(self):
        self.velocity_modes = [m if isinstance(m, ModeSpec) else ModeSpec.parse(m) for m in self.velocity_modes]
        self.temperature_modes = [m if isinstance(m, ModeSpec) else ModeSpec.parse(m) for m in self.temperature_modes]
        self.bracket = tuple(float(b) for b in self.bracket)
        if len(self.bracket) != 2 or not 0 < self.bracket[0] < self.bracket[1]:
            raise ConfigError("bracket must be (lo, hi) with 0 < lo < hi")
        if self.rel_width <= 1:
            raise ConfigError("rel_width must exceed 1")
        if not self.nu_list:
            raise ConfigError("nu_list must be nonempty")
        if self.mu_list is not None and len(self.mu_list) != len(self.nu_list):
            raise ConfigError("mu_list must match nu_list in length")
        self.probe_amplitudes = [float(a) for a in self.probe_amplitudes]
        if any(a < 0 for a in self.probe_amplitudes):
            raise ConfigError("probe amplitudes must be nonnegative")

    @classmethod
    def from_dict(cls, d: dict) -> "ScanConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"threshold-scan: unknown keys {sorted(unknown)}")
        return cls(**d)

    def pairs(self) -> List[Tuple[float, float]]:
        mus = self.mu_list if self.mu_list is not None else self.nu_list
        return [(float(a), float(b)) for a, b in zip(self.nu_list, mus)]


DEFAULT_VELOCITY_MODES = (ModeSpec(1, "quartic", 1.0), ModeSpec(2, "odd_quartic", 0.5j), ModeSpec(0, "quartic", 0.5))
DEFAULT_TEMPERATURE_MODES = (ModeSpec(1, "sine", 1.0), ModeSpec(0, "parabola", 0.5), ModeSpec(2, "bump", 0.5))


def peak_speed(config: RunConfig) -> float:
    """max |u| over the dealiased physical grid for the configured initial data."""
    grid = build_grid(config.n)
    st = initial_state(grid, config.k_max, config.nu, config.mu, config.eps0, config.eps1,
                       config.velocity_modes, config.temperature_modes, config.seed)
    return compute_fluxes(st).max_speed


def amplitude_config(scan: ScanConfig, nu: float, mu: float, amplitude: float) -> RunConfig:
    """RunConfig whose initial peak speed equals ``amplitude``."""
    T = scan.horizon_factor * min(nu, mu) ** -0.5
    dt = min(scan.dt_max, scan.dt_ref / amplitude) if amplitude > 0 else scan.dt_max
    steps = int(math.ceil(T / dt))
    base = RunConfig(n=scan.n, k_max=scan.k_max, nu=nu, mu=mu, eps0=1.0, eps1=1.0, T=T, dt=T / steps,
                     sample_interval=scan.sample_interval, seed=scan.seed,
                     velocity_modes=list(scan.velocity_modes), temperature_modes=list(scan.temperature_modes),
                     cfl_policy="depart")
    if amplitude == 0:
        return replace(base, eps0=0.0, eps1=0.0)
    unit = peak_speed(base)
    if unit == 0:
        raise ConfigError("scan profiles carry no velocity")
    eps = amplitude / unit
    return replace(base, eps0=eps, eps1=eps)


def classify_run(scan: ScanConfig, nu: float, mu: float, amplitude: float) -> Outcome:
    cfg = amplitude_config(scan, nu, mu, amplitude)
    result = run(cfg)
    me = main_estimate_check(result.ledger, cfg.eps0, cfg.eps1, scan.envelope)
    stable = (not result.departed) and me.pass_E and me.pass_H
    reason = result.reason
    if not result.departed and not stable:
        reason = "envelope exceeded"
    log.info("nu=%g mu=%g amplitude=%g -> %s", nu, mu, amplitude, "stable" if stable else "departed")
    return Outcome(nu, mu, amplitude, stable, me.sum_E, me.bound_E, me.sum_H, me.bound_H, cfg.dt, reason)


Classifier = Callable[[float, float, float], Outcome]


@dataclass
class Bracket:
    nu: float
    mu: float
    lo: float
    hi: float
    reliable: bool
    note: str = ""

    @property
    def critical(self) -> float:
        return math.sqrt(self.lo * self.hi)


@dataclass
class ThresholdScanResult:
    outcomes: List[Outcome]
    brackets: List[Bracket]
    exponent: Optional[ExponentFit]
    monotone: Dict[float, bool]

    def rows(self):
        for o in self.outcomes:
            yield (o.nu, o.mu, o.amplitude, o.label, o.sum_E, o.bound_E, o.sum_H, o.bound_H, o.dt, o.reason)


def monotone_in_amplitude(outcomes: Sequence[Outcome]) -> bool:
    """Stable amplitudes must all lie below every departed amplitude."""
    stable = [o.amplitude for o in outcomes if o.stable]
    departed = [o.amplitude for o in outcomes if not o.stable]
    return not stable or not departed or max(stable) < min(departed)


def bisect_threshold(classify: Classifier, nu: float, mu: float, lo: float, hi: float,
                     rel_width: float = 1.25) -> Tuple[Bracket, List[Outcome]]:
    """Geometric bisection of the stable/departed boundary in amplitude."""
    log_ = [classify(nu, mu, lo), classify(nu, mu, hi)]
    if not log_[0].stable or log_[1].stable:
        which = "lower end departed" if not log_[0].stable else "upper end stable"
        return Bracket(nu, mu, lo, hi, False, f"bracket does not straddle the threshold ({which})"), log_
    while hi / lo > rel_width:
        mid = math.sqrt(lo * hi)
        o = classify(nu, mu, mid)
        log_.append(o)
        if o.stable:
            lo = mid
        else:
            hi = mid
    ok = monotone_in_amplitude(log_)
    return Bracket(nu, mu, lo, hi, ok, "" if ok else "non-monotone outcomes"), log_


def _scan_one(args):
    scan, nu, mu, classify = args
    if classify is None:
        def classify(a, b, c):
            return classify_run(scan, a, b, c)
    bracket, outcomes = bisect_threshold(classify, nu, mu, scan.bracket[0], scan.bracket[1], scan.rel_width)
    if scan.probe_amplitudes:
        outcomes = outcomes + [classify(nu, mu, a) for a in scan.probe_amplitudes]
        if not monotone_in_amplitude(outcomes):
            bracket = replace(bracket, reliable=False, note="non-monotone outcomes")
    return bracket, outcomes


def threshold_scan(scan: ScanConfig, classify: Optional[Classifier] = None) -> ThresholdScanResult:
    """Bisect the critical amplitude at each (nu, mu) and fit its power law in
    min(nu, mu) when at least three reliable brackets exist."""
    pairs = scan.pairs()
    workers = scan.workers if scan.workers is not None else worker_count()
    jobs = [(scan, nu, mu, classify) for nu, mu in pairs]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_scan_one, jobs))
    else:
        results = [_scan_one(j) for j in jobs]
    outcomes: List[Outcome] = []
    brackets = []
    for b, outs in results:
        brackets.append(b)
        outcomes.extend(sorted(outs, key=lambda o: o.amplitude))
    pts = [(min(b.nu, b.mu), b.critical) for b in brackets if b.reliable]
    exponent = fit_exponent(pts) if len({p[0] for p in pts}) >= 3 else None
    monotone = {b.nu: "non-monotone" not in b.note for b in brackets}
    return ThresholdScanResult(outcomes, brackets, exponent, monotone)


def threshold_scan_cmd(cfg: dict, out_dir: str = ".") -> dict:
    scan = ScanConfig.from_dict(dict(cfg))
    res = threshold_scan(scan)
    _write(out_dir, "threshold_scan.csv", csv_text("threshold-scan", OUTCOME_COLUMNS, res.rows(), ENVELOPE_NOTE))
    summary = {
        "brackets": [asdict(b) | {"critical": b.critical} for b in res.brackets],
        "exponent": asdict(res.exponent) if res.exponent else None,
        "note": ENVELOPE_NOTE + "; amplitude = peak initial speed",
    }
    _write(out_dir, "threshold_scan.json", json_text("threshold-scan", summary))
    return summary
