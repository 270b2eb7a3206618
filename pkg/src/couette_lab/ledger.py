"""Space-time functionals E_k, H_k accumulated during a run, and the audit of
the bootstrap inequalities built from them.

For k != 0

    E_k = ||(1-|y|)^(1/2) w_k||_{LinfL2} + |k| ||u_k||_{L2L2}
          + |k|^(1/2) ||u_k||_{LinfLinf} + (nu k^2)^(1/4) ||w_k||_{L2L2}
    H_k = |k|^(1/6) ||th_k||_{LinfL2} + mu^(1/6) |k|^(1/2) ||th_k||_{L2L2}

and E_0 = ||w_0||_{LinfL2}, H_0 = ||th_0||_{LinfL2}. All time norms are over the
sampled horizon [0, T], not over t > 0. The velocity norms use the Euclidean
length of (u1, u2) at each node.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .spectral import wall_distance_weight

LEDGER_FORMAT = "couette-lab ledger v1"
AUDIT_FORMAT = "couette-lab audit v1"

LEDGER_COLUMNS = (
    "k", "E_w_weighted", "E_u_L2L2", "E_u_LinfLinf", "E_w_L2L2", "E",
    "H_theta_LinfL2", "H_theta_L2L2", "H", "w_LinfL2", "w_in", "dy_w_in", "theta_in",
)
AUDIT_COLUMNS = ("inequality", "k", "lhs", "data", "quadratic", "coupling", "implied_C")


class EnergyLedger:
    """Running sup and time-integral accumulators for modes k = -k_max..k_max.

    Arrays are indexed by ``k + k_max``. ``accumulate`` takes the per-mode field
    arrays (shape ``(2 k_max + 1, n)``) at one sample time.
    """

    def __init__(self, k_max: int, nu: float, mu: float, weights: Optional[np.ndarray] = None,
                 nodes: Optional[np.ndarray] = None):
        self.k_max = int(k_max)
        self.nu, self.mu = float(nu), float(mu)
        size = 2 * self.k_max + 1
        self.ks = np.arange(-self.k_max, self.k_max + 1)
        self.weights = weights
        self.nodes = nodes
        z = lambda: np.zeros(size)  # noqa: E731
        self.sup_w = z()
        self.sup_w_weighted = z()
        self.sup_u_inf = z()
        self.sup_theta = z()
        self.int_u_sq = z()
        self.int_w_sq = z()
        self.int_theta_sq = z()
        self.w_in = z()
        self.dy_w_in = z()
        self.theta_in = z()
        self.times: List[float] = []
        self._prev: Optional[Dict[str, np.ndarray]] = None

    # -- accumulation --------------------------------------------------------

    def set_initial(self, w_in: np.ndarray, dy_w_in: np.ndarray, theta_in: np.ndarray):
        """Store per-k L^2 norms of the initial vorticity, its y-derivative and
        the initial temperature."""
        self.w_in = np.asarray(w_in, dtype=float).copy()
        self.dy_w_in = np.asarray(dy_w_in, dtype=float).copy()
        self.theta_in = np.asarray(theta_in, dtype=float).copy()

    def _sq_norms(self, a: np.ndarray, weight: Optional[np.ndarray] = None) -> np.ndarray:
        w = self.weights if weight is None else self.weights * weight
        return (np.abs(a) ** 2) @ w

    def accumulate(self, t: float, omega: np.ndarray, u1: np.ndarray, u2: np.ndarray,
                   theta: np.ndarray, dt_since_last: Optional[float] = None):
        """Fold one sample into the accumulators. Sup parts take the max, L^2_t
        parts add a trapezoidal increment (nothing when dt_since_last is 0)."""
        if self.weights is None:
            raise ValueError("ledger needs quadrature weights before accumulating")
        cur = {
            "w": self._sq_norms(omega),
            "u": self._sq_norms(u1) + self._sq_norms(u2),
            "theta": self._sq_norms(theta),
        }
        w_weighted = np.sqrt(self._sq_norms(omega, wall_distance_weight(self.nodes)))
        u_inf = np.sqrt((np.abs(u1) ** 2 + np.abs(u2) ** 2).max(axis=1))
        np.maximum(self.sup_w, np.sqrt(cur["w"]), out=self.sup_w)
        np.maximum(self.sup_w_weighted, w_weighted, out=self.sup_w_weighted)
        np.maximum(self.sup_u_inf, u_inf, out=self.sup_u_inf)
        np.maximum(self.sup_theta, np.sqrt(cur["theta"]), out=self.sup_theta)
        if self._prev is not None:
            if dt_since_last is None:
                dt_since_last = t - self.times[-1]
            if dt_since_last < 0:
                raise ValueError("samples must be in time order")
            h = 0.5 * dt_since_last
            self.int_w_sq += h * (self._prev["w"] + cur["w"])
            self.int_u_sq += h * (self._prev["u"] + cur["u"])
            self.int_theta_sq += h * (self._prev["theta"] + cur["theta"])
        self._prev = cur
        self.times.append(float(t))

    # -- functionals ---------------------------------------------------------

    @property
    def horizon(self) -> float:
        return self.times[-1] - self.times[0] if self.times else 0.0

    def components(self) -> Dict[str, np.ndarray]:
        ak = np.abs(self.ks).astype(float)
        nz = ak > 0
        comp = {
            "E_w_weighted": np.where(nz, self.sup_w_weighted, 0.0),
            "E_u_L2L2": ak * np.sqrt(self.int_u_sq),
            "E_u_LinfLinf": np.sqrt(ak) * self.sup_u_inf,
            "E_w_L2L2": (self.nu * ak**2) ** 0.25 * np.sqrt(self.int_w_sq),
            "H_theta_LinfL2": np.where(nz, ak ** (1 / 6) * self.sup_theta, self.sup_theta),
            "H_theta_L2L2": self.mu ** (1 / 6) * np.sqrt(ak) * np.sqrt(self.int_theta_sq),
        }
        return comp

    @property
    def E(self) -> np.ndarray:
        c = self.components()
        e = c["E_w_weighted"] + c["E_u_L2L2"] + c["E_u_LinfLinf"] + c["E_w_L2L2"]
        e[self.k_max] = self.sup_w[self.k_max]
        return e

    @property
    def H(self) -> np.ndarray:
        c = self.components()
        return c["H_theta_LinfL2"] + c["H_theta_L2L2"]

    def data_bound_E(self) -> float:
        """sum_k ||w_in,k|| + sum_{k != 0} |k|^-1 ||d_y w_in,k||."""
        ak = np.abs(self.ks)
        nz = ak > 0
        return float(self.w_in.sum() + np.sum(self.dy_w_in[nz] / ak[nz]))

    def data_bound_H(self) -> float:
        """||th_in,0|| + sum_{k != 0} |k|^(1/6) ||th_in,k||."""
        ak = np.abs(self.ks)
        nz = ak > 0
        return float(self.theta_in[~nz].sum() + np.sum(ak[nz] ** (1 / 6) * self.theta_in[nz]))

    def scaled(self, a: float) -> "EnergyLedger":
        """The ledger of the same run with every field multiplied by a > 0."""
        out = EnergyLedger(self.k_max, self.nu, self.mu, self.weights, self.nodes)
        for name in ("sup_w", "sup_w_weighted", "sup_u_inf", "sup_theta", "w_in", "dy_w_in", "theta_in"):
            setattr(out, name, a * getattr(self, name))
        for name in ("int_u_sq", "int_w_sq", "int_theta_sq"):
            setattr(out, name, a * a * getattr(self, name))
        out.times = list(self.times)
        return out

    # -- CSV -----------------------------------------------------------------

    def rows(self) -> List[tuple]:
        c = self.components()
        E, H = self.E, self.H
        out = []
        for i, k in enumerate(self.ks):
            out.append((int(k), c["E_w_weighted"][i], c["E_u_L2L2"][i], c["E_u_LinfLinf"][i],
                        c["E_w_L2L2"][i], E[i], c["H_theta_LinfL2"][i], c["H_theta_L2L2"][i],
                        H[i], self.sup_w[i], self.w_in[i], self.dy_w_in[i], self.theta_in[i]))
        return out

    def to_csv(self, extra_header: str = "") -> str:
        buf = io.StringIO()
        buf.write(f"# {LEDGER_FORMAT}; nu={self.nu!r}; mu={self.mu!r}; k_max={self.k_max}; "
                  f"horizon={self.horizon!r}; samples={len(self.times)}; "
                  "norms are horizon-truncated{}\n".format(f"; {extra_header}" if extra_header else ""))
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(LEDGER_COLUMNS)
        for r in self.rows():
            w.writerow([r[0]] + [repr(float(v)) for v in r[1:]])
        return buf.getvalue()


@dataclass
class LedgerTable:
    """A finalized ledger read back from CSV: per-k E, H and data norms."""

    k_max: int
    nu: float
    mu: float
    ks: np.ndarray
    E: np.ndarray
    H: np.ndarray
    w_in: np.ndarray
    dy_w_in: np.ndarray
    theta_in: np.ndarray
    columns: Dict[str, np.ndarray] = field(default_factory=dict)


def parse_header(line: str) -> Dict[str, str]:
    out = {}
    for part in line.lstrip("#").split(";"):
        if "=" in part:
            key, val = part.split("=", 1)
            out[key.strip()] = val.strip()
    return out


def read_ledger_csv(text: str) -> LedgerTable:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#") or LEDGER_FORMAT not in lines[0]:
        raise ValueError("not a ledger CSV (missing version header)")
    meta = parse_header(lines[0])
    reader = csv.DictReader(lines[1:])
    rows = list(reader)
    cols = {name: np.array([float(r[name]) for r in rows]) for name in LEDGER_COLUMNS}
    return LedgerTable(
        k_max=int(meta["k_max"]), nu=float(meta["nu"]), mu=float(meta["mu"]),
        ks=cols["k"].astype(int), E=cols["E"], H=cols["H"], w_in=cols["w_in"],
        dy_w_in=cols["dy_w_in"], theta_in=cols["theta_in"], columns=cols,
    )


def as_table(ledger) -> LedgerTable:
    if isinstance(ledger, LedgerTable):
        return ledger
    return LedgerTable(ledger.k_max, ledger.nu, ledger.mu, ledger.ks.copy(), ledger.E, ledger.H,
                       ledger.w_in.copy(), ledger.dy_w_in.copy(), ledger.theta_in.copy())


# -- audit -------------------------------------------------------------------


@dataclass(frozen=True)
class AuditRow:
    inequality: str
    k: int
    lhs: float
    data: float
    quadratic: float
    coupling: float
    implied_C: float

    def row(self) -> tuple:
        return (self.inequality, self.k, self.lhs, self.data, self.quadratic, self.coupling, self.implied_C)


def _excess_ratio(lhs: float, data: float, rest: float) -> float:
    # E <= data + C * rest: the smallest C
    excess = lhs - data
    if excess <= 0:
        return 0.0
    return excess / rest if rest > 0 else float("inf")


def _full_ratio(lhs: float, bracket: float) -> float:
    # H <~ bracket: the smallest C with H <= C * bracket
    if lhs == 0:
        return 0.0
    return lhs / bracket if bracket > 0 else float("inf")


def audit_bootstrap(ledger) -> List[AuditRow]:
    """Evaluate both sides of the five bootstrap inequalities for every k and
    report the minimal constant that makes each hold.

    E_k     k != 0:       E_k <= ||w_in|| + |k|^-1 ||d_y w_in||
                          + C [nu^-1/2 sum_l E_l E_{k-l} + nu^-1/4 mu^-1/6 H_k]
    E_0     k = 0:        E_0 <= ||w_in,0|| + C nu^-1/2 sum_{l!=0} E_l E_{-l}
    H_0     k = 0:        H_0 <= C [||th_in,0|| + mu^-1/2 sum_{l!=0} |l|^-2/3 E_l H_{-l}]
    H_low   mu k^2 <= 1:  H_k <= C [|k|^1/6 ||th_in,k|| + mu^-1/2 sum_l E_l H_{k-l}
                          + nu^-1/8 mu^-5/24 sum_{l!=0,k; |k-l|<=|k|/2} E_l H_{k-l}]
    H_high  mu k^2 > 1:   same first two terms + nu^-1/8 mu^-5/24 E_k H_0

    Sums run over the retained modes |l|, |k-l| <= k_max.
    """
    t = as_table(ledger)
    K, nu, mu = t.k_max, t.nu, t.mu
    E = {int(k): float(e) for k, e in zip(t.ks, t.E)}
    H = {int(k): float(h) for k, h in zip(t.ks, t.H)}
    w_in = {int(k): float(v) for k, v in zip(t.ks, t.w_in)}
    dy_w_in = {int(k): float(v) for k, v in zip(t.ks, t.dy_w_in)}
    th_in = {int(k): float(v) for k, v in zip(t.ks, t.theta_in)}

    def pairs(k):
        return [l for l in range(-K, K + 1) if -K <= k - l <= K]

    rows = []
    c_mixed = nu ** (-1 / 8) * mu ** (-5 / 24)
    for k in range(-K, K + 1):
        if k == 0:
            quad = nu**-0.5 * sum(E[l] * E[-l] for l in pairs(0) if l != 0)
            rows.append(AuditRow("E_0", 0, E[0], w_in[0], quad, 0.0, _excess_ratio(E[0], w_in[0], quad)))
            q = mu**-0.5 * sum(abs(l) ** (-2 / 3) * E[l] * H[-l] for l in pairs(0) if l != 0)
            rows.append(AuditRow("H_0", 0, H[0], th_in[0], q, 0.0, _full_ratio(H[0], th_in[0] + q)))
            continue
        ak = abs(k)
        data = w_in[k] + dy_w_in[k] / ak
        quad = nu**-0.5 * sum(E[l] * E[k - l] for l in pairs(k))
        buoy = nu**-0.25 * mu ** (-1 / 6) * H[k]
        rows.append(AuditRow("E_k", k, E[k], data, quad, buoy, _excess_ratio(E[k], data, quad + buoy)))
        hdata = ak ** (1 / 6) * th_in[k]
        q1 = mu**-0.5 * sum(E[l] * H[k - l] for l in pairs(k))
        if mu * k * k <= 1:
            q2 = c_mixed * sum(E[l] * H[k - l] for l in pairs(k)
                               if l not in (0, k) and abs(k - l) <= ak / 2)
            name = "H_low"
        else:
            q2 = c_mixed * E[k] * H[0]
            name = "H_high"
        rows.append(AuditRow(name, k, H[k], hdata, q1, q2, _full_ratio(H[k], hdata + q1 + q2)))
    return rows


def audit_to_csv(rows: List[AuditRow]) -> str:
    buf = io.StringIO()
    buf.write(f"# {AUDIT_FORMAT}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(AUDIT_COLUMNS)
    for r in rows:
        w.writerow([r.inequality, r.k] + [repr(float(v)) for v in r.row()[2:]])
    return buf.getvalue()


def read_audit_csv(text: str) -> List[AuditRow]:
    lines = text.splitlines()
    if not lines or AUDIT_FORMAT not in lines[0]:
        raise ValueError("not an audit CSV (missing version header)")
    out = []
    for r in csv.DictReader(lines[1:]):
        out.append(AuditRow(r["inequality"], int(r["k"]), float(r["lhs"]), float(r["data"]),
                            float(r["quadratic"]), float(r["coupling"]), float(r["implied_C"])))
    return out


@dataclass(frozen=True)
class MainEstimate:
    sum_E: float
    sum_H: float
    bound_E: float
    bound_H: float
    pass_E: bool
    pass_H: bool
    tail_E: float
    """Share of sum_E carried by |k| = k_max (truncation indicator)."""
    tail_H: float


def main_estimate_check(ledger, eps0: float, eps1: float, C: float = 4.0) -> MainEstimate:
    """Compare sum_k E_k and sum_k H_k with C eps0 m^(1/2) and C eps1 m^(11/12),
    m = min(nu, mu)."""
    t = as_table(ledger)
    m = min(t.nu, t.mu)
    sE, sH = float(np.sum(t.E)), float(np.sum(t.H))
    bE, bH = C * eps0 * m**0.5, C * eps1 * m ** (11 / 12)
    edge = np.abs(t.ks) == t.k_max
    tail_E = float(np.sum(t.E[edge]) / sE) if sE > 0 else 0.0
    tail_H = float(np.sum(t.H[edge]) / sH) if sH > 0 else 0.0
    return MainEstimate(sE, sH, bE, bH, sE <= bE, sH <= bH, tail_E, tail_H)
