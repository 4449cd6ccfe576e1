"""Runtime model and the runtime/quality trade-off sweep."""
import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ..amp import DenoiserKind
from ..errors import FitDegenerateError
from ..model import Family
from .analysis import Part1Params
from .se import predict_sdr, state_evolution, summarize_part1

FRONTIER_COLUMNS = ("R", "bin", "runtime_bin_center", "best_sdr", "d", "eps", "c", "r")


def _design(rows):
    rows = np.asarray(rows, dtype=float)
    a, b = rows[:, 0], rows[:, 1]
    return np.column_stack([a, b, a * b]), rows[:, 2]


def _fit(rows, label):
    if len({(float(r[0]), float(r[1])) for r in rows}) < 4:
        raise FitDegenerateError(f"{label}: need at least 4 distinct design points")
    X, t = _design(rows)
    if np.linalg.matrix_rank(X) < 3:
        raise FitDegenerateError(f"{label}: design matrix is rank deficient")
    # scale columns so the lstsq conditioning does not depend on units
    norms = np.linalg.norm(X, axis=0)
    coef = np.linalg.lstsq(X / norms, t, rcond=None)[0] / norms
    resid = t - X @ coef
    ss_tot = float(np.sum((t - t.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return coef, r2


@dataclass
class RuntimeModel:
    """``t1 = alpha . (N, M1, N M1)`` and ``t2 = beta . (N_tilde, M2, N_tilde M2)``."""

    alpha: np.ndarray
    beta: np.ndarray
    r2_part1: float = float("nan")
    r2_part2: float = float("nan")

    def t1(self, n, m1):
        return max(float(self.alpha @ [n, m1, n * m1]), 0.0)

    def t2(self, n_tilde, m2):
        return max(float(self.beta @ [n_tilde, m2, n_tilde * m2]), 0.0)

    def predict_parts(self, n, m1, n_tilde, m2):
        return self.t1(n, m1), self.t2(n_tilde, m2)

    def predict(self, n, m1, n_tilde, m2):
        return sum(self.predict_parts(n, m1, n_tilde, m2))

    def to_dict(self):
        return {"alpha": list(map(float, self.alpha)), "beta": list(map(float, self.beta)),
                "r2_part1": self.r2_part1, "r2_part2": self.r2_part2}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["alpha"], float), np.asarray(d["beta"], float),
                   d.get("r2_part1", float("nan")), d.get("r2_part2", float("nan")))


def fit_runtime_model(part1_samples, part2_samples):
    """Least-squares fit from ``(N, M1, t1)`` and ``(N_tilde, M2, t2)`` samples."""
    alpha, r2a = _fit(part1_samples, "part 1")
    beta, r2b = _fit(part2_samples, "part 2")
    return RuntimeModel(alpha, beta, r2a, r2b)


def split_measurements(n, rate, r):
    """``(M1, M2)`` for total rate ``R = M/N`` and split ``r = M1/M2``."""
    m = int(round(rate * n))
    m1 = int(round(m * r / (1.0 + r)))
    return m1, m - m1


@dataclass
class TradeoffPoint:
    R: float
    d: float
    eps: float
    c: int
    r: float
    m1: int
    m2: int
    n_tilde: float
    sdr: float
    runtime: float


@dataclass
class Frontier:
    bins: int
    rows: list = field(default_factory=list)       # dicts keyed by FRONTIER_COLUMNS
    points: list = field(default_factory=list)     # every evaluated TradeoffPoint

    def for_rate(self, R):
        return [row for row in self.rows if row["R"] == R]

    def to_csv(self, path, header_comment=None):
        with open(path, "w", newline="") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            w = csv.DictWriter(fh, fieldnames=list(FRONTIER_COLUMNS))
            w.writeheader()
            for row in self.rows:
                w.writerow({k: row[k] for k in FRONTIER_COLUMNS})


def envelope(best_sdr):
    """Cumulative maximum over runtime bins; empty (NaN) bins inherit the running max."""
    out = np.empty(len(best_sdr))
    run = -math.inf
    for i, v in enumerate(best_sdr):
        if v is not None and not math.isnan(v):
            run = max(run, v)
        out[i] = run if run > -math.inf else math.nan
    return out


def _bin_frontier(R, pts, bins):
    times = np.array([p.runtime for p in pts])
    lo, hi = float(times.min()), float(times.max())
    width = (hi - lo) / bins if hi > lo else 1.0
    idx = np.minimum(((times - lo) / width).astype(int), bins - 1) if hi > lo else np.zeros(len(pts), int)
    rows = []
    for b in range(bins):
        members = [p for p, k in zip(pts, idx) if k == b]
        best = max(members, key=lambda p: p.sdr) if members else None
        rows.append({
            "R": R, "bin": b, "runtime_bin_center": lo + (b + 0.5) * width,
            "best_sdr": best.sdr if best else math.nan,
            "d": best.d if best else math.nan, "eps": best.eps if best else math.nan,
            "c": best.c if best else math.nan, "r": best.r if best else math.nan,
            "runtime_pred": best.runtime if best else math.nan,
            "m1": best.m1 if best else math.nan, "m2": best.m2 if best else math.nan,
        })
    for row, e in zip(rows, envelope([row["best_sdr"] for row in rows])):
        row["envelope_sdr"] = float(e)
    return rows


def sweep_tradeoff(n, s, sigma_z2, grid, R_values, runtime_model, bins=30,
                   denoiser=DenoiserKind.SPARSE_GAUSSIAN, t_max=20,
                   family=Family.SPARSE_GAUSSIAN):
    """Predicted SDR and runtime for every ``(d, eps, c, r)`` tuple at each ``R``.

    ``grid`` maps ``d``, ``eps``, ``c`` and ``r`` to lists of values. For each
    rate the predicted runtimes are cut into ``bins`` equal-width bins and the
    best tuple in each bin is kept; empty bins appear with NaN entries.
    """
    keys = ("d", "eps", "c", "r")
    if any(not grid.get(k) for k in keys) or not R_values:
        raise ValueError("empty parameter grid")
    tuples = list(itertools.product(*(grid[k] for k in keys)))
    summaries = {}
    frontier = Frontier(bins)
    for R in R_values:
        pts = []
        for d, eps, c, r in tuples:
            m1, m2 = split_measurements(n, R, r)
            if m2 < 1 or d / (s * n) > 1:
                continue
            p = Part1Params(n, m1, s, d, eps, int(c), sigma_z2, family)
            key = (m1, d, eps, int(c))
            if key not in summaries:
                summaries[key] = summarize_part1(p)
            summary = summaries[key]
            se = state_evolution(p, m2, denoiser, t_max, summary)
            sdr = predict_sdr(p, m2, denoiser, t_max, summary=summary, se=se)
            t = runtime_model.predict(n, m1, summary.n_tilde, m2)
            pts.append(TradeoffPoint(R, d, eps, int(c), r, m1, m2, summary.n_tilde, sdr, t))
        if not pts:
            continue
        frontier.points.extend(pts)
        frontier.rows.extend(_bin_frontier(R, pts, bins))
    return frontier
