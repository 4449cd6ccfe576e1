"""State evolution, SDR prediction and the per-tuple theory report.

The Part-2 problem seen by AMP is ``y2 = Phi_T x_T + z_FA + z2`` with the
false-alarm term folded into the noise (variance ``sigma_FA^2``). With entry
variance ``1/N`` and the ``N / M2`` back-projection scaling the effective
scalar channel is ``X + sigma_t W`` with

    sigma_{t+1}^2 = (N / M2) (sigma_FA^2 + sigma_z^2) + (N_tilde / M2) mse_t.
"""
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..amp import DenoiserKind, DenoiserSpec, PriorTable, denoise_sparse_gaussian, \
    denoise_true_prior, true_prior_mmse
from ..model import Family
from .analysis import Part1Params, fa_noise_power, p_fa, p_fa_at, p_md, part2_dims

TABLE_POINTS = 4001
TABLE_HALF_WIDTH = 10.0
SE_HERMITE_NODES = 61
SE_PRIOR_POINTS = 2001
DIVERGED_SIGMA2 = 1e8
_PROBE_V = np.array([-4.0, -2.0, -1.0, -0.5, -0.2, 0.0, 0.1, 0.3, 0.7, 1.5, 3.0])
_PROBE_SIGMA2 = (1e-3, 1e-2, 1e-1, 1.0)


@dataclass(frozen=True)
class Part1Summary:
    """Part-1 quantities every Part-2 prediction depends on."""

    p_md: float
    p_fa: float
    n_tilde: float
    s_tilde: float
    fa_energy: float
    sigma_fa2: float


def summarize_part1(p):
    md = p_md(p)
    fa = p_fa(p)
    n_tilde, s_tilde = part2_dims(p, md, fa)
    energy, sigma_fa2 = fa_noise_power(p)
    return Part1Summary(md, fa, n_tilde, s_tilde, energy, sigma_fa2)


def _table_half_width(p):
    if p.family is Family.SPARSE_LAPLACE:
        # exp(-L/b) must stay below the normalization tolerance
        return max(TABLE_HALF_WIDTH, 20.0 * p.laplace_scale)
    return TABLE_HALF_WIDTH


def _p_fa_on_grid(grid, p):
    if p.family is Family.SPARSE_LAPLACE:
        # quadrature per point is slow; P_FA(a) is smooth and even, interpolate
        nodes = np.linspace(0.0, np.abs(grid).max(), 401)
        return np.interp(np.abs(grid), nodes, p_fa_at(nodes, p))
    return p_fa_at(grid, p)


def _table(p, summary, points, half):
    z = (1 - p.s) * summary.p_md + p.s * (1 - summary.p_fa)
    grid = np.linspace(-half, half, points)
    dens = p.s * (1 - _p_fa_on_grid(grid, p)) * p.slab_density(grid) / z
    return PriorTable(-half, grid[1] - grid[0], dens, (1 - p.s) * summary.p_md / z)


def build_prior_table(p, summary=None, points=TABLE_POINTS, tol=1e-6, max_doublings=4):
    """Tabulated prior of the survivors, refined until the denoiser settles.

    Starts from ``points`` samples on ``[-10, 10]`` and doubles the resolution
    while the posterior mean at a set of probe observations moves by ``tol``
    or more. Returns ``None`` when nothing survives Part 1.
    """
    summary = summarize_part1(p) if summary is None else summary
    if summary.n_tilde <= 0:
        return None
    half = _table_half_width(p)
    table = _table(p, summary, points, half)
    for _ in range(max_doublings):
        finer = _table(p, summary, 2 * (table.density.size - 1) + 1, half)
        change = 0.0
        for s2 in _PROBE_SIGMA2:
            a = denoise_true_prior(_PROBE_V, s2, DenoiserSpec(DenoiserKind.TRUE_PRIOR, prior_table=table))[0]
            b = denoise_true_prior(_PROBE_V, s2, DenoiserSpec(DenoiserKind.TRUE_PRIOR, prior_table=finer))[0]
            change = max(change, float(np.max(np.abs(a - b))))
        table = finer
        if change < tol:
            break
    return table


def make_denoiser(kind, p, summary=None, table=None):
    """Denoiser for the surviving coefficients of parameter tuple ``p``."""
    kind = DenoiserKind(kind)
    summary = summarize_part1(p) if summary is None else summary
    s_tilde = summary.s_tilde if np.isfinite(summary.s_tilde) else 0.0
    if kind is DenoiserKind.SPARSE_GAUSSIAN:
        return DenoiserSpec(kind, s_tilde)
    table = build_prior_table(p, summary) if table is None else table
    return DenoiserSpec(kind, s_tilde, table)


@dataclass
class SEResult:
    sigma2: np.ndarray          # sigma_0^2 .. sigma_{t_max}^2
    mse: np.ndarray             # per-coefficient error after each of the t_max denoising steps
    second_moment: float
    noise_floor: float
    flagged: bool = False

    @property
    def final_mse(self):
        return float(self.mse[-1]) if self.mse.size else self.second_moment


class _PriorQuadrature:
    """Point mass plus a trapezoid grid over the continuous part of X."""

    def __init__(self, table, points=SE_PRIOR_POINTS):
        # the Gaussian table's mass beyond |a| = 8 is below 1e-14
        lim = 8.0 if -table.start <= TABLE_HALF_WIDTH else -table.start
        self.a = np.linspace(-lim, lim, points)
        dens = np.interp(self.a, table.grid, table.density)
        w = np.full(points, self.a[1] - self.a[0])
        w[0] = w[-1] = 0.5 * w[0]
        self.w = dens * w
        self.w0 = table.point_mass
        nodes, hw = np.polynomial.hermite_e.hermegauss(SE_HERMITE_NODES)
        self.nodes = nodes
        self.hw = hw / np.sqrt(2.0 * np.pi)

    def mse(self, eta, sigma2):
        sigma = np.sqrt(sigma2)
        w_noise = sigma * self.nodes
        err0 = float(np.sum(self.hw * eta(w_noise, sigma2) ** 2))
        v = self.a[:, None] + w_noise[None, :]
        err = (eta(v.ravel(), sigma2).reshape(v.shape) - self.a[:, None]) ** 2
        return self.w0 * err0 + float(self.w @ (err @ self.hw))


def state_evolution(p, m2, denoiser=DenoiserKind.SPARSE_GAUSSIAN, t_max=20, summary=None,
                    table=None):
    """SE trajectory for Part 2 with ``m2`` Gaussian measurements.

    ``denoiser`` is a :class:`DenoiserKind` or a ready :class:`DenoiserSpec`.
    The signal law is always the exact survivor prior; only the denoiser
    changes. For the matched true-prior denoiser the error is the Bayes risk.
    Growth beyond ``1e8`` or a non-finite value sets ``flagged``.
    """
    if m2 < 1:
        raise ValueError("m2 must be >= 1")
    summary = summarize_part1(p) if summary is None else summary
    noise = (p.n / m2) * (summary.sigma_fa2 + p.sigma_z2)
    if summary.n_tilde <= 0:
        return SEResult(np.full(t_max + 1, noise), np.zeros(t_max), 0.0, noise)
    table = build_prior_table(p, summary) if table is None else table
    spec = denoiser if isinstance(denoiser, DenoiserSpec) else make_denoiser(denoiser, p, summary, table)
    inv_rate = summary.n_tilde / m2
    ex2 = table.second_moment
    if spec.kind is DenoiserKind.TRUE_PRIOR:
        risk = lambda s2: true_prior_mmse(s2, spec.prior_table)
    else:
        quad = _PriorQuadrature(table)
        eta = lambda v, s2: denoise_sparse_gaussian(v, s2, spec.s_tilde)[0]
        risk = lambda s2: quad.mse(eta, s2)
    sig = [noise + inv_rate * ex2]
    mse = []
    flagged = False
    for _ in range(t_max):
        cur = max(sig[-1], 1e-300)
        e = risk(cur)
        mse.append(e)
        nxt = noise + inv_rate * e
        sig.append(nxt)
        if not np.isfinite(nxt) or nxt > DIVERGED_SIGMA2:
            flagged = True
            break
    return SEResult(np.array(sig), np.array(mse), ex2, noise, flagged)


def predict_mse_total(p, summary, se):
    """Expected ``||x - x_hat||^2``: false-alarm energy plus Part-2 error."""
    return summary.fa_energy + summary.n_tilde * se.final_mse


def sdr_from_mse(signal_energy, mse_total):
    if mse_total <= 0:
        return math.inf
    return 10.0 * math.log10(signal_energy / mse_total)


def predict_sdr(p, m2, denoiser=DenoiserKind.SPARSE_GAUSSIAN, t_max=20, unit_norm=False,
                summary=None, se=None):
    """Predicted SDR in dB; ``inf`` when the predicted error vanishes."""
    summary = summarize_part1(p) if summary is None else summary
    se = state_evolution(p, m2, denoiser, t_max, summary) if se is None else se
    energy = 1.0 if unit_norm else p.s * p.n * p.slab_variance
    return sdr_from_mse(energy, predict_mse_total(p, summary, se))


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(v, np.ndarray):
        return [_jsonable(float(u)) for u in v]
    if isinstance(v, (np.floating, np.integer)):
        return _jsonable(v.item())
    if isinstance(v, dict):
        return {k: _jsonable(u) for k, u in v.items()}
    if hasattr(v, "value"):
        return v.value
    return v


@dataclass
class TheoryReport:
    params: Part1Params
    m2: int
    p_md: float
    p_fa: float
    n_tilde: float
    s_tilde: float
    sigma_fa2: float
    se_trajectory: np.ndarray
    sdr_pred: float
    t1_pred: float = float("nan")
    t2_pred: float = float("nan")
    denoiser: str = DenoiserKind.SPARSE_GAUSSIAN.value
    meta: dict = field(default_factory=lambda: {
        "part2_mse": "state-evolution value after t_max iterations (no replica MMSE)"})

    def to_dict(self):
        d = asdict(self)
        d["params"] = _jsonable(asdict(self.params))
        return _jsonable(d)

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def theory_report(p, m2, denoiser=DenoiserKind.SPARSE_GAUSSIAN, t_max=20, runtime_model=None):
    summary = summarize_part1(p)
    se = state_evolution(p, m2, denoiser, t_max, summary)
    sdr = predict_sdr(p, m2, denoiser, t_max, summary=summary, se=se)
    t1 = t2 = float("nan")
    if runtime_model is not None:
        t1, t2 = runtime_model.predict_parts(p.n, p.m1, summary.n_tilde, m2)
    kind = denoiser.kind if isinstance(denoiser, DenoiserSpec) else DenoiserKind(denoiser)
    return TheoryReport(p, int(m2), summary.p_md, summary.p_fa, summary.n_tilde,
                        summary.s_tilde, summary.sigma_fa2, se.sigma2, sdr, t1, t2, kind.value)


# -- characteristic functions of a Part-1 measurement pair -----------------


def joint_cf_limit(t1, t2, d):
    """Limit of the joint characteristic function of two Part-1 measurements.

    Unit nonzeros, no noise, ``N -> inf`` with ``d`` fixed: the pair becomes two
    independent compound-Poisson sums, ``exp(d (e^{-t1^2/2} + e^{-t2^2/2} - 2))``.
    """
    return np.exp(d * (np.exp(-0.5 * np.square(t1)) + np.exp(-0.5 * np.square(t2)) - 2.0))


def joint_cf_finite(t1, t2, n, s, d, gamma=1.0):
    """Exact joint characteristic function at finite ``N`` (Gaussian slab, no noise).

    Each coefficient independently enters row 1, row 2, both or neither with
    probabilities from ``q = d/(sN)``; conditional on being nonzero its
    contribution to the pair is ``gamma * a * (b1, b2)``.
    """
    q = d / (s * n)
    g2 = gamma * gamma
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    e1 = np.exp(-0.5 * g2 * t1**2)
    e2 = np.exp(-0.5 * g2 * t2**2)
    e12 = np.exp(-0.5 * g2 * (t1 + t2) ** 2)
    one = (1 - q) ** 2 + q * (1 - q) * (e1 + e2) + q * q * e12
    per = (1 - s) + s * one
    return per**n
