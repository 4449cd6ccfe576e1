"""Approximate message passing for Part 2.

The measurement model is ``y = Phi x + z`` where ``Phi`` is a column subset of
an i.i.d. Gaussian ensemble with entry variance ``1/N`` (``N`` the full signal
length), so the back-projection is scaled by ``N / M2``. The scalar
denoisers are posterior means (with their derivatives) under either the
sparse-Gaussian prior or a tabulated prior with a point mass at zero.
"""
import csv
import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import ConfigurationError, DivergenceError, InvalidVarianceError

SIGMA2_FLOOR = 1e-12
_WINDOW_SIGMAS = 10.0
_CHUNK = 2_000_000
_HERMITE_NODES = 61


class DenoiserKind(str, enum.Enum):
    SPARSE_GAUSSIAN = "sparse_gaussian"
    TRUE_PRIOR = "true_prior"


@dataclass(eq=False)
class PriorTable:
    """Mixed prior ``w0 * delta_0 + g(a) da`` with ``g`` sampled on a uniform grid.

    ``density`` holds ``g`` at ``start + h * k``; its integral (trapezoid on the
    grid) is the continuous mass ``1 - w0``.
    """

    start: float
    h: float
    density: np.ndarray
    point_mass: float

    @property
    def grid(self):
        return self.start + self.h * np.arange(self.density.size)

    @property
    def continuous_mass(self):
        return float(np.trapezoid(self.density, dx=self.h))

    @property
    def second_moment(self):
        return float(np.trapezoid(self.density * self.grid**2, dx=self.h))


@dataclass
class DenoiserSpec:
    kind: DenoiserKind = DenoiserKind.SPARSE_GAUSSIAN
    s_tilde: float = 0.1
    prior_table: PriorTable = None

    def __post_init__(self):
        self.kind = DenoiserKind(self.kind)

    def __call__(self, v, sigma2):
        if self.kind is DenoiserKind.SPARSE_GAUSSIAN:
            return denoise_sparse_gaussian(v, sigma2, self.s_tilde)
        return denoise_true_prior(v, sigma2, self)


def _check_sigma2(sigma2):
    if not sigma2 > 0:
        raise InvalidVarianceError(f"noise variance must be positive, got {sigma2}")


def denoise_sparse_gaussian(v, sigma2, s_tilde):
    """Posterior mean of ``X ~ (1-s) delta_0 + s N(0,1)`` from ``v = X + sqrt(sigma2) W``.

    Returns ``(eta(v), eta'(v))``.
    """
    _check_sigma2(sigma2)
    v = np.asarray(v, dtype=float)
    snr_gain = 1.0 / (1.0 + sigma2)
    if s_tilde >= 1.0:
        return v * snr_gain, np.full_like(v, snr_gain)
    if s_tilde <= 0.0:
        return np.zeros_like(v), np.zeros_like(v)
    # posterior log-odds of "nonzero"
    logit = (np.log(s_tilde / (1.0 - s_tilde)) + 0.5 * np.log(sigma2 * snr_gain)
             + 0.5 * v * v * snr_gain / sigma2)
    pi = expit(logit)
    value = pi * v * snr_gain
    deriv = pi * snr_gain * (1.0 + (1.0 - pi) * v * v * snr_gain / sigma2)
    return value, deriv


def _posterior_moments(v, sigma2, table):
    """E[X|v], E[X^2|v] and log of the unnormalized evidence under a PriorTable.

    The evidence omits the kernel constant ``1/sqrt(2 pi sigma2)``.
    """
    v = np.atleast_1d(np.asarray(v, dtype=float))
    sigma = np.sqrt(sigma2)
    grid = table.grid
    n = grid.size
    with np.errstate(divide="ignore"):
        logg = np.log(table.density * table.h)
        logw0 = np.log(table.point_mass) if table.point_mass > 0 else -np.inf
    half = int(np.ceil(_WINDOW_SIGMAS * sigma / table.h)) + 1
    m1 = np.empty_like(v)
    m2 = np.empty_like(v)
    logz = np.empty_like(v)
    if 2 * half + 1 >= n:
        offsets, full = np.arange(n), True
    else:
        offsets, full = np.arange(-half, half + 1), False
    step = max(1, _CHUNK // offsets.size)
    for lo in range(0, v.size, step):
        vc = v[lo:lo + step]
        if full:
            idx = np.broadcast_to(offsets, (vc.size, n))
            valid = None
        else:
            # past the table edge the nearest grid points still dominate
            centre = np.clip(np.rint((vc - table.start) / table.h), 0, n - 1).astype(np.int64)
            raw = centre[:, None] + offsets
            valid = (raw >= 0) & (raw < n)
            idx = np.clip(raw, 0, n - 1)
        a = grid[idx]
        logt = logg[idx] - (vc[:, None] - a) ** 2 / (2.0 * sigma2)
        if valid is not None:
            logt = np.where(valid, logt, -np.inf)
        # the point mass enters with the same Gaussian normalization
        log0 = logw0 - vc * vc / (2.0 * sigma2)
        top = np.maximum(logt.max(axis=1), log0)
        top = np.where(np.isfinite(top), top, 0.0)
        wt = np.exp(logt - top[:, None])
        z = wt.sum(axis=1) + np.exp(log0 - top)
        s1 = (wt * a).sum(axis=1)
        s2 = (wt * a * a).sum(axis=1)
        m1[lo:lo + step] = s1 / z
        m2[lo:lo + step] = s2 / z
        logz[lo:lo + step] = np.log(z) + top
    return m1, m2, logz


def denoise_true_prior(v, sigma2, spec):
    """Posterior mean and derivative under the tabulated prior of ``spec``.

    The derivative uses ``d/dv E[X|v] = Var[X|v] / sigma2``.
    """
    _check_sigma2(sigma2)
    if spec.prior_table is None:
        raise ConfigurationError("true-prior denoiser needs a prior table")
    shape = np.shape(v)
    m1, m2, _ = _posterior_moments(v, sigma2, spec.prior_table)
    var = np.maximum(m2 - m1 * m1, 0.0)
    return m1.reshape(shape), (var / sigma2).reshape(shape)


def true_prior_mmse(sigma2, table):
    """Bayes risk ``E[(E[X|V] - X)^2]`` for ``V = X + sqrt(sigma2) W``, X from ``table``.

    For ``sigma`` at least the table spacing, uses ``mmse = E[X^2] - E[E[X|V]^2]``
    with the outer expectation a trapezoid over a ``v`` grid fine enough to
    resolve the ``sigma``-wide spike of the point mass. Below that spacing the
    tabulated prior acts as a comb of atoms, and the risk is averaged directly
    over the atoms with Gauss-Hermite nodes in ``W``.
    """
    _check_sigma2(sigma2)
    sigma = np.sqrt(sigma2)
    if sigma < table.h:
        nodes, hw = np.polynomial.hermite_e.hermegauss(_HERMITE_NODES)
        hw = hw / np.sqrt(2.0 * np.pi)
        atoms = np.concatenate([[0.0], table.grid])
        weights = np.concatenate([[table.point_mass], trapezoid_weights(table)])
        keep = weights > 0
        atoms, weights = atoms[keep], weights[keep]
        v = (atoms[:, None] + sigma * nodes[None, :]).ravel()
        m1, _, _ = _posterior_moments(v, sigma2, table)
        err = (m1.reshape(atoms.size, nodes.size) - atoms[:, None]) ** 2
        return float(weights @ (err @ hw))
    hv = min(table.h, sigma / 8.0)
    pad = 10.0 * sigma
    vgrid = np.arange(table.start - pad, table.grid[-1] + pad + hv, hv)
    m1, _, logz = _posterior_moments(vgrid, sigma2, table)
    pv = np.exp(logz) / np.sqrt(2 * np.pi * sigma2)
    e_eta2 = np.trapezoid(pv * m1 * m1, dx=hv)
    return max(table.second_moment - e_eta2, 0.0)


def trapezoid_weights(table):
    """Per-point mass ``g(a_k) * w_k`` of the continuous part (trapezoid rule)."""
    w = np.full(table.density.size, table.h)
    w[0] = w[-1] = 0.5 * table.h
    return table.density * w


@dataclass(eq=False)
class AmpState:
    x_t: np.ndarray
    r_t: np.ndarray
    sigma2_hat: float
    t: int = 0
    r_prev: np.ndarray = None
    deriv_mean: float = 0.0


def _scale(phi):
    # N / M2 for the 1/N ensemble
    return 1.0 / (phi.m * phi.entry_variance)


def init_state(y, phi):
    y = np.asarray(y, dtype=float)
    k = phi.entries.shape[1]
    sigma2 = max(_scale(phi) * float(y @ y) / phi.m, SIGMA2_FLOOR)
    return AmpState(np.zeros(k), y.copy(), sigma2, 0, np.zeros_like(y))


def amp_iterate(state, phi, y, denoiser):
    """One AMP step: denoise the back-projection, then the Onsager-corrected residual."""
    a = phi.entries
    m2, k = a.shape
    scale = _scale(phi)
    v = scale * (state.r_t @ a) + state.x_t
    x_new, deriv = denoiser(v, state.sigma2_hat)
    deriv_mean = float(np.mean(deriv)) if k else 0.0
    onsager = state.r_t * (k / m2) * deriv_mean
    r_new = y - a @ x_new + onsager
    sigma2 = scale * float(r_new @ r_new) / m2
    if not (np.isfinite(sigma2) and np.all(np.isfinite(x_new))):
        raise DivergenceError(f"AMP diverged at iteration {state.t + 1}", state.t + 1)
    return AmpState(x_new, r_new, max(sigma2, SIGMA2_FLOOR), state.t + 1, state.r_t, deriv_mean)


def run_amp(y, phi, denoiser, max_iter=20, x_true=None, trace=None):
    """Run ``max_iter`` AMP iterations from ``x = 0``, ``r = y``.

    If ``trace`` is a list, one dict per state (``t``, ``sigma2_hat`` and, with
    ``x_true``, the squared error ``sq_err``) is appended to it.
    """
    y = np.asarray(y, dtype=float)
    state = init_state(y, phi)

    def record(st):
        if trace is None:
            return
        row = {"t": st.t, "sigma2_hat": st.sigma2_hat}
        if x_true is not None:
            row["sq_err"] = float(np.sum((st.x_t - x_true) ** 2))
        trace.append(row)

    record(state)
    for _ in range(max_iter):
        state = amp_iterate(state, phi, y, denoiser)
        record(state)
    return state.x_t


def write_trace_csv(rows, path):
    if not rows:
        return
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
