"""Binary iterative hard thresholding and the two-part Sudo-BIHT decoder."""
import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DivergenceError
from .measure import quantize_sign
from .part1 import identify_zeros, small_measurement_set


class BihtVariant(str, enum.Enum):
    L1 = "l1"
    L2 = "l2"


@dataclass
class BihtConfig:
    """``step=None`` means ``1/M`` for the instance being solved."""

    variant: BihtVariant = BihtVariant.L1
    k: int = 1
    max_iter: int = 100
    step: float = None
    stop_on_consistency: bool = True

    def __post_init__(self):
        self.variant = BihtVariant(self.variant)
        if self.k < 1 or self.max_iter < 1:
            raise ConfigurationError("BIHT needs k >= 1 and max_iter >= 1")
        if self.step is not None and not self.step > 0:
            raise ConfigurationError("step must be positive")


@dataclass(eq=False)
class BihtResult:
    x: np.ndarray
    n_iter: int
    consistent: bool


def hard_threshold_topk(u, k):
    """Keep the ``k`` largest-magnitude entries of ``u``; ties go to the lower index."""
    u = np.asarray(u, dtype=float)
    n = u.size
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    out = np.zeros_like(u)
    if k == n:
        out[:] = u
        return out
    # stable sort on -|u| keeps lower indices first among equal magnitudes
    keep = np.argsort(-np.abs(u), kind="stable")[:k]
    out[keep] = u[keep]
    return out


def _entries(phi):
    return phi.entries if hasattr(phi, "entries") else np.asarray(phi, dtype=float)


def consistency_check(x_hat, phi, y, quantizer=quantize_sign):
    """True iff ``quantizer(Phi x_hat)`` reproduces ``y`` exactly."""
    u = _entries(phi) @ np.asarray(x_hat, dtype=float)
    return bool(np.array_equal(quantizer(u), np.asarray(y)))


def _normalize(x):
    nrm = np.linalg.norm(x)
    return x / nrm if nrm > 0 else x


def biht_solve(y, phi, cfg, x0=None):
    """BIHT on sign measurements ``y = sign(Phi x)``.

    The l1 variant steps along ``Phi^T (y - sign(Phi x)) / 2``; the l2 variant
    along ``-Phi^T (y * min(y * Phi x, 0))``, which only sees sign violations.
    Both project onto ``k``-sparse vectors each iteration. The l2 gradient
    vanishes at ``x = 0``, so its default start is the normalized ``k``-sparse
    back-projection. With ``stop_on_consistency`` the loop returns as soon as
    the iterate reproduces ``y``; the final estimate is unit-normalized.
    """
    a = _entries(phi)
    y = np.asarray(y, dtype=float)
    m, n = a.shape
    if not np.all(np.abs(y) == 1):
        raise ValueError("y must contain only -1 and +1")
    step = 1.0 / m if cfg.step is None else cfg.step
    k = min(cfg.k, n)
    if x0 is not None:
        x = np.asarray(x0, dtype=float).copy()
    elif cfg.variant is BihtVariant.L2:
        x = _normalize(hard_threshold_topk(a.T @ y, k))
    else:
        x = np.zeros(n)
    it = 0
    u = a @ x
    consistent = bool(np.array_equal(quantize_sign(u), y))
    while it < cfg.max_iter and not (cfg.stop_on_consistency and consistent):
        if cfg.variant is BihtVariant.L1:
            g = 0.5 * (a.T @ (y - np.where(u > 0, 1.0, -1.0)))
        else:
            g = -(a.T @ (y * np.minimum(y * u, 0.0)))
        x = hard_threshold_topk(x + step * g, k)
        it += 1
        if not np.all(np.isfinite(x)):
            raise DivergenceError(f"BIHT diverged at iteration {it}", it)
        u = a @ x
        consistent = bool(np.array_equal(quantize_sign(u), y))
    return BihtResult(_normalize(x), it, consistent)


@dataclass(eq=False)
class SudoBihtResult:
    x: np.ndarray
    part1: object
    biht: BihtResult
    k: int


def run_sudo_biht(y1, phi1, y2, phi2, c, cfg, x_true=None, s_tilde=None):
    """Two-part 1-bit decoder.

    ``y1`` comes from the magnitude quantizer (so ``eps`` is already applied)
    and ``y2`` from the sign quantizer. With ``x_true`` the sparsity level for
    Part 2 is the true nonzero count among the survivors; otherwise it is
    ``round(s_tilde * |T|)`` (at least 1). ``cfg.k`` is ignored here.
    """
    omega_y = small_measurement_set(y1, quantized=True)
    res1 = identify_zeros(phi1, omega_y, c, x_true)
    n = phi1.n
    T = res1.T
    x_hat = np.zeros(n)
    if T.size == 0:
        warnings.warn("Part 1 identified every coefficient as zero; returning zero", RuntimeWarning)
        return SudoBihtResult(x_hat, res1, BihtResult(np.zeros(0), 0, False), 0)
    if x_true is not None:
        k = int(np.count_nonzero(np.asarray(x_true)[T]))
    else:
        if s_tilde is None:
            raise ConfigurationError("blind mode needs s_tilde")
        k = int(round(s_tilde * T.size))
    k = min(max(k, 1), T.size)
    a2 = _entries(phi2)
    sub = a2 if T.size == a2.shape[1] else a2[:, T]
    part2_cfg = BihtConfig(cfg.variant, k, cfg.max_iter, cfg.step, cfg.stop_on_consistency)
    res2 = biht_solve(y2, sub, part2_cfg)
    x_hat[T] = res2.x
    return SudoBihtResult(_normalize(x_hat), res1, res2, k)
