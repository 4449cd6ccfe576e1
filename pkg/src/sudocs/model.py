"""Signal models, sampling and SNR accounting."""
import enum
from dataclasses import dataclass, field

import numpy as np

from ._rng import make_rng
from .errors import DivisionGuardError, InvalidDimensionError, ResampleExhaustedError

MAX_REDRAWS = 100


class Family(str, enum.Enum):
    SPARSE_GAUSSIAN = "sparse_gaussian"
    SPARSE_LAPLACE = "sparse_laplace"


@dataclass(frozen=True)
class SignalModel:
    """i.i.d. spike-and-slab prior ``(1-s) delta_0 + s * slab``.

    The slab is N(0, 1) for the Gaussian family and Laplace(0, b) for the
    Laplace family. With ``unit_norm`` the sampled vector is rescaled to unit
    l2 norm (the 1-bit convention).
    """

    family: Family = Family.SPARSE_GAUSSIAN
    s: float = 0.01
    laplace_scale: float = 1.0
    unit_norm: bool = False

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"sparsity rate must lie in (0, 1), got {self.s}")
        if not self.laplace_scale > 0.0:
            raise ValueError(f"Laplace scale must be positive, got {self.laplace_scale}")

    @property
    def slab_variance(self):
        if self.family is Family.SPARSE_LAPLACE:
            return 2.0 * self.laplace_scale**2
        return 1.0

    def slab_density(self, a):
        a = np.asarray(a, dtype=float)
        if self.family is Family.SPARSE_LAPLACE:
            b = self.laplace_scale
            return np.exp(-np.abs(a) / b) / (2.0 * b)
        return np.exp(-0.5 * a * a) / np.sqrt(2.0 * np.pi)


@dataclass(eq=False)
class SignalVector:
    values: np.ndarray
    model: SignalModel
    seed: int
    support: np.ndarray = field(init=False)

    def __post_init__(self):
        self.support = np.flatnonzero(self.values)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __len__(self):
        return len(self.values)


def _draw(model, n, rng):
    mask = rng.random(n) < model.s
    k = int(mask.sum())
    x = np.zeros(n)
    if model.family is Family.SPARSE_LAPLACE:
        x[mask] = rng.laplace(0.0, model.laplace_scale, size=k)
    else:
        x[mask] = rng.standard_normal(k)
    return x


def sample_signal(model, n, seed):
    """Draw a length-``n`` signal from ``model``; deterministic in ``seed``."""
    if n < 1:
        raise InvalidDimensionError(f"signal length must be >= 1, got {n}")
    for attempt in range(MAX_REDRAWS):
        x = _draw(model, n, make_rng(seed, "signal", attempt))
        if not model.unit_norm:
            return SignalVector(x, model, seed)
        nrm = np.linalg.norm(x)
        if nrm > 0:
            return SignalVector(x / nrm, model, seed)
    raise ResampleExhaustedError(
        f"{MAX_REDRAWS} consecutive all-zero draws (n={n}, s={model.s}); cannot unit-normalize")


def _apply(phi_apply, x):
    if callable(phi_apply):
        return np.asarray(phi_apply(x))
    if hasattr(phi_apply, "matvec"):
        return phi_apply.matvec(x)
    return np.asarray(phi_apply) @ x


def input_snr(phi_apply, x, z):
    """Input SNR ``10 log10(||Phi x||^2 / ||z||^2)`` in dB.

    ``phi_apply`` is a measurement matrix object (anything with ``matvec``), a
    plain array, or a callable returning ``Phi @ x``.
    """
    u = _apply(phi_apply, np.asarray(x, dtype=float))
    z = np.asarray(z, dtype=float)
    if u.shape != z.shape:
        raise InvalidDimensionError(f"operator output {u.shape} does not match noise {z.shape}")
    nz = float(z @ z)
    if nz == 0.0:
        raise DivisionGuardError("noise vector has zero norm; SNR undefined")
    return 10.0 * np.log10(float(u @ u) / nz)


def noise_variance_for_snr(s, snr_db, slab_variance=1.0):
    """Per-measurement noise variance giving input SNR ``snr_db``.

    Under the N(0, 1/N) dense ensemble (and the matched sparse ensemble) each
    measurement has expected energy ``s * slab_variance``.
    """
    return s * slab_variance / 10.0 ** (snr_db / 10.0)
