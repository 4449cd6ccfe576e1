"""Zero identification (Part 1) and the classic noiseless Sudocodes decoder."""
import warnings
from dataclasses import dataclass

import numpy as np


@dataclass(eq=False)
class Part1Result:
    """Outcome of zero identification.

    ``T`` holds the survivors passed on to Part 2; everything outside it is
    declared zero. ``md_set``/``fa_set`` are only filled when the true signal
    is supplied: a missed detection is a true zero left in ``T``, a false
    alarm a true nonzero removed from it.
    """

    T: np.ndarray
    omega_y: np.ndarray
    hit_counts: np.ndarray
    c: int
    md_set: np.ndarray = None
    fa_set: np.ndarray = None
    n_zeros: int = None
    n_nonzeros: int = None

    @property
    def n(self):
        return self.hit_counts.size

    @property
    def identified(self):
        return np.flatnonzero(self.hit_counts >= self.c)

    @property
    def p_md_emp(self):
        if self.md_set is None or not self.n_zeros:
            return float("nan")
        return self.md_set.size / self.n_zeros

    @property
    def p_fa_emp(self):
        if self.fa_set is None or not self.n_nonzeros:
            return float("nan")
        return self.fa_set.size / self.n_nonzeros


def small_measurement_set(y1, eps=0.0, quantized=False):
    """Indices of small measurements.

    Real-valued ``y1``: ``{i : |y1_i| <= eps}``. With ``quantized=True`` the
    input is the output of the magnitude quantizer and the set is
    ``{i : y1_i == -1}``.
    """
    y1 = np.asarray(y1)
    if quantized:
        return np.flatnonzero(y1 == -1)
    if eps < 0:
        raise ValueError("eps must be >= 0")
    return np.flatnonzero(np.abs(y1) <= eps)


def hit_counts(phi1, omega_y):
    """``S_j = |col_support(j) & omega_y|`` for every column ``j``.

    Walks the row supports of the small measurements only, so the cost is the
    number of nonzeros in those rows plus ``n``.
    """
    omega_y = np.asarray(omega_y, dtype=np.int64)
    if omega_y.size == 0:
        return np.zeros(phi1.n, dtype=np.int64)
    starts = phi1.row_indptr[omega_y]
    lens = phi1.row_indptr[omega_y + 1] - starts
    total = int(lens.sum())
    # flat positions of every entry in the selected rows
    offs = np.repeat(starts - np.concatenate([[0], np.cumsum(lens)[:-1]]), lens)
    pos = np.arange(total) + offs
    return np.bincount(phi1.row_indices[pos], minlength=phi1.n)


def identify_zeros(phi1, omega_y, c, x_true=None):
    """Declare coefficient ``j`` zero when it touches ``c`` or more small measurements."""
    if c < 1:
        raise ValueError(f"c must be >= 1, got {c}")
    S = hit_counts(phi1, omega_y)
    T = np.flatnonzero(S < c)
    res = Part1Result(T=T, omega_y=np.asarray(omega_y, dtype=np.int64), hit_counts=S, c=int(c))
    if x_true is not None:
        x_true = np.asarray(x_true)
        zero = x_true == 0
        kept = S < c
        res.md_set = np.flatnonzero(zero & kept)
        res.fa_set = np.flatnonzero(~zero & ~kept)
        res.n_zeros = int(zero.sum())
        res.n_nonzeros = int(x_true.size - res.n_zeros)
    return res


def classic_sudocodes_part1(y1, phi1, m2):
    """Noiseless Sudocodes Part 1.

    Zero measurements clear their support; two equal nonzero measurements
    clear the symmetric difference of their supports and, if the supports
    share a single index, recover that coefficient as ``y / gamma``. Stops
    once at most ``m2`` coefficients remain unresolved or the measurements run
    out. Equality is exact floating-point equality, which is only meaningful
    for noiseless synthetic data; the decoder also relies on no subset of the
    nonzeros summing to zero.

    Returns ``(x_hat, T)`` with ``T`` a sorted index array.
    """
    y1 = np.asarray(y1, dtype=float)
    x_hat = np.zeros(phi1.n)
    T = set(range(phi1.n))
    supports = [set(phi1.row_support(i).tolist()) for i in range(phi1.m1)]
    i = 0
    while len(T) > m2 and i < phi1.m1:
        if y1[i] == 0:
            T -= supports[i]
        else:
            for k in range(i):
                if y1[k] != y1[i]:
                    continue
                inter = supports[i] & supports[k]
                T -= supports[i] ^ supports[k]
                if len(inter) == 1:
                    (j,) = inter
                    x_hat[j] = y1[i] / phi1.gamma
                    T.discard(j)
        i += 1
    return x_hat, np.array(sorted(T), dtype=np.int64)


def classic_sudocodes_part2(y2, phi2, T):
    """Least-squares solve on the columns ``T`` of ``phi2``; zeros elsewhere."""
    T = np.asarray(T, dtype=np.int64)
    a = phi2.entries if hasattr(phi2, "entries") else np.asarray(phi2)
    x_hat = np.zeros(a.shape[1])
    if T.size == 0:
        return x_hat
    sub = a[:, T]
    sol, _, rank, _ = np.linalg.lstsq(sub, np.asarray(y2, dtype=float), rcond=None)
    if rank < T.size:
        warnings.warn(f"restricted matrix has rank {rank} < {T.size}; "
                      "returning the minimum-norm least-squares solution", RuntimeWarning)
    x_hat[T] = sol
    return x_hat


def classic_sudocodes(y1, phi1, y2, phi2):
    """Both parts; Part 2 sees ``y2`` with the Part-1 recoveries subtracted."""
    a = phi2.entries if hasattr(phi2, "entries") else np.asarray(phi2)
    x1, T = classic_sudocodes_part1(y1, phi1, a.shape[0])
    resid = np.asarray(y2, dtype=float) - a @ x1
    x2 = classic_sudocodes_part2(resid, a, T)
    x1[T] = x2[T]
    return x1, T
