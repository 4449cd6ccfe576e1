"""Measurement ensembles, noisy linear measurement and the 1-bit quantizers.

Two variance conventions are supported:

``ONE_OVER_N``
    Dense entries N(0, 1/N); sparse nonzeros equal ``sqrt(s/d)``.
``ONE``
    Dense entries N(0, 1); sparse nonzeros equal ``sqrt(s N / d)`` (1-bit CS).

In both cases the sparse ensemble has the same expected measurement energy as
the dense one, so the input SNR of the two parts agree.
"""
import enum
import struct
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from ._rng import column_rng, make_rng, philox_key
from .errors import InvalidDensityError, InvalidDimensionError


class Convention(str, enum.Enum):
    ONE_OVER_N = "one_over_n"
    ONE = "one"


@dataclass(frozen=True)
class NoiseModel:
    sigma_z2: float = 0.0

    def __post_init__(self):
        if self.sigma_z2 < 0:
            raise ValueError(f"noise variance must be >= 0, got {self.sigma_z2}")


@dataclass(eq=False)
class SparseBinaryMatrix:
    """Bernoulli matrix with a single nonzero value ``gamma``.

    Supports are held in compressed form in both directions: row ``i`` is
    ``row_indices[row_indptr[i]:row_indptr[i+1]]`` and column ``j`` is
    ``col_indices[col_indptr[j]:col_indptr[j+1]]``.
    """

    m1: int
    n: int
    gamma: float
    row_indptr: np.ndarray
    row_indices: np.ndarray
    col_indptr: np.ndarray
    col_indices: np.ndarray
    convention: Convention = Convention.ONE_OVER_N

    @classmethod
    def from_entries(cls, m1, n, rows, cols, gamma, convention=Convention.ONE_OVER_N):
        """Build from coordinate lists of the nonzero positions."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if rows.size and (rows.min() < 0 or rows.max() >= m1 or cols.min() < 0 or cols.max() >= n):
            raise InvalidDimensionError("support index out of range")
        order = np.lexsort((cols, rows))
        r, c = rows[order], cols[order]
        row_indptr = np.concatenate([[0], np.cumsum(np.bincount(r, minlength=m1))])
        corder = np.lexsort((r, c))
        col_indptr = np.concatenate([[0], np.cumsum(np.bincount(c, minlength=n))])
        return cls(m1, n, float(gamma), row_indptr, c, col_indptr, r[corder], Convention(convention))

    @property
    def nnz(self):
        return int(self.row_indptr[-1])

    def row_support(self, i):
        return self.row_indices[self.row_indptr[i]:self.row_indptr[i + 1]]

    def col_support(self, j):
        return self.col_indices[self.col_indptr[j]:self.col_indptr[j + 1]]

    @property
    def row_supports(self):
        return [self.row_support(i) for i in range(self.m1)]

    @property
    def col_supports(self):
        return [self.col_support(j) for j in range(self.n)]

    @cached_property
    def pattern(self):
        """0/1 pattern as a CSR matrix."""
        data = np.ones(self.nnz, dtype=np.int64)
        return sp.csr_matrix((data, self.row_indices, self.row_indptr), shape=(self.m1, self.n))

    @property
    def shape(self):
        return (self.m1, self.n)

    def matvec(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise InvalidDimensionError(f"expected vector of length {self.n}, got {x.shape}")
        return self.gamma * (self.pattern @ x)

    def to_dense(self):
        return self.gamma * self.pattern.toarray().astype(float)


@dataclass(eq=False)
class DenseMatrix:
    """Gaussian matrix, possibly a column subset of a larger ensemble.

    ``n`` is the column count of the full ensemble (it fixes the entry
    variance under ``ONE_OVER_N``); ``columns`` lists which of those columns
    ``entries`` holds, or is ``None`` when all of them are present.
    """

    m: int
    n: int
    entries: np.ndarray
    convention: Convention = Convention.ONE_OVER_N
    columns: np.ndarray = None

    @property
    def entry_variance(self):
        return 1.0 / self.n if self.convention is Convention.ONE_OVER_N else 1.0

    @property
    def shape(self):
        return self.entries.shape

    def matvec(self, x):
        x = np.asarray(x, dtype=float)
        k = self.entries.shape[1]
        if x.shape == (k,):
            return self.entries @ x
        if self.columns is not None and x.shape == (self.n,):
            return self.entries @ x[self.columns]
        raise InvalidDimensionError(f"expected vector of length {k}, got {x.shape}")

    def restrict(self, cols):
        """Column subset ``cols`` (positions within this matrix)."""
        cols = np.asarray(cols, dtype=np.int64)
        parent = cols if self.columns is None else self.columns[cols]
        return DenseMatrix(self.m, self.n, np.asfortranarray(self.entries[:, cols]),
                           self.convention, parent)


def gen_phi1(m1, n, s, d, convention=Convention.ONE_OVER_N, seed=0):
    """Sparse Bernoulli matrix with ``P(entry != 0) = d / (s n)``."""
    if m1 < 0 or n < 1:
        raise InvalidDimensionError(f"bad dimensions ({m1}, {n})")
    p = d / (s * n)
    if not 0.0 < p <= 1.0:
        raise InvalidDensityError(f"density d/(s n) = {p:.4g} outside (0, 1]")
    convention = Convention(convention)
    gamma = np.sqrt(s / d) if convention is Convention.ONE_OVER_N else np.sqrt(s * n / d)
    total = m1 * n
    if p == 1.0:
        flat = np.arange(total, dtype=np.int64)
    else:
        # i.i.d. Bernoulli entries == a Binomial count of uniformly placed positions
        rng = make_rng(seed, "phi1")
        k = int(rng.binomial(total, p))
        flat = np.sort(rng.choice(total, size=k, replace=False)).astype(np.int64)
    return SparseBinaryMatrix.from_entries(m1, n, flat // n, flat % n, gamma, convention)


def gen_phi2(m2, n, convention=Convention.ONE_OVER_N, seed=0, columns=None):
    """i.i.d. Gaussian matrix, column by column.

    Column ``j`` is drawn from its own counter-based stream, so requesting a
    subset ``columns`` returns exactly those columns of the full matrix for the
    same seed, and the first ``m`` rows of a taller matrix coincide with the
    matrix of height ``m``.
    """
    if m2 < 1 or n < 1:
        raise InvalidDimensionError(f"bad dimensions ({m2}, {n})")
    convention = Convention(convention)
    cols = np.arange(n) if columns is None else np.asarray(columns, dtype=np.int64)
    if cols.size and (cols.min() < 0 or cols.max() >= n):
        raise InvalidDimensionError("column index out of range")
    key = philox_key(seed, "phi2")
    scale = 1.0 / np.sqrt(n) if convention is Convention.ONE_OVER_N else 1.0
    a = np.empty((m2, cols.size), order="F")
    for k, j in enumerate(cols):
        a[:, k] = column_rng(key, j).standard_normal(m2)
    if scale != 1.0:
        a *= scale
    return DenseMatrix(m2, n, a, convention, None if columns is None else cols)


def measure_linear(phi, x, noise=NoiseModel(), seed=0, stream="noise"):
    """``y = Phi x + z`` with ``z`` i.i.d. N(0, sigma_z2).

    ``stream`` labels the noise stream so the two parts of one trial can share
    a seed without sharing noise.
    """
    u = phi.matvec(np.asarray(x, dtype=float))
    if noise.sigma_z2 > 0:
        u = u + np.sqrt(noise.sigma_z2) * make_rng(seed, stream).standard_normal(u.shape[0])
    return u


def quantize_sign(u):
    """-1 where ``u <= 0``, +1 where ``u > 0``."""
    return np.where(np.asarray(u) > 0, 1, -1).astype(np.int8)


def quantize_magnitude(u, eps):
    """Magnitude quantizer: -1 where ``|u| <= eps``, +1 otherwise."""
    if eps < 0:
        raise ValueError("eps must be >= 0")
    return np.where(np.abs(np.asarray(u)) > eps, 1, -1).astype(np.int8)


# -- binary container -------------------------------------------------------
#
# little endian; header = magic, kind (0 sparse / 1 dense), convention
# (0 one_over_n / 1 one), rows, cols, gamma, count.
#   sparse payload: row_indptr u64[rows+1], row_indices u64[count]
#   dense payload:  column ids u64[count] then float64 entries row-major

_MAGIC = b"SUDOMAT1"
_HEADER = struct.Struct("<8sBBQQdQ")
_CONV_CODE = {Convention.ONE_OVER_N: 0, Convention.ONE: 1}
_CODE_CONV = {v: k for k, v in _CONV_CODE.items()}


def save_matrix(path, phi):
    with open(path, "wb") as fh:
        if isinstance(phi, SparseBinaryMatrix):
            fh.write(_HEADER.pack(_MAGIC, 0, _CONV_CODE[phi.convention], phi.m1, phi.n,
                                  phi.gamma, phi.nnz))
            fh.write(phi.row_indptr.astype("<u8").tobytes())
            fh.write(phi.row_indices.astype("<u8").tobytes())
        elif isinstance(phi, DenseMatrix):
            cols = np.arange(phi.n) if phi.columns is None else phi.columns
            fh.write(_HEADER.pack(_MAGIC, 1, _CONV_CODE[phi.convention], phi.m, phi.n,
                                  np.sqrt(phi.entry_variance), cols.size))
            fh.write(cols.astype("<u8").tobytes())
            fh.write(np.ascontiguousarray(phi.entries, dtype="<f8").tobytes())
        else:
            raise TypeError(f"cannot serialize {type(phi).__name__}")


def load_matrix(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, kind, conv, rows, cols, gamma, count = _HEADER.unpack_from(raw, 0)
    if magic != _MAGIC:
        raise ValueError(f"{path}: not a matrix container")
    off = _HEADER.size
    convention = _CODE_CONV[conv]
    if kind == 0:
        indptr = np.frombuffer(raw, "<u8", rows + 1, off).astype(np.int64)
        off += 8 * (rows + 1)
        indices = np.frombuffer(raw, "<u8", count, off).astype(np.int64)
        r = np.repeat(np.arange(rows), np.diff(indptr))
        return SparseBinaryMatrix.from_entries(rows, cols, r, indices, gamma, convention)
    colids = np.frombuffer(raw, "<u8", count, off).astype(np.int64)
    off += 8 * count
    entries = np.frombuffer(raw, "<f8", rows * count, off).reshape(rows, count)
    full = count == cols and np.array_equal(colids, np.arange(cols))
    return DenseMatrix(rows, cols, np.asfortranarray(entries), convention,
                       None if full else colids)
