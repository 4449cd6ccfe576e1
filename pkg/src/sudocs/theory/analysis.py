"""Closed-form analysis of zero identification.

All quantities are for the N(0, 1/N) / ``sqrt(s/d)`` ensembles: a measurement
touching coefficient ``j`` equals ``sqrt(s/d) * (x_j + sum of the other
contributors) + z`` where the number of other nonzero contributors is
Binomial(N-1, d/N).
"""
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, stats
from scipy.special import bdtr, bdtrc, erf

from ..errors import InvalidDensityError
from ..model import Family

POISSON_ABOVE_N = 100_000
_TAIL = 1e-16
_FA_LIMIT = 8.0
# survivor rates below this are quadrature roundoff of an empty survivor set
_EMPTY_RATE = 1e-12


@dataclass(frozen=True)
class Part1Params:
    n: int
    m1: int
    s: float
    d: float
    eps: float
    c: int
    sigma_z2: float = 0.0
    family: Family = Family.SPARSE_GAUSSIAN
    laplace_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if not 0 < self.s < 1:
            raise ValueError("s must lie in (0, 1)")
        if self.d <= 0 or self.d / (self.s * self.n) > 1:
            raise InvalidDensityError(f"d/(s n) = {self.d / (self.s * self.n):.4g} outside (0, 1]")
        if self.eps < 0 or self.sigma_z2 < 0 or self.m1 < 0 or self.c < 1:
            raise ValueError("eps, sigma_z2, m1 must be >= 0 and c >= 1")

    @property
    def gamma2(self):
        return self.s / self.d

    @property
    def row_density(self):
        return self.d / (self.s * self.n)

    def slab_density(self, a):
        a = np.asarray(a, dtype=float)
        if self.family is Family.SPARSE_LAPLACE:
            b = self.laplace_scale
            return np.exp(-np.abs(a) / b) / (2 * b)
        return np.exp(-0.5 * a * a) / np.sqrt(2 * np.pi)

    @property
    def slab_variance(self):
        if self.family is Family.SPARSE_LAPLACE:
            return 2.0 * self.laplace_scale**2
        return 1.0

    @property
    def slab_limit(self):
        if self.family is Family.SPARSE_LAPLACE:
            return 40.0 * self.laplace_scale
        return _FA_LIMIT

    def replace(self, **kw):
        fields = asdict(self)
        fields.update(kw)
        return Part1Params(**fields)


def contributor_weights(p, exact=None):
    """``(counts, weights)`` of the number of other nonzero contributors.

    Exact Binomial(N-1, d/N) for ``N <= 1e5``, Poisson(d) above (``exact``
    forces either); terms beyond the mode that fall below 1e-16 are dropped.
    """
    if exact is None:
        exact = p.n <= POISSON_ABOVE_N
    return _weights(p.n, p.d, bool(exact))


@lru_cache(maxsize=256)
def _weights(n, d, exact):
    if exact:
        dist = stats.binom(n - 1, d / n)
        top = min(n - 1, int(dist.isf(_TAIL)) + 2)
    else:
        dist = stats.poisson(d)
        top = int(dist.isf(_TAIL)) + 2
    k = np.arange(top + 1)
    w = dist.pmf(k)
    mode = int(np.argmax(w))
    keep = (k <= mode) | (w >= _TAIL)
    return k[keep], w[keep]


def _interval_gaussian(lo, hi, var):
    """P(lo <= G <= hi) for G ~ N(0, var); a point mass at 0 when var == 0."""
    if var == 0:
        return ((lo <= 0) & (0 <= hi)).astype(float)
    r = np.sqrt(2.0 * var)
    return 0.5 * (erf(hi / r) - erf(lo / r))


def p_eps_d_gaussian(x, p, exact=None):
    """P(|y_i| <= eps and Phi_ij != 0 | x_j = x), sparse Gaussian input."""
    x = np.asarray(x, dtype=float)
    g = np.sqrt(p.gamma2)
    counts, w = contributor_weights(p, exact)
    lo = -p.eps - g * x
    hi = p.eps - g * x
    total = np.zeros_like(x)
    for k, wk in zip(counts, w):
        total = total + wk * _interval_gaussian(lo, hi, k * p.gamma2 + p.sigma_z2)
    return total * p.row_density


def _laplace_sum_interval(lo, hi, n, p):
    """P(lo <= sqrt(s/d) * (L_1 + ... + L_n) + z <= hi) by Fourier inversion.

    Integrating the inversion formula over ``y`` in closed form leaves
    ``(1/pi) int_0^inf psi(t) (sin(hi t) - sin(lo t)) / t dt`` with
    ``psi(t) = exp(-sigma^2 t^2 / 2) / (1 + (s/d) b^2 t^2)^n``.
    """
    sig2 = p.sigma_z2
    if n == 0:
        return float(_interval_gaussian(np.float64(lo), np.float64(hi), sig2))
    if hi <= lo:
        return 0.0
    c2 = p.gamma2 * p.laplace_scale**2
    tol = 1e-12

    def psi(t):
        return np.exp(-0.5 * sig2 * t * t) / (1.0 + c2 * t * t) ** n

    def integrand(t):
        if t == 0.0:
            return hi - lo
        return psi(t) * (np.sin(hi * t) - np.sin(lo * t)) / t

    # beyond t_rat the rational factor alone keeps psi(t)/t below tol
    t_rat = (1.0 / (tol * c2**n)) ** (1.0 / (2 * n + 1))
    t_gauss = np.inf if sig2 == 0 else np.sqrt(-2.0 * np.log(tol) / sig2)
    t_max = min(t_rat, t_gauss)
    width = max(abs(hi), abs(lo), 1e-3)
    split = min(t_max, 200.0 / width)
    parts = [(0.0, split)]
    if t_max > split:
        parts.append((split, t_max))
    val = 0.0
    for a, b in parts:
        val += integrate.quad(integrand, a, b, limit=2000, epsabs=1e-11, epsrel=1e-10)[0]
    if t_max < t_gauss:
        # oscillatory tail, weight sin(w t) handled by QAWF
        for w, sgn in ((hi, 1.0), (lo, -1.0)):
            if w == 0:
                continue
            tail = integrate.quad(lambda t: psi(t) / t, t_max, np.inf, weight="sin",
                                  wvar=abs(w), epsabs=1e-12)[0]
            val += sgn * np.sign(w) * tail
    return val / np.pi


def p_eps_d_laplace(x, p):
    """As :func:`p_eps_d_gaussian` for sparse Laplace input."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    g = np.sqrt(p.gamma2)
    counts, w = contributor_weights(p)
    out = np.empty_like(xs)
    for i, xv in enumerate(xs):
        lo, hi = -p.eps - g * xv, p.eps - g * xv
        out[i] = sum(wk * _laplace_sum_interval(lo, hi, int(k), p) for k, wk in zip(counts, w))
    out *= p.row_density
    return out.reshape(np.shape(x))


def p_eps_d(x, p):
    if p.family is Family.SPARSE_LAPLACE:
        return p_eps_d_laplace(x, p)
    return p_eps_d_gaussian(x, p)


def p_md(p):
    """P(S_j < c | x_j = 0) with S_j ~ Binomial(M1, P_eps_d(0))."""
    if p.c > p.m1:
        return 1.0
    q = float(p_eps_d(0.0, p))
    return float(bdtr(p.c - 1, p.m1, q))


def p_fa_at(a, p, q=None):
    """P(S_j >= c | x_j = a). ``q`` may pass precomputed P_eps_d(a) values."""
    a = np.asarray(a, dtype=float)
    if p.c > p.m1:
        return np.zeros_like(a)
    q = p_eps_d(a, p) if q is None else q
    return bdtrc(p.c - 1, p.m1, np.clip(q, 0.0, 1.0))


def _slab_integral(f, p, tol=1e-10):
    """``int f(a) * slab(a) da`` for an even integrand ``f``."""
    if p.c > p.m1 or p.eps == 0:
        # eps = 0 leaves no nonzero coefficient inside a zero-width interval
        return 0.0
    g = np.sqrt(p.gamma2)
    # P_FA(a) changes over |a| ~ eps / gamma; give quad that scale
    edge = p.eps / g
    cand = [0.5 * edge, edge, 2 * edge, 4 * edge]
    # with no other contributor the edge at eps/gamma is only noise-wide
    w = np.sqrt(p.sigma_z2) / g
    if w < 0.25 * edge:
        cand += [edge + k * w for k in (-8.0, -2.0, 2.0, 8.0)]
    knots = sorted({min(v, p.slab_limit) for v in cand} - {0.0})
    edges = [0.0] + [k for k in knots if k < p.slab_limit] + [p.slab_limit]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        total += integrate.quad(lambda t: f(t) * float(p.slab_density(t)), a, b,
                                epsabs=tol, epsrel=tol, limit=200)[0]
    return 2.0 * total


def p_fa(p, tol=1e-10):
    """P(S_j >= c | x_j != 0); ``tol`` is the quadrature tolerance."""
    return _slab_integral(lambda a: float(p_fa_at(a, p)), p, tol)


def part2_dims(p, md=None, fa=None):
    """Expected Part-2 length and sparsity ``(n_tilde, s_tilde)``.

    ``s_tilde`` is NaN when everything is identified (``n_tilde == 0``).
    """
    md = p_md(p) if md is None else md
    fa = p_fa(p) if fa is None else fa
    z = (1 - p.s) * md + p.s * (1 - fa)
    if z <= _EMPTY_RATE:
        return 0.0, float("nan")
    return p.n * z, p.s * (1 - fa) / z


def prior_x_T(a, p, md=None, fa=None):
    """Prior of a surviving coefficient: ``(point_mass, density(a))``."""
    md = p_md(p) if md is None else md
    fa = p_fa(p) if fa is None else fa
    z = (1 - p.s) * md + p.s * (1 - fa)
    a = np.asarray(a, dtype=float)
    if z <= _EMPTY_RATE:
        return float("nan"), np.full_like(a, np.nan)
    dens = p.s * (1 - p_fa_at(a, p)) * p.slab_density(a) / z
    return (1 - p.s) * md / z, dens


def fa_noise_power(p):
    """``(E||x_FA||^2, sigma_FA^2)`` where ``sigma_FA^2 = E||x_FA||^2 / N``."""
    energy = p.s * p.n * _slab_integral(lambda a: a * a * float(p_fa_at(a, p)), p)
    return energy, energy / p.n
