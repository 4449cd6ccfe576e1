"""One Monte-Carlo trial of the two-part AMP decoder, plus timing helpers."""
import contextlib
import statistics
import timeit
from dataclasses import dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from ..amp import run_amp
from ..measure import DenseMatrix, NoiseModel, gen_phi1, gen_phi2, measure_linear
from ..model import SignalModel, sample_signal
from ..part1 import identify_zeros, small_measurement_set
from .._rng import make_rng
from ..theory.analysis import Part1Params
from .metrics import sdr_ratio


def timed(fn, repeats=3, warmup=1, min_time=0.05):
    """``(result, seconds per call)``: ``warmup`` discarded calls, then the median of ``repeats``.

    Calls shorter than ``min_time`` are looped (``timeit`` style) so each
    repeat spans at least ``min_time`` seconds.
    """
    result = None
    for _ in range(warmup):
        result = fn()
    timer = timeit.Timer(fn)
    number = 1
    while True:
        t = timer.timeit(number)
        if t >= min_time:
            break
        number *= 2 if t <= 0 else max(2, min(10, int(min_time / t) + 1))
    times = [t / number] + [timer.timeit(number) / number for _ in range(repeats - 1)]
    if warmup == 0:
        result = fn()
    return result, statistics.median(times)


@contextlib.contextmanager
def sequential_blas():
    """Pin BLAS to one thread so timings are not skewed by contention."""
    with threadpool_limits(limits=1):
        yield


@dataclass(frozen=True)
class SudoAmpSetup:
    n: int
    s: float
    sigma_z2: float
    m1: int
    m2: int
    d: float
    eps: float
    c: int
    t_max: int = 20

    def part1_params(self):
        return Part1Params(self.n, self.m1, self.s, self.d, self.eps, self.c, self.sigma_z2)


def sudo_amp_trial(setup, seed, denoisers, time_it=False, trace=False):
    """Run Part 1 once and Part 2 once per denoiser on the same instance.

    ``denoisers`` maps a label to a :class:`~sudocs.amp.DenoiserSpec`. Only the
    columns of the dense matrix indexed by the survivors or the true support
    are generated. Returns a dict with the Part-1 outcome and, per label, the
    SDR ratio, the AMP trace (``trace=True``) and the Part-2 time
    (``time_it=True``; median of three after a warm-up, like Part 1).
    """
    return sudo_amp_prefix_trials(setup, [setup.m2], seed, denoisers, time_it, trace)[0]


def sudo_amp_prefix_trials(setup, m2_values, seed, denoisers, time_it=False, trace=False):
    """:func:`sudo_amp_trial` at several Part-2 sizes on one instance.

    ``setup.m2`` is ignored. The signal, Part 1 and the noise stream are
    shared, and each size uses the leading rows of one tall matrix, exactly
    as independent calls with the same seed would. One dict per entry of
    ``m2_values``.
    """
    n = setup.n
    x = sample_signal(SignalModel(s=setup.s), n, seed).values
    noise = NoiseModel(setup.sigma_z2)
    base = {"seed": seed}
    if setup.m1 > 0:
        phi1 = gen_phi1(setup.m1, n, setup.s, setup.d, seed=seed)
        y1 = measure_linear(phi1, x, noise, seed, "z1")

        def part1():
            return identify_zeros(phi1, small_measurement_set(y1, setup.eps), setup.c)

        if time_it:
            res, base["t1"] = timed(part1)
        else:
            res = part1()
        res = identify_zeros(phi1, res.omega_y, setup.c, x)
        T = res.T
        base.update(p_md_emp=res.p_md_emp, p_fa_emp=res.p_fa_emp,
                    fa_energy=float(np.sum(x[res.fa_set] ** 2)))
    else:
        T = np.arange(n)
        base.update(p_md_emp=1.0, p_fa_emp=0.0, fa_energy=0.0, t1=0.0)
    base.update(n_T=int(T.size), k_T=int(np.count_nonzero(x[T])))
    supp = np.flatnonzero(x)
    cols = np.union1d(T, supp)
    m_max = max(m2_values)
    tall = gen_phi2(m_max, n, seed=seed, columns=cols)
    u = tall.entries[:, np.searchsorted(cols, supp)] @ x[supp]
    if setup.sigma_z2 > 0:
        u = u + np.sqrt(setup.sigma_z2) * make_rng(seed, "z2").standard_normal(m_max)
    pos_T = np.searchsorted(cols, T)
    x_T = x[T]
    outs = []
    for m2 in m2_values:
        out = dict(base, m2=m2)
        y2 = u[:m2]
        sub = DenseMatrix(m2, n, np.asfortranarray(tall.entries[:m2, pos_T]), tall.convention, T)
        for label, spec in denoisers.items():
            rows = [] if trace else None
            if T.size == 0:
                xT_hat = np.zeros(0)
            else:
                xT_hat = run_amp(y2, sub, spec, setup.t_max, x_true=x_T, trace=rows)
                if time_it:
                    _, out[f"t2_{label}"] = timed(lambda: run_amp(y2, sub, spec, setup.t_max))
            x_hat = np.zeros(n)
            x_hat[T] = xT_hat
            out[f"ratio_{label}"] = sdr_ratio(x, x_hat)
            if trace:
                out[f"trace_{label}"] = rows
        outs.append(out)
    return outs
