"""Zero identification on a few signals, next to its closed-form prediction.

Run: python demos/zero_identification.py [--n 8000] [--trials 10]

A sparse Part-1 matrix measures the signal. Coefficients touched by at least
``c`` near-zero measurements are declared zero. The empirical miss and
false-alarm rates are printed beside the predictions, along with the size of
the problem that is left for Part 2.
"""
import argparse

import numpy as np

from sudocs.measure import NoiseModel, gen_phi1, measure_linear
from sudocs.model import SignalModel, noise_variance_for_snr, sample_signal
from sudocs.part1 import identify_zeros, small_measurement_set
from sudocs.theory.analysis import Part1Params
from sudocs.theory.se import summarize_part1


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=8000)
    ap.add_argument("--trials", type=int, default=10)
    args = ap.parse_args()

    n, s, d, eps, c = args.n, 0.01, 0.5, 0.02, 2
    m1 = n // 10
    sz2 = noise_variance_for_snr(s, 20.0)
    md, fa, kept = [], [], []
    for seed in range(args.trials):
        x = sample_signal(SignalModel(s=s), n, seed).values
        phi1 = gen_phi1(m1, n, s, d, seed=seed)
        y1 = measure_linear(phi1, x, NoiseModel(sz2), seed, "z1")
        res = identify_zeros(phi1, small_measurement_set(y1, eps), c, x)
        md.append(res.p_md_emp)
        fa.append(res.p_fa_emp)
        kept.append(res.T.size)

    summary = summarize_part1(Part1Params(n, m1, s, d, eps, c, sz2))
    print(f"N={n}, M1={m1}, d={d}, eps={eps}, c={c}, SNR 20 dB, {args.trials} signals")
    print(f"{'':22s}{'simulated':>12s}{'predicted':>12s}")
    print(f"{'zeros left in T':22s}{np.mean(md):12.4f}{summary.p_md:12.4f}")
    print(f"{'nonzeros removed':22s}{np.mean(fa):12.4f}{summary.p_fa:12.4f}")
    print(f"{'survivors':22s}{np.mean(kept):12.1f}{summary.n_tilde:12.1f}")
    print(f"Part 2 faces about {np.mean(kept):.0f} unknowns instead of {n}.")


if __name__ == "__main__":
    main()
