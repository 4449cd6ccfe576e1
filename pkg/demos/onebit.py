"""1-bit recovery: BIHT alone versus BIHT after zero identification.

Run: python demos/onebit.py [--n 2000] [--trials 5]

Part 1 uses magnitude-quantized measurements (|u| <= eps becomes -1). BIHT
then works on the survivors only, with the remaining sign measurements. Both
solvers are told the true sparsity K.
"""
import argparse
import time

import numpy as np

from sudocs.biht import BihtConfig, biht_solve, run_sudo_biht
from sudocs.harness.metrics import aggregate_sdr, sdr_ratio
from sudocs.measure import Convention, NoiseModel, gen_phi1, gen_phi2, measure_linear, \
    quantize_magnitude, quantize_sign
from sudocs.model import SignalModel, sample_signal


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--trials", type=int, default=5)
    args = ap.parse_args()

    n, s, d, R = args.n, 0.005, 0.8, 1.0
    m1 = n // 10
    m = int(R * n)
    sudo, plain, survivors = [], [], []
    t_sudo = t_plain = 0.0
    for seed in range(args.trials):
        x = sample_signal(SignalModel(s=s, unit_norm=True), n, seed).values
        k = max(int(np.count_nonzero(x)), 1)
        phi1 = gen_phi1(m1, n, s, d, Convention.ONE, seed=seed)
        y1 = quantize_magnitude(measure_linear(phi1, x, NoiseModel(0.0), seed, "z1"), 0.0)
        a = gen_phi2(m, n, Convention.ONE, seed=seed).entries
        signs = quantize_sign(a @ x)
        cfg = BihtConfig("l1", k, 100, None, True)
        t0 = time.perf_counter()
        res = run_sudo_biht(y1, phi1, signs[:m - m1], np.ascontiguousarray(a[:m - m1]), 1, cfg,
                            x_true=x)
        t_sudo += time.perf_counter() - t0
        sudo.append(sdr_ratio(x, res.x))
        survivors.append(res.part1.T.size)
        t0 = time.perf_counter()
        base = biht_solve(signs, a, cfg)
        t_plain += time.perf_counter() - t0
        plain.append(sdr_ratio(x, base.x))
    print(f"N={n}, noiseless, R={R}, M1={m1}, c=1, eps=0")
    print(f"mean survivors after Part 1: {np.mean(survivors):.0f} of {n}")
    print(f"BIHT        {aggregate_sdr(plain):7.2f} dB  {t_plain / args.trials * 1e3:8.1f} ms per signal")
    print(f"Sudo-BIHT   {aggregate_sdr(sudo):7.2f} dB  {t_sudo / args.trials * 1e3:8.1f} ms per signal")


if __name__ == "__main__":
    main()
