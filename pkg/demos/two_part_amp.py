"""Zero identification followed by AMP, compared with the state-evolution prediction.

Run: python demos/two_part_amp.py [--n 10000] [--trials 5]

For a few total measurement rates, Part 1 spends M1 measurements on zero
identification and AMP recovers the survivors from the rest. The measured
SDR (mean of per-trial ratios) is printed beside the predicted one.
"""
import argparse

from sudocs.amp import DenoiserKind
from sudocs.harness.metrics import aggregate_sdr
from sudocs.harness.pipeline import SudoAmpSetup, sudo_amp_trial
from sudocs.model import noise_variance_for_snr
from sudocs.theory.se import make_denoiser, predict_sdr, summarize_part1


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10000)
    ap.add_argument("--trials", type=int, default=5)
    args = ap.parse_args()

    n, s = args.n, 0.01
    sz2 = noise_variance_for_snr(s, 10.0)
    m1 = n // 20
    print(f"N={n}, s={s}, SNR 10 dB, M1={m1}")
    print(f"{'R':>5s}{'M2':>7s}{'survivors':>11s}{'measured dB':>13s}{'predicted dB':>14s}")
    for R in (0.3, 0.5, 0.7):
        m2 = int(R * n) - m1
        setup = SudoAmpSetup(n, s, sz2, m1, m2, d=0.4, eps=0.02, c=2)
        p = setup.part1_params()
        summary = summarize_part1(p)
        den = {"sg": make_denoiser(DenoiserKind.SPARSE_GAUSSIAN, p, summary)}
        outs = [sudo_amp_trial(setup, seed, den) for seed in range(args.trials)]
        sdr = aggregate_sdr(o["ratio_sg"] for o in outs)
        pred = predict_sdr(p, m2, summary=summary)
        print(f"{R:5.2f}{m2:7d}{summary.n_tilde:11.0f}{sdr:13.2f}{pred:14.2f}")


if __name__ == "__main__":
    main()
