"""Sparse recovery with a fast zero-identification stage ahead of AMP or BIHT.

Part 1 measures the signal with a sparse Bernoulli matrix and declares a
coefficient zero when it touches ``c`` or more small-magnitude measurements.
Part 2 reconstructs the survivors from dense Gaussian (or 1-bit) measurements.
The :mod:`sudocs.theory` subpackage predicts error rates, state evolution,
SDR and runtime; :mod:`sudocs.harness` runs the Monte-Carlo experiments.
"""
from .amp import AmpState, DenoiserKind, DenoiserSpec, PriorTable, amp_iterate, \
    denoise_sparse_gaussian, denoise_true_prior, run_amp
from .biht import BihtConfig, BihtVariant, biht_solve, consistency_check, hard_threshold_topk, \
    run_sudo_biht
from .measure import Convention, DenseMatrix, NoiseModel, SparseBinaryMatrix, gen_phi1, gen_phi2, \
    load_matrix, measure_linear, quantize_magnitude, quantize_sign, save_matrix
from .model import Family, SignalModel, SignalVector, input_snr, noise_variance_for_snr, \
    sample_signal
from .part1 import Part1Result, classic_sudocodes, classic_sudocodes_part1, \
    classic_sudocodes_part2, hit_counts, identify_zeros, small_measurement_set

__version__ = "0.1.0"
