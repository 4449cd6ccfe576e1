"""Reconstruction metrics. Every SDR aggregate in the package goes through here."""
import math

import numpy as np


def sdr_ratio(x, x_hat):
    """``||x||^2 / ||x - x_hat||^2``; ``inf`` for exact recovery."""
    x = np.asarray(x, dtype=float)
    x_hat = np.asarray(x_hat, dtype=float)
    if x.shape != x_hat.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {x_hat.shape}")
    err = float(np.sum((x - x_hat) ** 2))
    if err == 0.0:
        return math.inf
    return float(x @ x) / err


def to_db(ratio):
    if ratio == math.inf:
        return math.inf
    if ratio <= 0:
        return -math.inf
    return 10.0 * math.log10(ratio)


def compute_sdr(x, x_hat):
    """Per-trial SDR in dB; ``inf`` when ``x_hat == x``."""
    return to_db(sdr_ratio(x, x_hat))


def aggregate_sdr(ratios):
    """SDR over trials: the log of the mean per-trial ratio."""
    ratios = np.asarray(list(ratios), dtype=float)
    if ratios.size == 0:
        return math.nan
    return to_db(float(np.mean(ratios)))


def mean_se(values):
    """Mean and its standard error (NaN error for a single value)."""
    v = np.asarray(list(values), dtype=float)
    if v.size == 0:
        return math.nan, math.nan
    se = float(np.std(v, ddof=1) / np.sqrt(v.size)) if v.size > 1 else math.nan
    return float(v.mean()), se
