"""Seeded, splittable random streams.

Every random draw in the package goes through :func:`make_rng`, which maps an
integer seed plus a tuple of stream labels onto an independent Philox
(counter-based) generator. Two calls with the same arguments return generators
producing bit-identical output.
"""
import zlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _label_key(label):
    if isinstance(label, (int, np.integer)):
        return int(label) & 0xFFFFFFFF
    return zlib.crc32(str(label).encode())


def seed_sequence(seed, *labels):
    return np.random.SeedSequence(int(seed) & _MASK64,
                                  spawn_key=tuple(_label_key(l) for l in labels))


def philox_key(seed, *labels):
    return seed_sequence(seed, *labels).generate_state(2, np.uint64)


def make_rng(seed, *labels):
    """Generator for the stream (seed, *labels)."""
    return np.random.Generator(np.random.Philox(key=philox_key(seed, *labels)))


def column_rng(key, j):
    """Generator for column ``j`` of a lazily generated dense matrix.

    The column index goes into the second counter word, so column streams are
    disjoint and any column can be regenerated without touching the others.
    """
    return np.random.Generator(np.random.Philox(key=key, counter=[0, int(j), 0, 0]))
