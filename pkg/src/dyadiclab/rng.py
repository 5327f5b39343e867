"""Seeded, splittable random number generation.

Every stochastic routine derives its own counter-based Philox substream
keyed by (seed, *labels), so results are reproducible across runs and
independent of evaluation order or thread count.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK = (1 << 63) - 1


def _label_int(label) -> int:
    if isinstance(label, (int, np.integer)):
        return int(label) & _MASK
    digest = hashlib.blake2s(str(label).encode()).digest()
    return int.from_bytes(digest[:8], "little") & _MASK


def substream(seed: int, *labels) -> np.random.Generator:
    """Generator for the operation identified by `labels` under `seed`."""
    entropy = [int(seed) & _MASK] + [_label_int(lab) for lab in labels]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
