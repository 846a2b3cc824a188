# utils/random_streams.py
"""Seeded counter-based random streams.

Every consumer derives its own Philox stream from (seed, *stream), so results
do not depend on call order or on which worker runs a trial.
"""
from fractions import Fraction

import numpy as np

try:
    from config import VALUE_DECIMALS
except ImportError:
    VALUE_DECIMALS = 4

_SEED_LIMIT = 2 ** 64


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    if not 0 <= int(seed) < _SEED_LIMIT:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    words = [int(seed)] + [int(s) for s in stream]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))


def child_seed(seed: int, *stream: int) -> int:
    """A 64-bit seed for a sub-task, stable under (seed, stream)."""
    words = np.random.SeedSequence([int(seed)] + [int(s) for s in stream]).generate_state(2, dtype=np.uint32)
    return (int(words[0]) << 32) | int(words[1])


def quantize(x: float, decimals: int = VALUE_DECIMALS) -> Fraction:
    """Round a float draw onto the decimal grid and make it exact."""
    scale = 10 ** decimals
    return Fraction(int(round(float(x) * scale)), scale)
