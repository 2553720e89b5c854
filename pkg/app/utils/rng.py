"""
app/utils/rng.py
================
Seeded random streams.

The generator is frozen to PCG64 with numpy's ziggurat ``standard_normal``
so that any CSV written by the experiments is reproducible across
platforms.  Sub-streams (input vs. noise, rollout k, redraw attempt j) are
derived with ``SeedSequence`` so they never overlap.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def make_rng(seed: int) -> np.random.Generator:
    """Return a fresh PCG64 generator for a 64-bit seed."""
    return np.random.Generator(np.random.PCG64(int(seed) & _MASK64))


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministically derive a child 64-bit seed from ``seed`` and ``keys``."""
    seq = np.random.SeedSequence([int(seed) & _MASK64, *[int(k) for k in keys]])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


# Stream identifiers used with derive_seed
STREAM_INPUT = 1
STREAM_NOISE = 2
STREAM_LOOP_NOISE = 3
STREAM_TRIAL = 4
STREAM_INPUT_NOISE = 5
