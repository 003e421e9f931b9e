"""Seedable, splittable random streams.

Built on numpy's Philox counter-based generator. Independent substreams are
keyed by (seed, stream index), so parallel workers can each own a stream
derived purely from the run seed and their replicate index: same seed, same
index, same draws, regardless of scheduling.
"""

import numpy as np

# stream indices >= 2**32 are reserved for auxiliary streams (e.g. the
# expected-maximum Monte Carlo), keeping them disjoint from replicate streams
AUX_STREAM_BASE = 2**32


def substream(seed: int, index: int = 0) -> np.random.Generator:
    """Independent generator for (seed, index); deterministic across runs."""
    if seed < 0 or index < 0:
        raise ValueError("seed and stream index must be non-negative")
    key = np.array([seed, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
