"""Counter-based random streams.

Every randomized operation in hofa draws from a Philox4x64-10 generator
(numpy's ``Philox`` bit generator) keyed by the 128-bit integer
``seed + (stream << 64)``, where ``stream`` is the task index.  Philox is a
pure function of (key, counter), so the stream for task ``i`` does not
depend on how many workers ran or in which order, and any language with a
Philox4x64-10 implementation reproduces it bit for bit.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def make_rng(seed=0, stream=0):
    """Return a ``numpy.random.Generator`` for task ``stream`` under ``seed``."""
    if isinstance(seed, np.random.Generator):
        return seed
    seed = int(seed) & _MASK64
    stream = int(stream) & _MASK64
    return np.random.Generator(np.random.Philox(key=seed | (stream << 64)))


def spawn(rng, n):
    """Derive ``n`` independent child generators from ``rng``.

    The children are keyed by words drawn from ``rng``, so the result is a
    deterministic function of the parent state.
    """
    words = rng.integers(0, 2**63, size=(n, 2), dtype=np.int64)
    return [
        np.random.Generator(np.random.Philox(key=int(a) | (int(b) << 64)))
        for a, b in words
    ]
