"""Deterministic, named random streams.

Every source of randomness in the package is a ``numpy.random.Generator``
derived from an integer seed plus a small namespace tag, so that results
are reproducible bit for bit regardless of evaluation order or worker
count.
"""

import numpy as np

# Stream namespace tags.  Values are part of the reproducibility contract:
# changing them changes every seeded result.
DATA = 0
TREES = 1
SUBSETS = 2
COV_PAIRS = 3
GAUSS_SUP = 4
FOREST = 5
PSI = 6


def ensure_rng(seed_or_rng) -> np.random.Generator:
    """Accept either a Generator or an integer seed."""
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def stream(seed: int, *path: int) -> np.random.Generator:
    """Generator for the named substream ``(seed, *path)``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, path)]))
