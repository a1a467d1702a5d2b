"""Seed handling and per-draw stream splitting.

Every Monte-Carlo draw gets its own generator derived from
``(master_seed, draw_index)`` through :class:`numpy.random.SeedSequence`
with ``spawn_key=(draw_index,)``. This is the same derivation that
``SeedSequence.spawn`` uses, so a draw's stream does not depend on how many
other draws were generated before it or in which order.
"""

import numpy as np

from levyconv.errors import InvalidInputError

SEED_BITS = 64


def check_seed(seed):
    """Validate a 64-bit master seed and return it as ``int``."""
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, (int, np.integer)):
        raise InvalidInputError(f"seed must be an integer, got {seed!r}")
    seed = int(seed)
    if not 0 <= seed < 2**SEED_BITS:
        raise InvalidInputError(f"seed must be in [0, 2**64), got {seed}")
    return seed


def stream(master_seed, index):
    """Generator for draw ``index`` under ``master_seed``."""
    master_seed = check_seed(master_seed)
    if int(index) < 0:
        raise InvalidInputError(f"draw index must be nonnegative, got {index}")
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(int(index),))
    return np.random.Generator(np.random.PCG64(ss))


def as_generator(seed):
    """Accept an integer seed or an existing generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(check_seed(seed)))
