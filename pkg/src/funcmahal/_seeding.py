import numpy as np


def seed_sequence(seed) -> np.random.SeedSequence:
    """Accept an int (or int sequence) or an existing SeedSequence."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def substreams(seed, count: int) -> list:
    return seed_sequence(seed).spawn(count)
