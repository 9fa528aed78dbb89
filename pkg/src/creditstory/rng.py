"""Named random substreams derived from one master seed."""

import hashlib

import numpy as np


def _name_key(name: str) -> int:
    return int.from_bytes(hashlib.sha256(name.encode()).digest()[:4], "big")


def substream(seed: int, name: str, *keys: int) -> np.random.Generator:
    """Independent generator for (seed, name, *keys); stable across runs and platforms."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), _name_key(name), *map(int, keys)])))
