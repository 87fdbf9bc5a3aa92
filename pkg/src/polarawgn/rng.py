"""Reproducible random streams keyed by (master seed, purpose, indices).

Every consumer of randomness derives its own generator through
``derive_rng``; the derivation is a pure function of the key tuple, so
results never depend on scheduling, chunking, or worker count.
"""

import hashlib

import numpy as np

# purpose tags used across the package
MESSAGE = "message"
FROZEN = "frozen"
NOISE = "noise"
CONSTRUCT_BITS = "construct-bits"
CONSTRUCT_NOISE = "construct-noise"


def _tag_int(purpose: str) -> int:
    digest = hashlib.sha256(purpose.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def derive_rng(master_seed: int, purpose: str, *indices: int) -> np.random.Generator:
    """Independent generator for (master_seed, purpose, *indices)."""
    entropy = [int(master_seed) & 0xFFFFFFFFFFFFFFFF, _tag_int(purpose), *[int(i) for i in indices]]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def derive_seed(master_seed: int, purpose: str, *indices: int) -> int:
    """63-bit integer sub-seed for handing to a nested component."""
    ss = np.random.SeedSequence(
        [int(master_seed) & 0xFFFFFFFFFFFFFFFF, _tag_int(purpose), *[int(i) for i in indices]]
    )
    return int(ss.generate_state(1, np.uint64)[0] >> 1)
