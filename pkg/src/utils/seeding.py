"""
Seed fan-out.

One experiment seed drives every random stream; each stream gets its own
derived seed so adding a consumer never shifts another stream.
"""

import hashlib

from transformers import set_seed


def derive_seed(base_seed: int, stream: str) -> int:
    """Derive a 31-bit seed for a named random stream."""
    digest = hashlib.sha256(f"{base_seed}:{stream}".encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big") & 0x7FFFFFFF


def seed_everything(base_seed: int, stream: str = "global") -> int:
    """Seed python, numpy and torch from a derived seed; returns that seed."""
    seed = derive_seed(base_seed, stream)
    set_seed(seed)
    return seed
