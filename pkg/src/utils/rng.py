"""Seed splitting so every stochastic step owns an independent stream."""
import hashlib

import numpy as np


def derive_seed(seed: int, name: str, index: int = 0) -> int:
    """Hash (seed, name, index) into a 64-bit unsigned seed."""
    if seed < 0:
        raise ValueError(f"Seed must be non-negative, got {seed}")
    digest = hashlib.sha256(f"{seed}:{name}:{index}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def derive_rng(seed: int, name: str, index: int = 0) -> np.random.Generator:
    """Generator for the stream identified by (seed, name, index)."""
    return np.random.default_rng(derive_seed(seed, name, index))
