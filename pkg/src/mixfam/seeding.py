"""Deterministic RNG stream derivation.

Every Monte-Carlo routine in this package owns its randomness through a
``(seed, key...)`` scheme built on numpy's ``SeedSequence``: a master integer
seed plus a tuple of non-negative integer key parts selects one independent
PCG64 stream.  Re-running with the same seed and keys reproduces draws
bit-exactly, and parallel workers get non-overlapping streams by construction
(chunk index is the last key part).
"""

from __future__ import annotations

import hashlib

import numpy as np

# Fixed chunk size for chunked estimators.  Results are combined in chunk
# order, so thread count never changes the output bits.
CHUNK_SIZE = 65536


def spawn_rng(seed: int, *key: int) -> np.random.Generator:
    """Return the PCG64 stream addressed by (seed, key...)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed: int, *key: int) -> int:
    """Derive an independent integer seed from (seed, key...)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1)[0])


def stable_tag(text: str) -> int:
    """Map a label to a stable 31-bit integer key part (sha256 based)."""
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big") & 0x7FFFFFFF


def chunk_sizes(total: int) -> list[int]:
    """Split a sample count into fixed-size chunks (last one may be short)."""
    if total <= 0:
        raise ValueError("sample count must be positive")
    full, rem = divmod(total, CHUNK_SIZE)
    sizes = [CHUNK_SIZE] * full
    if rem:
        sizes.append(rem)
    return sizes
