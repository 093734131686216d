"""Deterministic seed derivation for reproducible, order-independent runs.

Every random draw in an experiment is derived from the master seed plus a
stream tag (and, for per-round generators, the round index) through a
collision-resistant hash. Results therefore never depend on execution
order or worker count.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_seed(master_seed: int, *tags: int | str) -> int:
    """Mix a master seed and a sequence of tags into a fresh 64-bit seed."""
    h = hashlib.blake2b(digest_size=8)
    h.update((int(master_seed) & _MASK64).to_bytes(8, "little"))
    for tag in tags:
        if isinstance(tag, str):
            raw = tag.encode("utf-8")
            h.update(b"s" + len(raw).to_bytes(4, "little") + raw)
        else:
            h.update(b"i" + (int(tag) & _MASK64).to_bytes(8, "little"))
    return int.from_bytes(h.digest(), "little")


def derive_round_seed(master_seed: int, round_index: int, stream_tag: str) -> int:
    """64-bit seed for one round of one named stream."""
    return derive_seed(master_seed, stream_tag, round_index)


def stream_rng(master_seed: int, tag: str) -> np.random.Generator:
    """Generator for a named whole-run stream (drawn as fixed-size arrays)."""
    return np.random.default_rng(derive_seed(master_seed, tag))


def round_rng(master_seed: int, stream_tag: str, round_index: int) -> np.random.Generator:
    """Generator dedicated to a single round of a named stream."""
    return np.random.default_rng(derive_round_seed(master_seed, round_index, stream_tag))
