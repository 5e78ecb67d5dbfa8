"""Counter-based random streams with stable hierarchical keys.

Every random draw in the package comes from a Philox generator whose key
is derived from a 64-bit root seed plus a tuple of tags (a purpose string,
a path index, bit patterns of time points, ...).  A stream depends only on
its key, never on draw order elsewhere or on the worker count, so any
ensemble is bit-reproducible under any parallel schedule.
"""
from __future__ import annotations

import numpy as np


def encode_tag(tag: object) -> int:
    """Map a tag to a non-negative integer in a platform-independent way."""
    if isinstance(tag, str):
        return int.from_bytes(tag.encode("utf8"), "big")
    if isinstance(tag, (bool, np.bool_)):
        return int(tag)
    if isinstance(tag, (int, np.integer)):
        # negative ints via two's complement so every int has a stable image
        return int(np.int64(tag).view(np.uint64)) if tag < 0 else int(tag)
    if isinstance(tag, (float, np.floating)):
        return int(np.float64(tag).view(np.uint64))
    raise TypeError(f"cannot key a stream on {type(tag).__name__!r}")


def substream(root_seed: int, *tags: object) -> np.random.Generator:
    """Philox generator keyed on (root_seed, *tags)."""
    entropy = [encode_tag(root_seed)] + [encode_tag(t) for t in tags]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
