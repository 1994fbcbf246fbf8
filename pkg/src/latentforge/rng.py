"""Deterministic derivation of independent RNG streams from one root seed.

Campaigns need one stream per (group, chain) so that serial and parallel
execution, and interrupted-then-resumed runs, draw identical numbers. Streams
are derived by hashing the root seed with a path of labels and indices using
the splitmix64 finalizer, which is well mixed and cheap.
"""

from __future__ import annotations

from typing import Union

import numpy as np

__all__ = ["derive_seed", "stream"]

_MASK = (1 << 64) - 1


def _splitmix64_next(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


def derive_seed(root: int, *path: Union[int, str]) -> int:
    """Derive a 64-bit seed from a root seed and a label path.

    Distinct paths give independent-looking seeds; the same path always gives
    the same seed. String path elements are folded in bytewise so that e.g.
    ("African", 3) and ("Asian", 3) diverge completely.
    """
    state = root & _MASK
    state, acc = _splitmix64_next(state)
    for part in path:
        if isinstance(part, str):
            for b in part.encode("utf-8"):
                state, out = _splitmix64_next((state ^ b) & _MASK)
                acc ^= out
            state, out = _splitmix64_next((state ^ 0xFF) & _MASK)
            acc ^= out
        else:
            state, out = _splitmix64_next((state ^ (part & _MASK)) & _MASK)
            acc ^= out
    return acc


def stream(root: int, *path: Union[int, str]) -> np.random.Generator:
    """A fresh PCG64 generator seeded for the given derivation path."""
    return np.random.Generator(np.random.PCG64(derive_seed(root, *path)))
