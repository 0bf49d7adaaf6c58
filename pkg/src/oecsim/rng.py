"""Deterministic named random substreams.

Every stochastic component (corpus generation, onboard detection, ground
detection) draws from its own substream so that two runs of the same
scenario, or two routing-policy variants sharing a seed, see identical
randomness per tile regardless of evaluation order.
"""
from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _label_key(name: str, label: str | int) -> int:
    digest = hashlib.sha256(f"{name}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


class RngStreams:
    """Counter-based substream factory keyed by (root seed, stream label).

    A substream is a Philox generator keyed with the 128-bit value
    ``(root_seed << 64) | sha256("name:label")[:8]``, so every stream is
    reproducible from the triple (seed, name, label) alone and independent
    of how many other streams were drawn before it.
    """

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError("seed must be non-negative")
        self.seed = int(seed)

    def substream(self, name: str, label: str | int = 0) -> np.random.Generator:
        key = ((self.seed & _MASK64) << 64) | _label_key(name, label)
        return np.random.Generator(np.random.Philox(key=key))


def derive_seed(base_seed: int, name: str, index: int) -> int:
    """Child seed for independent runs, e.g. one per sweep value."""
    digest = hashlib.sha256(f"{name}:{index}:{base_seed}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")
