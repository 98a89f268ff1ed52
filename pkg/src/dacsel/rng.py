"""Labeled, reproducible random streams.

Every stochastic component of an experiment (environment seeding, policy
initialization, rollout sampling, selection tie-breaking, bootstrap
resampling) draws from its own named stream derived from a single 64-bit
root seed. Streams with distinct labels are statistically independent;
identical (seed, label) pairs always reproduce the same value sequence,
across processes and platforms.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np


def _label_words(label: str) -> list[int]:
    # sha256 so the mixing is stable across Python processes (never hash()).
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]


@dataclass
class RngStream:
    """A named random stream tied to a root seed.

    The underlying generator is created lazily from (root_seed, label) and
    is mutable; treat a stream as single-consumer. Use :meth:`child` to
    fan out independent sub-streams instead of sharing one.
    """

    root_seed: int
    label: str
    _rng: np.random.Generator | None = field(default=None, repr=False, compare=False)

    @property
    def rng(self) -> np.random.Generator:
        if self._rng is None:
            seq = np.random.SeedSequence([self.root_seed & 0xFFFFFFFFFFFFFFFF, *_label_words(self.label)])
            self._rng = np.random.default_rng(seq)
        return self._rng

    def child(self, suffix: str) -> "RngStream":
        """Derive an independent stream labeled ``label/suffix``."""
        return RngStream(self.root_seed, f"{self.label}/{suffix}")

    def seed_int(self) -> int:
        """Draw a fresh 63-bit integer, e.g. to seed an environment episode."""
        return int(self.rng.integers(0, 2**63 - 1))


def derive_rng_stream(root_seed: int, label: str) -> RngStream:
    """Create the stream identified by (root_seed, label).

    Calling twice with identical arguments yields streams that produce
    identical value sequences.
    """
    if not label:
        raise ValueError("stream label must be non-empty")
    return RngStream(int(root_seed), label)
