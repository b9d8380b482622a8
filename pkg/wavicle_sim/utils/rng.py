"""Counter-based random streams.

A stream is addressed by ``(seed, stream_id, counter)``. The seed and stream
id select a Philox key, the counter selects a disjoint block of the Philox
counter space. Two generators built from the same address produce the same
sequence no matter which thread builds them or in what order.
"""

from dataclasses import dataclass

import numpy as np

# Philox counters are four 64-bit words; the generator itself only advances
# the low words, so block indices live in word 2.
_BLOCK_SHIFT = 128
_MAX_SEED = 2**64


@dataclass(frozen=True)
class RngStream:
    """Address of one reproducible random sequence."""

    seed: int
    stream_id: int = 0
    counter: int = 0

    def __post_init__(self):
        if not 0 <= self.seed < _MAX_SEED:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.stream_id < 0 or self.counter < 0:
            raise ValueError("stream_id and counter must be non-negative")

    def key(self) -> np.ndarray:
        """Philox key derived from (seed, stream_id)."""
        sequence = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        return sequence.generate_state(2, dtype=np.uint64)

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream's block."""
        bit_generator = np.random.Philox(key=self.key(), counter=self.counter << _BLOCK_SHIFT)
        return np.random.Generator(bit_generator)
