"""
Counter-based random streams.

A stream is identified by (seed, cell id, block index), so any block of
replications can be regenerated on any worker in any order.
"""
import numpy as np


def block_rng(seed: int, cell_id: int, block_index: int) -> np.random.Generator:
    sequence = np.random.SeedSequence(seed, spawn_key=(cell_id, block_index))
    return np.random.Generator(np.random.Philox(sequence))


def block_sizes(nsim: int, block_size: int) -> list[int]:
    """Split nsim replications into fixed-size blocks; the last one may be short"""
    full, rest = divmod(nsim, block_size)
    return [block_size] * full + ([rest] if rest else [])
