"""Addressable random streams.

Every random quantity in a simulation is drawn from a Philox generator
(counter based) whose key is derived from the experiment seed plus an
integer address such as ``(batch, component, user)``.  Streams with
different addresses are independent, and a stream never depends on how many
other streams were consumed before it.
"""

from __future__ import annotations

import os

import numpy as np

# stream components
DATA = 0
SCRAMBLING = 1
FADING = 2
NOISE = 3
INTERFERER_DATA = 4

SEED_ENV_VAR = "CDMALINK_SEED"
DEFAULT_SEED = 20010501


def stream(seed: int, *address: int) -> np.random.Generator:
    """Generator for the stream at ``address`` under ``seed``."""
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(int(a) for a in address))
    return np.random.Generator(np.random.Philox(ss))


def default_seed() -> int:
    """Seed from the environment override, else the package default."""
    value = os.environ.get(SEED_ENV_VAR)
    return int(value, 0) if value else DEFAULT_SEED


def random_bits(rng: np.random.Generator, shape) -> np.ndarray:
    """Uniform 0/1 bits as uint8."""
    shape = (shape,) if np.isscalar(shape) else tuple(shape)
    count = int(np.prod(shape))
    packed = np.frombuffer(rng.bytes((count + 7) // 8), dtype=np.uint8)
    return np.unpackbits(packed, count=count).reshape(shape)
