"""Counter-based random streams.

Every random quantity is addressed by a Philox key ``(seed, domain | index)``
and a counter, so any worker can regenerate any stream without touching its
neighbours and results never depend on scheduling.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator, Philox

MASK64 = (1 << 64) - 1
_DOMAIN_SHIFT = 56

DOMAIN_PRIMES = 0
DOMAIN_WALKS = 1
DOMAIN_BOOTSTRAP = 2


def _key(seed: int, domain: int, index: int) -> list[int]:
    if not 0 <= index < 1 << _DOMAIN_SHIFT:
        raise ValueError("stream index out of range")
    return [int(seed) & MASK64, (domain << _DOMAIN_SHIFT) | index]


def uniforms(seed: int, stream: int, start: int, count: int, domain: int = DOMAIN_PRIMES) -> np.ndarray:
    """Doubles in [0, 1) at counter positions start .. start + count - 1."""
    block, lane = divmod(start, 4)
    bg = Philox(key=_key(seed, domain, stream), counter=[block, 0, 0, 0])
    raw = bg.random_raw(lane + count)[lane:]
    return (raw >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def generator(seed: int, domain: int, index: int = 0) -> Generator:
    return Generator(Philox(key=_key(seed, domain, index)))
