"""Seeded randomness for simulation runs and replica seeding."""

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """SplitMix64 output finalizer; a bijection on 64-bit integers."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_replica_seed(master_seed: int, replica_index: int) -> int:
    """Seed for replica ``replica_index`` of an experiment seeded with ``master_seed``.

    Computes ``splitmix64(master_seed + (replica_index + 1) * 0x9E3779B97F4A7C15)``
    modulo 2**64. The increment is odd and the finalizer is a bijection, so
    distinct indices below 2**64 always map to distinct seeds.
    """
    return splitmix64(master_seed + (replica_index + 1) * _GOLDEN_GAMMA)


class InvalidPopulationError(ValueError):
    pass


PAIR_BLOCK = 4096


class Rng:
    """64-bit seeded generator (PCG64 via numpy) used by every simulation path.

    Interaction pairs are drawn in blocks of ``PAIR_BLOCK``: one vector of
    initiators on [0, n), then one of raw responders on [0, n-1). The
    compiled loop refills the same buffers from ``self.generator``, so the
    Python engine and the kernels consume one shared stream.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & MASK64
        self.generator = np.random.Generator(np.random.PCG64(self.seed))
        self._pairs = {}

    def pair_buffer(self, n: int):
        """``(initiators, responders, pos)`` for population size ``n``; ``pos`` is a 1-element array."""
        buf = self._pairs.get(n)
        if buf is None:
            buf = (
                np.zeros(PAIR_BLOCK, np.int64),
                np.zeros(PAIR_BLOCK, np.int64),
                np.array([PAIR_BLOCK], np.int64),
            )
            self._pairs[n] = buf
        return buf

    def integers(self, high: int) -> int:
        return int(self.generator.integers(0, high))

    def random(self) -> float:
        return float(self.generator.random())

    def draw_pair(self, n: int) -> tuple[int, int]:
        return draw_pair(self, n)

    def __repr__(self):
        return f"Rng(seed={self.seed})"


def draw_pair(rng: Rng, n: int) -> tuple[int, int]:
    """Ordered pair ``(initiator, responder)`` uniform over the n(n-1) pairs.

    ``i`` is uniform on [0, n) and ``j`` uniform on [0, n-1), shifted past ``i``.
    numpy's bounded integer draw is Lemire's method, so there is no modulo bias.
    """
    if n < 2:
        raise InvalidPopulationError(f"population size must be >= 2, got {n}")
    ib, jb, pos = rng.pair_buffer(n)
    p = int(pos[0])
    if p >= PAIR_BLOCK:
        g = rng.generator
        ib[:] = g.integers(0, n, size=PAIR_BLOCK)
        jb[:] = g.integers(0, n - 1, size=PAIR_BLOCK)
        p = 0
    pos[0] = p + 1
    i = int(ib[p])
    j = int(jb[p])
    if j >= i:
        j += 1
    return i, j
