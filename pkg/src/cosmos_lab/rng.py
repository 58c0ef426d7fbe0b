"""Portable SplitMix64 random stream.

The generator is counter based: the k-th output (k = 1, 2, ...) of a stream
seeded with ``s`` is ``mix(s + k * GOLDEN)`` where, all modulo 2**64::

    GOLDEN = 0x9E3779B97F4A7C15
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z =  z ^ (z >> 31)

Uniform doubles take the top 53 bits: ``(z >> 11) * 2**-53`` in [0, 1).
Gaussians use Box-Muller on consecutive pairs (u1, u2)::

    rho = sqrt(-2 ln(1 - u1));  z0 = rho cos(2 pi u2);  z1 = rho sin(2 pi u2)

and are emitted in the order z0, z1, z0', z1', ... so any other language can
reproduce the streams bit for bit (up to libm differences in log/cos/sin).
"""
from __future__ import annotations

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
    return z ^ (z >> np.uint64(31))


def derive_seed(seed: int, *tags: int) -> int:
    """Derive an independent child seed from ``seed`` and integer tags."""
    state = int(seed) & _MASK
    for tag in tags:
        z = np.array([(state ^ ((int(tag) + 1) * MIX1)) & _MASK], dtype=np.uint64)
        state = int(_mix(z + np.uint64(GOLDEN))[0])
    return state


class Rng:
    """Stateful SplitMix64 stream. Identical seeds give identical streams."""

    def __init__(self, seed: int = 0):
        self.seed = int(seed) & _MASK
        self._counter = 0

    def next_u64(self, k: int) -> np.ndarray:
        idx = np.arange(self._counter + 1, self._counter + k + 1, dtype=np.uint64)
        self._counter += k
        z = np.uint64(self.seed) + idx * np.uint64(GOLDEN)
        return _mix(z)

    def uniform(self, size=None) -> np.ndarray:
        shape = () if size is None else size
        k = int(np.prod(shape, dtype=np.int64))
        u = (self.next_u64(k) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return u.reshape(shape)

    def normal(self, size=None) -> np.ndarray:
        shape = () if size is None else size
        k = int(np.prod(shape, dtype=np.int64))
        pairs = (k + 1) // 2
        u = self.uniform(2 * pairs).reshape(pairs, 2)
        rho = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
        theta = 2.0 * np.pi * u[:, 1]
        z = np.empty((pairs, 2))
        z[:, 0] = rho * np.cos(theta)
        z[:, 1] = rho * np.sin(theta)
        return z.reshape(-1)[:k].reshape(shape)

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates shuffle of ``range(n)``."""
        perm = np.arange(n)
        u = self.uniform(max(n - 1, 0))
        for j, i in enumerate(range(n - 1, 0, -1)):
            k = int(u[j] * (i + 1))
            perm[i], perm[k] = perm[k], perm[i]
        return perm
