"""Deterministic counter-based random number generator.

All randomness in the toolkit flows through :class:`CounterRng` so that any
artifact can be reproduced bit-exactly from its recorded seed, in any
language, without depending on a particular numpy version.

Algorithm (identifier ``splitmix64-boxmuller-v1``):

* raw 64-bit word ``i`` of stream ``seed`` is ``mix64(seed + (i+1) * GOLDEN)``
  where ``GOLDEN = 0x9E3779B97F4A7C15`` and ``mix64`` is the SplitMix64
  finalizer (Steele, Lea & Flood 2014), all arithmetic mod 2**64;
* uniforms take the top 53 bits: ``u = (raw >> 11) * 2**-53`` in ``[0, 1)``;
* normals come from Box-Muller pairs with ``u1`` shifted into ``(0, 1]``;
* bounded integers use ``raw mod n`` (the modulo bias at n << 2**64 is far
  below anything observable here);
* permutations are a Fisher-Yates shuffle driven by those integers.
"""

from __future__ import annotations

import numpy as np

PRNG_ID = "splitmix64-boxmuller-v1"

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64 = np.uint64


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _U64(30))) * _MIX1
    z = (z ^ (z >> _U64(27))) * _MIX2
    return z ^ (z >> _U64(31))


class CounterRng:
    """SplitMix64 in counter mode; every draw advances a 64-bit counter."""

    def __init__(self, seed: int, counter: int = 0):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.counter = int(counter)

    def _raw(self, n: int) -> np.ndarray:
        idx = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        self.counter += n
        with np.errstate(over="ignore"):
            return _mix64(_U64(self.seed) + idx * _GOLDEN)

    def uniform(self, size: int | tuple[int, ...] | None = None) -> np.ndarray | float:
        """Uniform float64 draws in [0, 1)."""
        shape = () if size is None else (size if isinstance(size, tuple) else (size,))
        n = int(np.prod(shape)) if shape else 1
        u = (self._raw(n) >> _U64(11)).astype(np.float64) * 2.0**-53
        return float(u[0]) if size is None else u.reshape(shape)

    def normal(self, size: int | tuple[int, ...] | None = None) -> np.ndarray | float:
        """Standard normal draws via Box-Muller."""
        shape = () if size is None else (size if isinstance(size, tuple) else (size,))
        n = int(np.prod(shape)) if shape else 1
        pairs = (n + 1) // 2
        raw = self._raw(2 * pairs)
        # u1 in (0, 1] keeps the log finite; u2 in [0, 1).
        u1 = ((raw[:pairs] >> _U64(11)).astype(np.float64) + 1.0) * 2.0**-53
        u2 = (raw[pairs:] >> _U64(11)).astype(np.float64) * 2.0**-53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        z = np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]
        return float(z[0]) if size is None else z.reshape(shape)

    def integers(self, n: int, size: int | None = None) -> np.ndarray | int:
        """Integer draws in [0, n)."""
        if n <= 0:
            raise ValueError("n must be positive")
        count = 1 if size is None else size
        vals = (self._raw(count) % _U64(n)).astype(np.int64)
        return int(vals[0]) if size is None else vals

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates permutation of range(n)."""
        perm = np.arange(n)
        if n < 2:
            return perm
        draws = self._raw(n - 1)
        for i in range(n - 1, 0, -1):
            j = int(draws[n - 1 - i] % _U64(i + 1))
            perm[i], perm[j] = perm[j], perm[i]
        return perm
