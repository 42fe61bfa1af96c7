"""SplitMix64 random numbers, vectorized with numpy.

The stream is fully specified so that other implementations can reproduce
the randomized verification cases:

* output i (i = 1, 2, ...) is ``mix(seed + i * 0x9E3779B97F4A7C15 mod 2**64)``
  with the standard SplitMix64 finalizer;
* uniform doubles are ``(u >> 11) * 2**-53``;
* standard normals use Box-Muller on consecutive pairs of uniforms
  ``(u1, u2)``: ``sqrt(-2 ln(1 - u1)) * cos(2 pi u2)``;
* complex normals are ``(x + i y) / sqrt(2)`` with x, y consecutive normals.
"""

from __future__ import annotations

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    def __init__(self, seed: int = 0):
        self.seed = int(seed) & _MASK
        self.counter = 0

    def next_u64(self, n: int) -> np.ndarray:
        i = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        self.counter += n
        with np.errstate(over="ignore"):
            return _mix(np.uint64(self.seed) + i * _GAMMA)

    def random(self, shape=()) -> np.ndarray:
        n = int(np.prod(shape, dtype=int))
        u = (self.next_u64(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return u.reshape(shape)

    def normal(self, shape=()) -> np.ndarray:
        n = int(np.prod(shape, dtype=int))
        u = self.random((n, 2))
        z = np.sqrt(-2.0 * np.log1p(-u[:, 0])) * np.cos(2 * np.pi * u[:, 1])
        return z.reshape(shape)

    def complex_normal(self, shape=()) -> np.ndarray:
        n = int(np.prod(shape, dtype=int))
        z = self.normal((n, 2))
        return ((z[:, 0] + 1j * z[:, 1]) / np.sqrt(2)).reshape(shape)

    def integers(self, low: int, high: int, shape=()) -> np.ndarray:
        return (low + np.floor(self.random(shape) * (high - low))).astype(int)

    def permutation(self, n: int) -> np.ndarray:
        return np.argsort(self.random(n), kind="stable")

    def hermitian(self, d: int) -> np.ndarray:
        g = self.complex_normal((d, d))
        return (g + g.conj().T) / 2

    def unitary(self, d: int) -> np.ndarray:
        """Haar-random unitary (QR of a complex Gaussian matrix, phases fixed)."""
        q, r = np.linalg.qr(self.complex_normal((d, d)))
        ph = np.diag(r) / np.abs(np.diag(r))
        return q * ph
