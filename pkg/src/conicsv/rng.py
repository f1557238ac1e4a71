"""Seeded pseudo-random numbers with a fully documented generator.

Benchmarks and oracles must be reproducible byte for byte across runs and
easy to re-implement elsewhere, so instead of relying on the library RNG of
the day this module fixes a SplitMix64 sequence:

    state   <- (state + 0x9E3779B97F4A7C15) mod 2^64
    z       <- state
    z       <- (z XOR (z >> 30)) * 0xBF58476D1CE4E5B9   mod 2^64
    z       <- (z XOR (z >> 27)) * 0x94D049BB133111EB   mod 2^64
    output  <- z XOR (z >> 31)

Uniform doubles take the top 53 bits of the output, Gaussian samples come
from the Box-Muller transform applied to consecutive pairs of uniforms.
"""

import numpy as np

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_MUL2 = np.uint64(0x94D049BB133111EB)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MUL1
    z = (z ^ (z >> np.uint64(27))) * _MUL2
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    """Counter-based SplitMix64 stream over 64-bit state."""

    def __init__(self, seed: int):
        self._state = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)

    def next_uint64(self, count: int) -> np.ndarray:
        """Return the next `count` raw 64-bit outputs."""
        steps = np.arange(1, count + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            states = self._state + _GAMMA * steps
            out = _mix(states)
            self._state = (self._state + _GAMMA * np.uint64(count)) & _MASK
        return out

    def uniform(self, count: int) -> np.ndarray:
        """Uniform doubles in [0, 1) from the top 53 bits."""
        bits = self.next_uint64(count) >> np.uint64(11)
        return bits.astype(np.float64) * (2.0 ** -53)

    def gaussian(self, count: int) -> np.ndarray:
        """Standard normal samples via Box-Muller on uniform pairs."""
        pairs = (count + 1) // 2
        u = self.uniform(2 * pairs)
        # shift the radial uniform into (0, 1] so the log is finite
        u1 = 1.0 - u[:pairs]
        u2 = u[pairs:]
        r = np.sqrt(-2.0 * np.log(u1))
        ang = 2.0 * np.pi * u2
        out = np.empty(2 * pairs)
        out[0::2] = r * np.cos(ang)
        out[1::2] = r * np.sin(ang)
        return out[:count]

    def gaussian_matrix(self, shape: tuple) -> np.ndarray:
        """Row-major matrix of standard normals."""
        size = int(np.prod(shape))
        return self.gaussian(size).reshape(shape)


def child_seed(seed: int, *keys: int) -> int:
    """Derive a deterministic sub-stream seed from `seed` and integer keys."""
    z = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    with np.errstate(over="ignore"):
        for k in keys:
            z = _mix((z + _GAMMA) ^ np.uint64(int(k) & 0xFFFFFFFFFFFFFFFF))
    return int(z)
