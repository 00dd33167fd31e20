"""Reproducible, splittable random streams for the simulation lab.

Every replication draws from its own counter-based Philox stream whose
128-bit key is derived from the master seed and the replication's integer
path (study id, cell index, replication index).  Streams are therefore
independent of execution order and of how work is distributed over
workers, which makes all Monte Carlo output bit-reproducible at any level
of parallelism.

Normal variates are produced by inverse-CDF transformation of uniforms
rather than by rejection sampling, so a fixed number of counter values is
consumed per draw and results never depend on platform rejection paths.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    """One step of the splitmix64 mixing function (public-domain constants)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def stream_key(seed: int, *path: int) -> int:
    """128-bit Philox key for the sub-stream identified by ``path``.

    The high 64 bits hold the (mixed) master seed, the low 64 bits a hash
    of the path elements, so distinct (seed, path) pairs map to distinct
    streams with overwhelming probability.
    """
    hi = _splitmix64(int(seed) & _MASK64)
    lo = 0
    for part in path:
        lo = _splitmix64(lo ^ _splitmix64(int(part) & _MASK64))
    return (hi << 64) | lo


def generator(seed: int, *path: int) -> np.random.Generator:
    """Independent generator for the sub-stream identified by ``path``."""
    return np.random.Generator(np.random.Philox(key=stream_key(seed, *path)))


def standard_normal(gen: np.random.Generator, size) -> np.ndarray:
    """Standard normal draws via inverse CDF of mid-point uniforms."""
    u = (gen.integers(0, 1 << 53, size=size, dtype=np.uint64) + 0.5) * 2.0**-53
    return ndtri(u)
