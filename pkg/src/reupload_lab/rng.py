"""Seeded random streams.

Every consumer asks for a stream by ``(seed, purpose, *keys)``.  Streams are
PCG64 generators built from a ``SeedSequence`` whose spawn key encodes the
purpose, so ``init``, ``data`` and ``shuffle`` draws never overlap and never
depend on how many other streams exist or which worker evaluates them.

Gaussian variates use the Box-Muller transform on top of the stream's uniform
doubles rather than numpy's ziggurat sampler, which keeps the mapping from
uniforms to normals explicit and version-stable.
"""

from __future__ import annotations

import os
import zlib

import numpy as np

SEED_ENV = "REUPLOAD_LAB_SEED"
DEFAULT_SEED = 1

PURPOSES = ("init", "data", "shuffle", "mc", "test", "theta", "aux")


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    return int(raw) if raw not in (None, "") else DEFAULT_SEED


def _purpose_key(purpose: str) -> int:
    if purpose in PURPOSES:
        return PURPOSES.index(purpose)
    return 1000 + zlib.crc32(purpose.encode())


def stream(seed: int, purpose: str, *keys: int) -> np.random.Generator:
    """Independent generator for ``(seed, purpose, *keys)``."""
    if seed < 0:
        raise ValueError("seed must be a non-negative integer")
    ss = np.random.SeedSequence(int(seed), spawn_key=(_purpose_key(purpose), *map(int, keys)))
    return np.random.Generator(np.random.PCG64(ss))


def uniform(gen: np.random.Generator, size, low: float = 0.0, high: float = 1.0) -> np.ndarray:
    return low + (high - low) * gen.random(size)


def normal(gen: np.random.Generator, size, mean=0.0, std=1.0) -> np.ndarray:
    """Box-Muller Gaussian draws.

    Uniform pairs ``(u1, u2)`` with ``u1`` in (0, 1] give
    ``sqrt(-2 ln u1) * (cos(2 pi u2), sin(2 pi u2))``; both outputs are used.
    """
    shape = (size,) if np.isscalar(size) else tuple(size)
    n = int(np.prod(shape))
    m = (n + 1) // 2
    u = gen.random((m, 2))
    u1 = 1.0 - u[:, 0]
    r = np.sqrt(-2.0 * np.log(u1))
    t = 2.0 * np.pi * u[:, 1]
    z = np.empty(2 * m)
    z[0::2] = r * np.cos(t)
    z[1::2] = r * np.sin(t)
    return mean + std * z[:n].reshape(shape)
