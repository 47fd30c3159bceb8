"""Seed derivation and ordered parallel map.

Every random stream in the package is derived from a master seed plus a
key path, e.g. ``derive_rng(seed, "estimator", 3)`` for replicate 3 of an
estimator. Oracles use the ``"oracle"`` domain so their Monte Carlo error is
independent of the estimators they are compared against.
"""

import os
import zlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def _key(part):
    if isinstance(part, (int, np.integer)):
        return int(part)
    return zlib.crc32(str(part).encode("utf8"))


def derive_seed(seed, *key):
    """Return a ``SeedSequence`` for ``(seed, *key)``.

    String key parts are mapped to integers with CRC32, so the result is
    stable across processes and Python versions.
    """
    if seed is None:
        raise ValueError("a master seed is required")
    return np.random.SeedSequence(int(seed), spawn_key=tuple(_key(k) for k in key))


def derive_rng(seed, *key):
    return np.random.default_rng(derive_seed(seed, *key))


def as_rng(rng):
    """Accept a Generator or an integer seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def n_workers():
    """Worker cap from ``SCATTER_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("SCATTER_THREADS", "1")))
    except ValueError:
        return 1


def ordered_map(func, items):
    """``list(map(func, items))``, optionally threaded.

    Results always come back in input order, so reductions over them are
    identical for any worker count.
    """
    items = list(items)
    workers = min(n_workers(), len(items))
    if workers <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def sub_seed(seed, *key):
    """Integer master seed for a sub-experiment (e.g. one rung of a ladder)."""
    return int(derive_seed(seed, *key).generate_state(1, dtype=np.uint64)[0])
