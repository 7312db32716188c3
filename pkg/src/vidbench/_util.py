"""Seeding, summation, and worker-pool helpers shared across modules."""

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def stable_seed(*parts) -> int:
    """Derive a 63-bit integer seed from the given parts.

    Platform- and run-independent (sha256 of the joined string forms), so any
    derived generator is reproducible regardless of process, worker count, or
    iteration order.
    """
    text = "|".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") & ((1 << 63) - 1)


def generator_from(*parts) -> np.random.Generator:
    """A PCG64 generator seeded from stable_seed(*parts)."""
    return np.random.default_rng(stable_seed(*parts))


def exact_mean(values) -> float:
    """Order-independent mean via compensated summation (math.fsum)."""
    vals = [float(v) for v in values]
    if not vals:
        raise ValueError("mean of empty sequence")
    return math.fsum(vals) / len(vals)


def parallel_map(fn, items, workers: int = 1) -> list:
    """Map preserving input order; output is identical for any worker count."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()
