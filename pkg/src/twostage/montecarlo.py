"""Replicate bookkeeping: seed derivation, chunked parallel execution, estimates.

Replicates are cut into fixed-size chunks; chunk ``i`` of stream ``tag`` is
driven by ``SeedSequence(master, spawn_key=(tag, i))``.  The chunking does
not depend on the worker count, so every result is a deterministic function
of the inputs and the master seed.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import stats

CHUNK = 250


def stream_tag(name: str) -> int:
    return zlib.crc32(name.encode())


def chunk_seeds(master: int, tag: str | int, n: int, chunk: int = CHUNK):
    """``(start, stop, SeedSequence)`` for each chunk of ``n`` replicates."""
    key = stream_tag(tag) if isinstance(tag, str) else int(tag)
    out = []
    for i, start in enumerate(range(0, n, chunk)):
        ss = np.random.SeedSequence(int(master), spawn_key=(key, i))
        out.append((start, min(start + chunk, n), ss))
    return out


def sub_seed(master: int, *path: str | int) -> int:
    """A derived 63-bit seed for a named sub-experiment."""
    key = tuple(stream_tag(p) if isinstance(p, str) else int(p) for p in path)
    return int(np.random.SeedSequence(int(master), spawn_key=key).generate_state(1, np.uint64)[0] >> 1)


def run_chunks(fn: Callable, n: int, master: int, tag: str | int, workers: int = 1,
               chunk: int = CHUNK, **kwargs) -> list:
    """Call ``fn(reps, seedseq, **kwargs)`` per chunk; results come back in chunk order."""
    jobs = chunk_seeds(master, tag, n, chunk)
    if workers <= 1 or len(jobs) <= 1:
        return [fn(stop - start, ss, **kwargs) for start, stop, ss in jobs]
    from joblib import Parallel, delayed

    return Parallel(n_jobs=workers)(delayed(fn)(stop - start, ss, **kwargs) for start, stop, ss in jobs)


@dataclass(frozen=True)
class Estimate:
    mean: float
    std_error: float
    replicates: int
    level: float
    ci_low: float
    ci_high: float

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("an estimate needs at least one replicate")
        for name in ("mean", "std_error", "level", "ci_low", "ci_high"):
            object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "replicates", int(self.replicates))

    def excludes(self, value: float) -> bool:
        return value < self.ci_low or value > self.ci_high

    def at_level(self, level: float) -> "Estimate":
        z = stats.norm.ppf(0.5 + level / 2)
        return Estimate(self.mean, self.std_error, self.replicates, level,
                        self.mean - z * self.std_error, self.mean + z * self.std_error)

    def as_dict(self, prefix: str = "") -> dict:
        return {f"{prefix}mean": self.mean, f"{prefix}se": self.std_error,
                f"{prefix}ci_low": self.ci_low, f"{prefix}ci_high": self.ci_high,
                f"{prefix}replicates": self.replicates}


def proportion(successes: int, n: int, level: float = 0.95) -> Estimate:
    """Binomial proportion with the Wald standard error and a Wilson score interval."""
    p = successes / n
    se = math.sqrt(p * (1 - p) / n)
    ci = stats.binomtest(int(successes), int(n)).proportion_ci(level, method="wilson")
    return Estimate(p, se, n, level, min(ci.low, p), max(ci.high, p))


def mean_estimate(values: Sequence[float] | np.ndarray, level: float = 0.95) -> Estimate:
    """Sample mean with a normal-approximation interval."""
    x = np.asarray(values, dtype=np.float64)
    n = x.size
    m = float(x.mean())
    se = float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    z = stats.norm.ppf(0.5 + level / 2)
    return Estimate(m, se, n, level, m - z * se, m + z * se)


def agree(a: float, b: float, sigma: float, k: float = 3.0) -> bool:
    return abs(a - b) <= k * sigma
