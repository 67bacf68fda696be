"""Chunked, schedule-independent Monte Carlo reduction.

Samples are processed in chunks of ``chunk_size``. Chunk ``k`` draws from a
Philox stream keyed by ``(seed, k)``, and per-chunk moments are merged in
chunk order, so an estimate depends only on the seed and chunk size and
never on how many workers ran the chunks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class SamplerConfig:
    """Sampling knobs shared by all estimators.

    ``max_jumps`` caps the number of jumps per path; a path that reaches it
    before the horizon is flagged as exploded and contributes 0.
    """

    max_jumps: int = 10_000
    seed: int = 0
    chunk_size: int = 50_000

    def __post_init__(self):
        if self.max_jumps < 1:
            raise InputError("max_jumps must be >= 1")
        if self.chunk_size < 1:
            raise InputError("chunk_size must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise InputError("seed must be an unsigned 64-bit integer")


def chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    """Independent counter-based stream for one chunk."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(chunk_index),))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class MCEstimate:
    """Complex Monte Carlo mean with componentwise standard errors.

    Discarded (exploded or killed) samples count as zeros in every moment;
    they are never removed from ``n_samples``.
    """

    mean: complex
    stderr_re: float
    stderr_im: float
    n_samples: int
    n_exploded: int = 0

    @property
    def stderr(self) -> float:
        """Conservative combined error ``stderr_re + stderr_im``."""
        return self.stderr_re + self.stderr_im

    def z_score(self, exact: complex) -> float:
        diff = abs(complex(exact) - self.mean)
        if self.stderr == 0.0:
            return 0.0 if diff <= 1e-12 * max(1.0, abs(exact)) else math.inf
        return diff / self.stderr

    def scaled(self, c: float) -> "MCEstimate":
        c = float(c)
        return MCEstimate(self.mean * c, self.stderr_re * abs(c), self.stderr_im * abs(c),
                          self.n_samples, self.n_exploded)

    def conj(self) -> "MCEstimate":
        return MCEstimate(self.mean.conjugate(), self.stderr_re, self.stderr_im,
                          self.n_samples, self.n_exploded)


@dataclass
class _Moments:
    n: int
    mean: np.ndarray  # (2, k): real and imaginary parts
    m2: np.ndarray
    exploded: int

    def merge(self, other: "_Moments") -> "_Moments":
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.n / n)
        m2 = self.m2 + other.m2 + delta**2 * (self.n * other.n / n)
        return _Moments(n, mean, m2, self.exploded + other.exploded)


# Returns (idx, values, n_exploded): values[j] is added to output idx[j];
# samples absent from the lists contribute 0 to every output.
ChunkFn = Callable[[np.random.Generator, int], tuple[np.ndarray, np.ndarray, int]]


def _chunk_moments(idx: np.ndarray, val: np.ndarray, size: int, k: int, exploded: int) -> _Moments:
    idx = np.asarray(idx, dtype=np.int64)
    val = np.asarray(val, dtype=complex)
    count = np.bincount(idx, minlength=k).astype(float)
    mean = np.empty((2, k))
    m2 = np.empty((2, k))
    for c, part in enumerate((val.real, val.imag)):
        mu = np.bincount(idx, weights=part, minlength=k) / size
        dev = np.bincount(idx, weights=(part - mu[idx]) ** 2, minlength=k)
        mean[c] = mu
        m2[c] = dev + (size - count) * mu**2
    return _Moments(size, mean, m2, exploded)


def run_chunks(
    sample_fn: ChunkFn,
    n: int,
    n_outputs: int,
    cfg: SamplerConfig,
    workers: int = 1,
) -> list[MCEstimate]:
    """Draw ``n`` samples in chunks and reduce them to one estimate per output."""
    if n < 1:
        raise InputError("sample count must be >= 1")
    if workers < 1:
        raise InputError("worker count must be >= 1")
    bounds = [(s, min(n, s + cfg.chunk_size)) for s in range(0, n, cfg.chunk_size)]

    def work(k: int) -> _Moments:
        lo, hi = bounds[k]
        idx, val, exploded = sample_fn(chunk_rng(cfg.seed, k), hi - lo)
        return _chunk_moments(idx, val, hi - lo, n_outputs, exploded)

    if workers == 1 or len(bounds) == 1:
        parts = [work(k) for k in range(len(bounds))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, range(len(bounds))))

    total = parts[0]
    for p in parts[1:]:
        total = total.merge(p)
    if total.n > 1:
        se = np.sqrt(total.m2 / (total.n - 1) / total.n)
    else:
        se = np.zeros_like(total.m2)
    return [
        MCEstimate(complex(total.mean[0, j], total.mean[1, j]), float(se[0, j]), float(se[1, j]),
                   total.n, total.exploded)
        for j in range(n_outputs)
    ]
