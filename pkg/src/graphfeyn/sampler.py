"""Minimal continuous-time jump process on a weighted graph.

From vertex ``x`` the walker waits an ``Exp(deg(x))`` holding time and then
jumps to a neighbour ``y`` with probability ``b(x, y) / sum_z b(x, z)``.
Vertices of degree 0 are absorbing. Paths are simulated in vectorized
batches; the batch engine also accumulates line integrals and time
integrals along every path so that estimators never materialize paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import ConsistencyError, InputError
from .graph import WeightedGraph, vertex_set
from .stats import MCEstimate, SamplerConfig, chunk_rng, run_chunks

__all__ = [
    "JumpPath",
    "SamplerConfig",
    "BatchResult",
    "simulate_batch",
    "sample_path",
    "sample_paths",
    "check_path",
    "exit_time",
    "estimate_no_jump_prob",
    "estimate_first_jump_rate",
    "estimate_two_jump_remainder",
]


@dataclass(frozen=True)
class JumpPath:
    """One realization up to ``horizon``.

    ``jumps`` holds ``(time, target)`` pairs in increasing time. An exploded
    path hit the jump cap before the horizon and counts as having infinitely
    many jumps.
    """

    start: str
    jumps: tuple[tuple[float, str], ...]
    horizon: float
    exploded: bool = False

    @property
    def n_jumps(self) -> int:
        return len(self.jumps)

    @property
    def end(self) -> str:
        """Position at the horizon (the last visited vertex)."""
        return self.jumps[-1][1] if self.jumps else self.start

    def visited(self) -> list[str]:
        return [self.start] + [y for _, y in self.jumps]

    def holding_intervals(self) -> list[tuple[str, float, float]]:
        """``(vertex, enter, leave)`` triples; the last one ends at the horizon."""
        times = [0.0] + [s for s, _ in self.jumps] + [self.horizon]
        verts = self.visited()
        return [(verts[k], times[k], times[k + 1]) for k in range(len(verts))]


@dataclass
class BatchResult:
    """Per-path summaries of a simulated batch, indexed by path."""

    end: np.ndarray
    n_jumps: np.ndarray
    exploded: np.ndarray
    exited: np.ndarray
    line: np.ndarray  # (n_potentials, n)
    integrals: np.ndarray  # (n_functions, n)
    paths: list[JumpPath] | None = field(default=None, repr=False)


@lru_cache(maxsize=32)
def _jump_table(g: WeightedGraph) -> np.ndarray:
    # Row x occupies [offsets[x], offsets[x+1]) and holds x + cumulative jump
    # probabilities, with the row end pinned to exactly x + 1.
    offsets, w = g.offsets, g.weights
    cum = np.empty(len(w))
    for x in range(len(g)):
        lo, hi = offsets[x], offsets[x + 1]
        if hi > lo:
            c = np.cumsum(w[lo:hi])
            cum[lo:hi] = x + c / c[-1]
            cum[hi - 1] = x + 1.0
    return cum


def simulate_batch(
    g: WeightedGraph,
    x: str,
    t: float,
    n: int,
    rng: np.random.Generator,
    max_jumps: int,
    *,
    thetas: Sequence[np.ndarray] = (),
    functions: Sequence[np.ndarray] = (),
    inside: Iterable[str] | None = None,
    record: bool = False,
) -> BatchResult:
    """Simulate ``n`` paths from ``x`` on ``[0, t]``.

    Args:
        thetas: arrays aligned with ``g.cols`` (see
            ``MagneticPotential.csr_array``); their line integrals are
            accumulated per path.
        functions: vertex arrays whose time integrals are accumulated.
        inside: optional vertex set ``W``. Paths stop and are flagged
            ``exited`` at the first jump out of ``W`` (or immediately if
            ``x`` is outside).
        record: also return the paths as :class:`JumpPath` objects, each
            checked with :func:`check_path`.
    """
    if g.is_restriction():
        raise InputError("sample on the ambient graph and pass the subset as `inside`")
    start = g._idx(x)
    if t < 0:
        raise InputError("horizon must be nonnegative")
    deg = g.degree_array
    offsets, cols = g.offsets, g.cols
    cum = _jump_table(g)
    TH = np.array(thetas, dtype=float).reshape(len(thetas), len(cols))
    F = np.array(functions, dtype=float).reshape(len(functions), len(g))

    cur = np.full(n, start, dtype=np.int64)
    time = np.zeros(n)
    n_jumps = np.zeros(n, dtype=np.int64)
    line = np.zeros((len(TH), n))
    integ = np.zeros((len(F), n))
    exploded = np.zeros(n, dtype=bool)
    exited = np.zeros(n, dtype=bool)
    mask = None
    if inside is not None:
        mask = np.zeros(len(g), dtype=bool)
        mask[[g.index[y] for y in vertex_set(g, inside)]] = True
        exited[:] = not mask[start]
    log: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []

    active = np.flatnonzero(~exited)
    while active.size:
        c = cur[active]
        e = rng.standard_exponential(active.size)
        with np.errstate(divide="ignore"):
            hold = e / deg[c]
        t_next = time[active] + hold
        stop = t_next >= t

        done = active[stop]
        integ[:, done] += F[:, cur[done]] * (t - time[done])

        go = active[~stop]
        integ[:, go] += F[:, cur[go]] * hold[~stop]
        time[go] = t_next[~stop]
        cg = cur[go]
        pos = np.searchsorted(cum, cg + rng.random(go.size), side="right")
        pos = np.clip(pos, offsets[cg], offsets[cg + 1] - 1)
        target = cols[pos]
        line[:, go] += TH[:, pos]
        cur[go] = target
        n_jumps[go] += 1
        if record:
            log.append((go, time[go].copy(), target))

        if mask is not None:
            out = ~mask[target]
            exited[go[out]] = True
            go = go[~out]
        capped = n_jumps[go] >= max_jumps
        exploded[go[capped]] = True
        active = go[~capped]

    paths = None
    if record:
        jumps: list[list[tuple[float, str]]] = [[] for _ in range(n)]
        for idx, times, targets in log:
            for p, s, y in zip(idx.tolist(), times.tolist(), targets.tolist()):
                jumps[p].append((s, g.vertices[y]))
        paths = [JumpPath(x, tuple(j), float(t), bool(ex)) for j, ex in zip(jumps, exploded)]
        for p in paths:
            check_path(g, p)
    return BatchResult(cur, n_jumps, exploded, exited, line, integ, paths)


def check_path(g: WeightedGraph, path: JumpPath) -> None:
    """Raise ConsistencyError unless times increase strictly within the horizon
    and every jump goes to a neighbour."""
    prev_t, prev_x = 0.0, path.start
    for s, y in path.jumps:
        if not prev_t < s <= path.horizon:
            raise ConsistencyError(f"jump time {s} out of order in path from {path.start}")
        if g.b(prev_x, y) <= 0:
            raise ConsistencyError(f"jump {prev_x}->{y} is not along an edge")
        prev_t, prev_x = s, y


def sample_path(g: WeightedGraph, x: str, t: float, cfg: SamplerConfig, stream: np.random.Generator) -> JumpPath:
    """Draw a single path from ``x`` on ``[0, t]`` using ``stream``."""
    if t <= 0:
        raise InputError("horizon must be positive")
    return simulate_batch(g, x, t, 1, stream, cfg.max_jumps, record=True).paths[0]


def sample_paths(g: WeightedGraph, x: str, t: float, n: int, cfg: SamplerConfig) -> list[JumpPath]:
    """Draw ``n`` paths with the same chunked streams the estimators use."""
    out: list[JumpPath] = []
    for k, lo in enumerate(range(0, n, cfg.chunk_size)):
        size = min(n, lo + cfg.chunk_size) - lo
        res = simulate_batch(g, x, t, size, chunk_rng(cfg.seed, k), cfg.max_jumps, record=True)
        out.extend(res.paths)
    return out


def exit_time(path: JumpPath, W: Iterable[str]) -> float:
    """First time the path is outside ``W``; ``math.inf`` if it stays inside."""
    W = set(W)
    if path.start not in W:
        return 0.0
    for s, y in path.jumps:
        if y not in W:
            return s
    return math.inf


def _prepare(g: WeightedGraph, x: str) -> None:
    g._idx(x)
    if np.any(~np.isfinite(g.m)) or np.any(g.m <= 0):
        raise InputError("invalid graph: nonpositive or nonfinite measure")
    if np.any(~np.isfinite(g.edge_weight)) or np.any(g.edge_weight < 0):
        raise InputError("invalid graph: negative or nonfinite edge weight")


def estimate_no_jump_prob(g: WeightedGraph, x: str, t: float, n: int, cfg: SamplerConfig,
                          workers: int = 1) -> MCEstimate:
    """Fraction of paths with no jump on ``[0, t]``; compare ``exp(-t deg(x))``."""
    _prepare(g, x)

    def chunk(rng, size):
        r = simulate_batch(g, x, t, size, rng, cfg.max_jumps)
        hit = np.flatnonzero(r.n_jumps == 0)
        return np.zeros(hit.size, dtype=np.int64), np.ones(hit.size), int(r.exploded.sum())

    return run_chunks(chunk, n, 1, cfg, workers)[0]


def estimate_first_jump_rate(g: WeightedGraph, x: str, y: str, t_small: float, n: int,
                             cfg: SamplerConfig, workers: int = 1) -> MCEstimate:
    """``P_x(N_t = 1, X_{tau_1} = y) / t``; tends to ``b(x, y) / m(x)``."""
    _prepare(g, x)
    if t_small <= 0:
        raise InputError("t_small must be positive")
    iy = g._idx(y)

    def chunk(rng, size):
        r = simulate_batch(g, x, t_small, size, rng, cfg.max_jumps)
        hit = np.flatnonzero((r.n_jumps == 1) & (r.end == iy))
        return np.zeros(hit.size, dtype=np.int64), np.full(hit.size, 1.0 / t_small), int(r.exploded.sum())

    return run_chunks(chunk, n, 1, cfg, workers)[0]


def estimate_two_jump_remainder(g: WeightedGraph, f, x: str, t_small: float, n: int,
                                cfg: SamplerConfig, workers: int = 1) -> MCEstimate:
    """``E_x[1{2 <= N_t < inf} f(X_t)] / t``; tends to 0 as ``t -> 0``.

    ``f`` is an array in vertex order or a mapping (missing vertices are 0).
    """
    _prepare(g, x)
    if t_small <= 0:
        raise InputError("t_small must be positive")
    if isinstance(f, dict):
        fv = np.zeros(len(g))
        for k, val in f.items():
            fv[g._idx(k)] = val
    else:
        fv = np.asarray(f, dtype=float)

    def chunk(rng, size):
        r = simulate_batch(g, x, t_small, size, rng, cfg.max_jumps)
        hit = np.flatnonzero((r.n_jumps >= 2) & ~r.exploded & (fv[r.end] != 0))
        vals = fv[r.end[hit]] / t_small
        return np.zeros(hit.size, dtype=np.int64), vals, int(r.exploded.sum())

    return run_chunks(chunk, n, 1, cfg, workers)[0]
