"""Convergence of Dirichlet-restricted groups along ball exhaustions.

For each ball ``B_r`` the propagator of the Dirichlet restriction is applied
to the restriction of ``f`` and extended by zero. The distance to the same
quantity on the largest ball is reported in the ``l^2(m)`` norm. The
largest ball stands in for the infinite graph, so the report is a Cauchy
style diagnostic rather than a distance to a true limit.

Propagation uses :func:`graphfeyn.exact.propagate`, which resolves
deviations far below double-precision rounding of the full vector.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InputError
from .exact import assemble_operator, propagate
from .graph import ElectricPotential, MagneticPotential, WeightedGraph, ball_exhaustion


def embed(f: np.ndarray, W: Sequence[str], ambient: Sequence[str]) -> np.ndarray:
    """Extend a function on ``W`` by zero to ``ambient``."""
    pos = {x: i for i, x in enumerate(ambient)}
    missing = [x for x in W if x not in pos]
    if missing:
        raise InputError(f"W is not contained in the ambient vertex list: {missing[:5]}")
    f = np.asarray(f)
    out = np.zeros(len(ambient), dtype=np.result_type(f, float))
    out[[pos[x] for x in W]] = f
    return out


def project(f: np.ndarray, ambient: Sequence[str], W: Sequence[str]) -> np.ndarray:
    """Restrict a function on ``ambient`` to ``W``."""
    pos = {x: i for i, x in enumerate(ambient)}
    missing = [x for x in W if x not in pos]
    if missing:
        raise InputError(f"W is not contained in the ambient vertex list: {missing[:5]}")
    return np.asarray(f)[[pos[x] for x in W]]


def l2_norm(f: np.ndarray, m: np.ndarray) -> float:
    return float(np.sqrt(np.sum(np.abs(f) ** 2 * m)))


@dataclass(frozen=True)
class ExhaustionReport:
    radii: tuple[int, ...]
    ball_sizes: tuple[int, ...]
    deviations: tuple[float, ...]
    reference: str


def exhaustion_study(
    g: WeightedGraph,
    theta: MagneticPotential,
    v: ElectricPotential,
    f,
    t: float,
    radii: Sequence[int],
    center: str,
    mode: str = "unitary",
    workers: int = 1,
) -> ExhaustionReport:
    """Deviation of ``iota exp(-itL^{(B_r)}) pi f`` from the largest-ball result.

    Args:
        f: array in vertex order of ``g`` or mapping; its support must lie in
            the smallest ball.
        mode: ``"unitary"`` for ``exp(-i t L)``, ``"semigroup"`` for ``exp(-t L)``.
    """
    if mode == "unitary":
        z = -1j * t
    elif mode == "semigroup":
        if t < 0:
            raise InputError("semigroup mode needs t >= 0")
        z = -t
    else:
        raise InputError(f"unknown mode {mode!r}; use 'unitary' or 'semigroup'")
    if not radii:
        raise InputError("need at least one radius")

    if isinstance(f, dict):
        fv = np.zeros(len(g), dtype=complex)
        for k, val in f.items():
            fv[g._idx(k)] = val
    else:
        fv = np.asarray(f, dtype=complex)
    balls = ball_exhaustion(g, center, radii)
    support = {g.vertices[i] for i in np.flatnonzero(fv)}
    if not support <= set(balls[0]):
        raise InputError("support of f must lie inside the smallest ball")

    def evolve(W):
        op = assemble_operator(g, theta, v, W)
        return embed(propagate(op, project(fv, g.vertices, W), z), W, g.vertices)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(evolve, balls))
    else:
        results = [evolve(W) for W in balls]
    ref = results[-1]
    devs = tuple(l2_norm(u - ref, g.m) for u in results)
    return ExhaustionReport(
        tuple(int(r) for r in radii),
        tuple(len(W) for W in balls),
        devs,
        f"largest ball: radius {radii[-1]} around {center} ({len(balls[-1])} vertices)",
    )
