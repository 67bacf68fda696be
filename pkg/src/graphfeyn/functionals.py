"""Path functionals: line integrals, time integrals, the action and the path weight.

The scalar functions here act on a single :class:`JumpPath` and serve as the
reference for the vectorized accumulation inside the batch sampler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .errors import InputError
from .graph import ElectricPotential, MagneticPotential, WeightedGraph, degree
from .sampler import JumpPath

_I_POWERS = np.array([1, 1j, -1, -1j])


@dataclass(frozen=True)
class PathWeight:
    n_jumps: int
    action: complex
    weight: complex


def _require_finite(path: JumpPath) -> None:
    if path.exploded:
        raise InputError("path functionals are undefined on exploded paths; filter them first")


def line_integral(path: JumpPath, theta: MagneticPotential, g: WeightedGraph | None = None) -> float:
    """Sum of ``theta`` over the traversed edges.

    With ``g`` given, a traversed pair of zero weight makes the whole
    integral 0.
    """
    _require_finite(path)
    total = 0.0
    prev = path.start
    for _, y in path.jumps:
        if g is not None and g.b(prev, y) <= 0:
            return 0.0
        total += theta(prev, y)
        prev = y
    return total


def riemann_integral(path: JumpPath, f: Mapping[str, float] | Callable[[str], float]) -> float:
    """Time integral of a vertex function; the last sojourn ends at the horizon."""
    _require_finite(path)
    value = f.__getitem__ if isinstance(f, Mapping) else f
    return math.fsum(value(x) * (b - a) for x, a, b in path.holding_intervals())


def action(path: JumpPath, g: WeightedGraph, theta: MagneticPotential, v: ElectricPotential) -> complex:
    """``i * int theta(dX) - i * int (v + deg) ds + int deg ds``."""
    deg = lambda x: degree(g, x)  # noqa: E731
    phase = line_integral(path, theta, g) - riemann_integral(path, lambda x: v(x) + deg(x))
    return complex(riemann_integral(path, deg), phase)


def feynman_weight(path: JumpPath, g: WeightedGraph, theta: MagneticPotential, v: ElectricPotential) -> PathWeight:
    """``i^N exp(action)`` for one path, with ``i^N`` taken from ``N mod 4``."""
    a = action(path, g, theta, v)
    w = complex(_I_POWERS[path.n_jumps % 4]) * np.exp(a)
    return PathWeight(path.n_jumps, a, complex(w))


def feynman_weights(n_jumps: np.ndarray, action: np.ndarray) -> np.ndarray:
    """Vectorized ``i^N exp(action)``."""
    return _I_POWERS[np.asarray(n_jumps) % 4] * np.exp(action)
