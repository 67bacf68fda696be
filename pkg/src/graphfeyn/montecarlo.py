"""Monte Carlo path-integral estimators for unitary groups and semigroups.

Every estimator averages a path weight over ``n`` paths of the jump process
started at the source vertex. Exploded paths, and paths killed on leaving a
Dirichlet set, contribute 0 but still count towards ``n``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import InputError
from .exact import assemble_operator, semigroup_kernel_exact, unitary_kernel_exact
from .functionals import feynman_weights
from .graph import (
    ElectricPotential,
    MagneticPotential,
    WeightedGraph,
    require_valid,
    vertex_set,
)
from .sampler import simulate_batch
from .stats import MCEstimate, SamplerConfig, run_chunks

DEFAULT_CONFIG = SamplerConfig()


def _check(g: WeightedGraph, theta: MagneticPotential, v: ElectricPotential, *xs: str) -> None:
    require_valid(g, theta, v)
    if g.is_restriction():
        raise InputError("Monte Carlo estimators need the ambient graph; pass W to mc_dirichlet_kernel")
    for x in xs:
        g._idx(x)


def _path_weights(r, v_int: np.ndarray, kind: str) -> np.ndarray:
    line = r.line[0]
    if kind == "unitary":
        deg_int = r.integrals[1]
        act = deg_int + 1j * (line - v_int - deg_int)
        return feynman_weights(r.n_jumps, act)
    return np.exp(1j * line - v_int)


def _simulate(g, theta, v, x, t, size, rng, cfg, kind, inside=None):
    functions = [v.array(g), g.degree_array] if kind == "unitary" else [v.array(g)]
    r = simulate_batch(
        g, x, t, size, rng, cfg.max_jumps,
        thetas=[theta.csr_array(g)], functions=functions, inside=inside,
    )
    keep = np.flatnonzero(~r.exploded & ~r.exited)
    w = _path_weights(r, r.integrals[0], kind)
    return r, keep, w


def _kernel_row(g, theta, v, x, t, n, cfg, workers, kind, inside=None) -> list[MCEstimate]:
    def chunk(rng, size):
        r, keep, w = _simulate(g, theta, v, x, t, size, rng, cfg, kind, inside)
        return r.end[keep], w[keep], int(r.exploded.sum())

    ests = run_chunks(chunk, n, len(g), cfg, workers)
    return [e.scaled(1.0 / my) for e, my in zip(ests, g.m)]


def mc_unitary_kernel_row(g, theta, v, x, t, n, cfg=DEFAULT_CONFIG, workers=1) -> list[MCEstimate]:
    """Estimates of ``exp(-i t L)(x, y)`` for every ``y`` from one batch of paths."""
    _check(g, theta, v, x)
    if t < 0:
        raise InputError("row estimates need t >= 0; use mc_unitary_kernel for negative times")
    return _kernel_row(g, theta, v, x, t, n, cfg, workers, "unitary")


def mc_unitary_kernel(g, theta, v, x, y, t, n, cfg=DEFAULT_CONFIG, workers=1) -> MCEstimate:
    """Path-integral estimate of ``exp(-i t L_{v,theta})(x, y)``.

    For ``t < 0`` the paths start at ``y``, run for ``|t|`` and the result is
    conjugated; the ``1/m`` factor then belongs to ``x``.
    """
    _check(g, theta, v, x, y)
    if t >= 0:
        return _kernel_row(g, theta, v, x, t, n, cfg, workers, "unitary")[g.index[y]]
    row = _kernel_row(g, theta, v, y, -t, n, cfg, workers, "unitary")
    return row[g.index[x]].conj()


def mc_unitary_apply(g, theta, v, f, x, t, n, cfg=DEFAULT_CONFIG, workers=1,
                     W: Iterable[str] | None = None) -> MCEstimate:
    """Estimate ``(exp(-i t L^{(W)}) f)(x)`` as ``E_x[1{t < tau_W} i^N e^A f(X_t)]``.

    ``f`` is an array in vertex order or a mapping with zeros elsewhere.
    Without ``W`` the whole graph is used.
    """
    _check(g, theta, v, x)
    if t < 0:
        raise InputError("mc_unitary_apply needs t >= 0")
    if isinstance(f, dict):
        fv = np.zeros(len(g), dtype=complex)
        for k, val in f.items():
            fv[g._idx(k)] = val
    else:
        fv = np.asarray(f, dtype=complex)
    inside = None if W is None else vertex_set(g, W)

    def chunk(rng, size):
        r, keep, w = _simulate(g, theta, v, x, t, size, rng, cfg, "unitary", inside)
        keep = keep[fv[r.end[keep]] != 0]
        return np.zeros(keep.size, dtype=np.int64), w[keep] * fv[r.end[keep]], int(r.exploded.sum())

    return run_chunks(chunk, n, 1, cfg, workers)[0]


def mc_dirichlet_kernel(g, theta, v, W, x, y, t, n, cfg=DEFAULT_CONFIG, workers=1) -> MCEstimate:
    """Estimate of ``exp(-i t L^{(W)})(x, y)``: paths leaving ``W`` are killed.

    The action still uses the degree of the full graph.
    """
    _check(g, theta, v, x, y)
    W = vertex_set(g, W)
    if x not in W or y not in W:
        raise InputError("source and target must lie in W")
    if t < 0:
        raise InputError("mc_dirichlet_kernel needs t >= 0")
    return _kernel_row(g, theta, v, x, t, n, cfg, workers, "unitary", inside=W)[g.index[y]]


def mc_semigroup_kernel_row(g, theta, v, x, t, n, cfg=DEFAULT_CONFIG, workers=1) -> list[MCEstimate]:
    _check(g, theta, v, x)
    if t < 0:
        raise InputError("semigroup kernel needs t >= 0")
    return _kernel_row(g, theta, v, x, t, n, cfg, workers, "semigroup")


def mc_semigroup_kernel(g, theta, v, x, y, t, n, cfg=DEFAULT_CONFIG, workers=1) -> MCEstimate:
    """Feynman-Kac-Ito estimate of ``exp(-t L_{v,theta})(x, y)``."""
    _check(g, theta, v, x, y)
    return mc_semigroup_kernel_row(g, theta, v, x, t, n, cfg, workers)[g.index[y]]


@dataclass(frozen=True)
class KatoSimonResult:
    """``margin = bound - modulus``; ``stderr`` is 0 in exact mode."""

    margin: float
    bound: float
    modulus: float
    stderr: float = 0.0


def _neg_degree(g: WeightedGraph) -> ElectricPotential:
    return ElectricPotential.from_array(g, -g.degree_array)


def kato_simon_margin(g, theta, v, x, y, t, mode="exact", n=100_000, cfg=DEFAULT_CONFIG,
                      workers=1) -> KatoSimonResult:
    """Compare ``|exp(-i t L_{v,theta})(x, y)|`` with ``exp(-t L_{-deg,0})(x, y)``."""
    _check(g, theta, v, x, y)
    if t < 0:
        raise InputError("Kato-Simon comparison needs t >= 0")
    free = MagneticPotential()
    if mode == "exact":
        i, j = g.index[x], g.index[y]
        bound = semigroup_kernel_exact(assemble_operator(g, free, _neg_degree(g)), t).K[i, j].real
        modulus = abs(unitary_kernel_exact(assemble_operator(g, theta, v), t).K[i, j])
        return KatoSimonResult(float(bound - modulus), float(bound), float(modulus))
    if mode == "mc":
        b = mc_semigroup_kernel(g, free, _neg_degree(g), x, y, t, n, cfg, workers)
        u = mc_unitary_kernel(g, theta, v, x, y, t, n, cfg, workers)
        modulus = abs(u.mean)
        return KatoSimonResult(float(b.mean.real - modulus), float(b.mean.real), float(modulus),
                               float(b.stderr + u.stderr))
    raise InputError(f"unknown mode {mode!r}; use 'exact' or 'mc'")


def mc_scattering_kernel(g, theta, v, theta2, v2, x, y, t, n, cfg=DEFAULT_CONFIG, workers=1) -> MCEstimate:
    """Estimate of the kernel of ``exp(-i t L_{v,theta}) exp(i t L_{v2,theta2})``.

    Each sample pairs an independent path from ``x`` (weighted with
    ``(v, theta)``) and one from ``y`` (conjugate weight with
    ``(v2, theta2)``); the pair counts when both end at the same vertex.
    """
    _check(g, theta, v, x, y)
    require_valid(g, theta2, v2)
    if t < 0:
        raise InputError("scattering estimator needs t >= 0")

    def chunk(rng, size):
        r1, keep1, w1 = _simulate(g, theta, v, x, t, size, rng, cfg, "unitary")
        r2, keep2, w2 = _simulate(g, theta2, v2, y, t, size, rng, cfg, "unitary")
        alive = np.zeros(size, dtype=bool)
        alive[np.intersect1d(keep1, keep2)] = True
        hit = np.flatnonzero(alive & (r1.end == r2.end))
        vals = w1[hit] * np.conj(w2[hit]) / g.m[r1.end[hit]]
        return np.zeros(hit.size, dtype=np.int64), vals, int((r1.exploded | r2.exploded).sum())

    return run_chunks(chunk, n, 1, cfg, workers)[0]
