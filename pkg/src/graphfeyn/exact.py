"""Exact finite-dimensional magnetic Schrödinger operators and their kernels.

Kernels follow the measure-weighted convention used throughout the package:
an operator ``A`` acts by ``(A f)(x) = sum_y K(x, y) f(y) m(y)``, so the
identity has kernel ``delta_xy / m(y)``.

Exponentials are computed from a Hermitian eigendecomposition of the
symmetrized matrix ``M = D^{1/2} H D^{-1/2}`` (``D = diag(m)``), cached per
operator so that many times can be evaluated cheaply.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import ConsistencyError, InputError, ResourceLimitError
from .graph import (
    ElectricPotential,
    MagneticPotential,
    WeightedGraph,
    require_valid,
    restrict,
)

MAX_DENSE_VERTICES = 4096
HERMITIAN_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class FiniteOperator:
    """Dense matrix of ``L^{(W)}_{v,theta}`` in the vertex basis.

    ``H[x, x] = deg(x) + v(x)`` with the ambient degree, and
    ``H[x, y] = -(b(x, y) / m(x)) exp(i theta(x, y))`` off the diagonal.
    """

    vertices: tuple[str, ...]
    H: np.ndarray
    m: np.ndarray

    @cached_property
    def symmetrized(self) -> np.ndarray:
        s = np.sqrt(self.m)
        return s[:, None] * self.H / s[None, :]

    def hermiticity_defect(self) -> float:
        M = self.symmetrized
        scale = float(np.max(np.abs(M), initial=0.0))
        if scale == 0.0:
            return 0.0
        return float(np.max(np.abs(M - M.conj().T))) / scale

    @cached_property
    def spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues and orthonormal eigenvectors of the symmetrized matrix."""
        defect = self.hermiticity_defect()
        if defect > HERMITIAN_RTOL:
            raise ConsistencyError(f"symmetrized operator is not Hermitian (defect {defect:.3g})")
        M = self.symmetrized
        return np.linalg.eigh(0.5 * (M + M.conj().T))

    def function(self, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """Matrix of ``fn(H)`` in the vertex basis (not a kernel)."""
        lam, V = self.spectrum
        s = np.sqrt(self.m)
        core = (V * fn(lam)) @ V.conj().T
        return core / s[:, None] * s[None, :]

    def apply(self, f: np.ndarray) -> np.ndarray:
        return self.H @ np.asarray(f, dtype=complex)


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    """Integral kernel ``K(x, y)`` on an ordered vertex list.

    ``t`` is the time the kernel was evaluated at; compositions carry None.
    """

    vertices: tuple[str, ...]
    K: np.ndarray
    m: np.ndarray
    t: float | None = None

    def __call__(self, x: str, y: str) -> complex:
        idx = {u: i for i, u in enumerate(self.vertices)}
        try:
            return complex(self.K[idx[x], idx[y]])
        except KeyError as exc:
            raise InputError(f"vertex {exc.args[0]!r} not in kernel") from None

    def apply(self, f: np.ndarray) -> np.ndarray:
        return self.K @ (np.asarray(f, dtype=complex) * self.m)


def identity_kernel(vertices: Sequence[str], m: np.ndarray) -> KernelMatrix:
    m = np.asarray(m, dtype=float)
    return KernelMatrix(tuple(vertices), np.diag(1.0 / m).astype(complex), m, 0.0)


def assemble_operator(
    g: WeightedGraph,
    theta: MagneticPotential,
    v: ElectricPotential,
    W: Iterable[str] | None = None,
) -> FiniteOperator:
    """Build the (Dirichlet-restricted, if ``W`` is given) operator matrix."""
    require_valid(g, theta, v)
    if W is not None:
        g, theta, v = restrict(g, theta, v, W)
    n = len(g)
    if n > MAX_DENSE_VERTICES:
        raise ResourceLimitError(f"{n} vertices exceed the dense cap of {MAX_DENSE_VERTICES}")
    B = g.dense_weights()
    T = theta.dense(g)
    H = -(B / g.m[:, None]) * np.exp(1j * T)
    H[np.diag_indices(n)] = g.operator_degree + v.array(g)
    return FiniteOperator(g.vertices, H, np.array(g.m))


def _vertex_values(g: WeightedGraph, f) -> np.ndarray:
    if isinstance(f, Mapping):
        out = np.zeros(len(g), dtype=complex)
        for x, val in f.items():
            out[g._idx(x)] = val
        return out
    out = np.asarray(f, dtype=complex)
    if out.shape != (len(g),):
        raise InputError(f"vertex function has shape {out.shape}, expected ({len(g)},)")
    return out


def apply_formal(g: WeightedGraph, theta: MagneticPotential, v: ElectricPotential, f, x: str) -> complex:
    """Evaluate the formal difference operator at one vertex by direct summation.

    ``f`` is a mapping (missing vertices read as 0) or an array in vertex order.
    On a restriction the values outside the kept set count as 0, which adds
    ``(ambient_degree - degree)(x) f(x)`` to the sum.
    """
    fv = _vertex_values(g, f)
    i = g._idx(x)
    mx = g.m[i]
    acc = 0j
    for y in g.neighbors(x):
        acc += g.b(x, y) * (fv[i] - np.exp(1j * theta(x, y)) * fv[g.index[y]])
    boundary = g.operator_degree[i] - g.degree_array[i]
    return complex(acc / mx + boundary * fv[i] + v(x) * fv[i])


def quadratic_form(g: WeightedGraph, theta: MagneticPotential, v: ElectricPotential, f, h) -> complex:
    """Sesquilinear form on finitely supported functions, as a literal double sum.

    Sums over ordered neighbour pairs with the factor 1/2, plus the potential
    term. Restrictions add the boundary term carried by the ambient degree.
    """
    fv, hv = _vertex_values(g, f), _vertex_values(g, h)
    total = 0j
    for (i, j), b in zip(g.edge_index.tolist(), g.edge_weight):
        for a, c in ((i, j), (j, i)):
            phase = np.exp(1j * theta(g.vertices[a], g.vertices[c]))
            total += 0.5 * b * (fv[a] - phase * fv[c]) * np.conj(hv[a] - phase * hv[c])
    boundary = (g.operator_degree - g.degree_array) * g.m
    total += np.sum((v.array(g) * g.m + boundary) * fv * np.conj(hv))
    return complex(total)


def greens_identity_residual(g, theta, v, f, h) -> float:
    """``|Q(f, h) - sum_x (L f)(x) conj(h(x)) m(x)|``, both sides summed independently."""
    hv = _vertex_values(g, h)
    rhs = sum(
        apply_formal(g, theta, v, f, x) * np.conj(hv[i]) * g.m[i] for i, x in enumerate(g.vertices)
    )
    return float(abs(quadratic_form(g, theta, v, f, h) - rhs))


def unitary_kernel_exact(op: FiniteOperator, t: float) -> KernelMatrix:
    """Kernel of ``exp(-i t H)``; any real ``t``."""
    A = op.function(lambda lam: np.exp(-1j * t * lam))
    return KernelMatrix(op.vertices, A / op.m[None, :], op.m, float(t))


def semigroup_kernel_exact(op: FiniteOperator, t: float) -> KernelMatrix:
    """Kernel of ``exp(-t H)`` for ``t >= 0``."""
    if t < 0:
        raise InputError("semigroup kernel needs t >= 0")
    A = op.function(lambda lam: np.exp(-t * lam)).astype(complex)
    return KernelMatrix(op.vertices, A / op.m[None, :], op.m, float(t))


def compose_kernels(A: KernelMatrix, B: KernelMatrix) -> KernelMatrix:
    """Kernel of the product: ``[AB](x, y) = sum_z A(x, z) B(z, y) m(z)``."""
    if A.vertices != B.vertices or not np.array_equal(A.m, B.m):
        raise InputError("kernels live on different vertex lists or measures")
    return KernelMatrix(A.vertices, (A.K * A.m[None, :]) @ B.K, A.m, None)


def scattering_kernel_exact(
    g: WeightedGraph,
    theta: MagneticPotential,
    v: ElectricPotential,
    theta2: MagneticPotential,
    v2: ElectricPotential,
    W: Iterable[str] | None,
    t: float,
) -> KernelMatrix:
    """Kernel of ``exp(-i t L_{v,theta}) exp(i t L_{v2,theta2})``."""
    W = None if W is None else list(W)
    op = assemble_operator(g, theta, v, W)
    op2 = assemble_operator(g, theta2, v2, W)
    return compose_kernels(unitary_kernel_exact(op, t), unitary_kernel_exact(op2, -t))


def generator_limit_residual(op: FiniteOperator, f, t: float) -> float:
    """``max_x |((exp(-i t H) f - f) / t)(x) + i (H f)(x)|``; O(t) as t -> 0."""
    if t <= 0:
        raise InputError("generator residual needs t > 0")
    fv = np.asarray(f, dtype=complex)
    Uf = op.function(lambda lam: np.exp(-1j * t * lam)) @ fv
    return float(np.max(np.abs((Uf - fv) / t + 1j * op.apply(fv)), initial=0.0))


def propagate(op: FiniteOperator, f, z: complex) -> np.ndarray:
    """``exp(z H) f`` by a stepped Taylor series applied to the vector.

    Steps are chosen so that ``|z| * ||M||_inf <= 1`` per step, and each
    series runs until every entry has converged relative to itself. Entries
    far from the support of ``f`` are built from products of small numbers
    instead of being the rounding residue of a dense eigenbasis, so tails
    far below ``1e-16 * ||f||`` stay accurate. Used where those tails matter
    (exhaustion studies); kernels use the eigendecomposition.
    """
    M = op.symmetrized
    s = np.sqrt(op.m)
    norm = float(np.max(np.sum(np.abs(M), axis=1), initial=0.0))
    steps = max(1, int(np.ceil(abs(z) * norm)))
    dz = z / steps
    g = s * np.asarray(f, dtype=complex)
    max_terms = 64 + 4 * len(op.vertices)
    for _ in range(steps):
        acc = g.copy()
        term = g.copy()
        for k in range(1, max_terms):
            term = (M @ term) * (dz / k)
            acc += term
            nz = term != 0
            if not nz.any():
                break
            a, tt = np.abs(acc[nz]), np.abs(term[nz])
            if np.all((tt <= 2.0**-60 * a) | (a < 1e-290)):
                break
        g = acc
    return g / s
