"""Weighted graphs, magnetic and electric potentials, restrictions and builders.

A weighted graph is a finite vertex set with a positive measure ``m`` and
symmetric edge weights ``b``. Vertex ids are opaque strings; internally each
vertex is mapped to its position in ``WeightedGraph.vertices``, and every
array-valued accessor follows that order.

Construction is deliberately permissive about values (nonpositive measures,
self-loops, nonfinite numbers) so that :func:`validate` can report every
problem at once. Structural errors that make the data meaningless (unknown
vertex ids, duplicate ids or pairs) raise :class:`InputError` immediately.
"""

from __future__ import annotations

import itertools
import math
import warnings
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InputError

VertexSet = tuple  # ordered tuple of vertex ids, always in ambient vertex order


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


class WeightedGraph:
    """Finite weighted graph ``(X, b, m)``.

    Args:
        vertices: vertex ids; their order fixes the order of every matrix.
        edges: mapping ``(u, w) -> b(u, w)`` or iterable of ``(u, w, b)``.
            Each unordered pair may appear at most once. Zero weights mean
            "no edge" and are dropped.
        m: vertex measure, mapping or scalar; missing vertices get 1.
        ambient_degree: set by :func:`restrict` only. Holds the degree of
            each vertex in the graph this one was cut out of, which is what
            the Dirichlet operator uses on its diagonal.
    """

    def __init__(
        self,
        vertices: Iterable[str],
        edges: Mapping[tuple[str, str], float] | Iterable[tuple[str, str, float]] = (),
        m: Mapping[str, float] | float | None = None,
        ambient_degree: Mapping[str, float] | None = None,
    ):
        self.vertices: tuple[str, ...] = tuple(str(x) for x in vertices)
        self.index: dict[str, int] = {}
        for i, x in enumerate(self.vertices):
            if x in self.index:
                raise InputError(f"duplicate vertex id {x!r}")
            self.index[x] = i

        n = len(self.vertices)
        if m is None:
            m_arr = np.ones(n)
        elif isinstance(m, Mapping):
            unknown = set(m) - set(self.index)
            if unknown:
                raise InputError(f"measure given for unknown vertices {sorted(unknown)}")
            m_arr = np.array([float(m.get(x, 1.0)) for x in self.vertices])
        else:
            m_arr = np.full(n, float(m))
        self.m = _readonly(m_arr)

        if isinstance(edges, Mapping):
            items = [(u, w, b) for (u, w), b in edges.items()]
        else:
            items = list(edges)
        self._b: dict[tuple[int, int], float] = {}
        for u, w, b in items:
            i, j = self._idx(str(u)), self._idx(str(w))
            key = (min(i, j), max(i, j))
            if key in self._b:
                raise InputError(f"edge {u!r}-{w!r} given more than once")
            b = float(b)
            if b == 0.0:
                continue
            self._b[key] = b

        if ambient_degree is not None:
            self.ambient_degree: np.ndarray | None = _readonly(
                np.array([float(ambient_degree[x]) for x in self.vertices])
            )
        else:
            self.ambient_degree = None

    def _idx(self, x: str) -> int:
        try:
            return self.index[x]
        except KeyError:
            raise InputError(f"unknown vertex id {x!r}") from None

    def __len__(self) -> int:
        return len(self.vertices)

    def __contains__(self, x: object) -> bool:
        return x in self.index

    def __repr__(self) -> str:
        return f"WeightedGraph(n_vertices={len(self)}, n_edges={len(self.edge_index)})"

    def b(self, x: str, y: str) -> float:
        """Edge weight; symmetric, zero on the diagonal and for non-edges."""
        i, j = self._idx(x), self._idx(y)
        if i == j:
            return 0.0
        return self._b.get((min(i, j), max(i, j)), 0.0)

    def neighbors(self, x: str) -> list[str]:
        i = self._idx(x)
        lo, hi = self.offsets[i], self.offsets[i + 1]
        return [self.vertices[j] for j in self.cols[lo:hi]]

    @property
    def raw_pairs(self) -> dict[tuple[int, int], float]:
        """Stored unordered pairs including self-loops, for validation."""
        return dict(self._b)

    @cached_property
    def edge_index(self) -> np.ndarray:
        """``(E, 2)`` array of index pairs ``i < j``; self-loops excluded."""
        keys = sorted(k for k in self._b if k[0] != k[1])
        return _readonly(np.array(keys, dtype=np.int64).reshape(-1, 2))

    @cached_property
    def edge_weight(self) -> np.ndarray:
        return _readonly(np.array([self._b[tuple(k)] for k in self.edge_index.tolist()], dtype=float))

    @cached_property
    def _csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        # Both orientations of every edge, grouped by source vertex.
        ei, w = self.edge_index, self.edge_weight
        src = np.concatenate([ei[:, 0], ei[:, 1]])
        dst = np.concatenate([ei[:, 1], ei[:, 0]])
        wts = np.concatenate([w, w])
        eid = np.concatenate([np.arange(len(w)), np.arange(len(w))])
        sign = np.concatenate([np.ones(len(w)), -np.ones(len(w))])
        order = np.lexsort((dst, src))
        offsets = np.zeros(len(self) + 1, dtype=np.int64)
        np.add.at(offsets, src + 1, 1)
        np.cumsum(offsets, out=offsets)
        return offsets, dst[order], wts[order], np.stack([eid[order], sign[order]])

    @property
    def offsets(self) -> np.ndarray:
        """CSR row offsets into :attr:`cols` / :attr:`weights`."""
        return self._csr[0]

    @property
    def cols(self) -> np.ndarray:
        return self._csr[1]

    @property
    def weights(self) -> np.ndarray:
        return self._csr[2]

    @cached_property
    def degree_array(self) -> np.ndarray:
        """Intrinsic weighted degree ``sum_y b(x, y) / m(x)`` per vertex."""
        s = np.zeros(len(self))
        ei, w = self.edge_index, self.edge_weight
        np.add.at(s, ei[:, 0], w)
        np.add.at(s, ei[:, 1], w)
        with np.errstate(divide="ignore", invalid="ignore"):
            return _readonly(s / self.m)

    @property
    def operator_degree(self) -> np.ndarray:
        """Degree used on the operator diagonal (ambient degree for restrictions)."""
        return self.degree_array if self.ambient_degree is None else self.ambient_degree

    def is_restriction(self) -> bool:
        return self.ambient_degree is not None

    def dense_weights(self) -> np.ndarray:
        n = len(self)
        B = np.zeros((n, n))
        ei, w = self.edge_index, self.edge_weight
        B[ei[:, 0], ei[:, 1]] = w
        B[ei[:, 1], ei[:, 0]] = w
        return B


class MagneticPotential:
    """Antisymmetric real function on the edges of a graph.

    Entries are stored as given, keyed by ordered pair. Reading ``theta(y, x)``
    for a stored ``(x, y)`` returns the negated value; pairs with no entry
    read as 0. Supplying both orientations is allowed, and :func:`validate`
    flags them if they are not exact negatives.
    """

    def __init__(self, entries: Mapping[tuple[str, str], float] | None = None):
        self.entries: dict[tuple[str, str], float] = {
            (str(u), str(w)): float(val) for (u, w), val in (entries or {}).items()
        }

    def __call__(self, x: str, y: str) -> float:
        if (x, y) in self.entries:
            return self.entries[(x, y)]
        if (y, x) in self.entries:
            return -self.entries[(y, x)]
        return 0.0

    def __repr__(self) -> str:
        return f"MagneticPotential({len(self.entries)} entries)"

    def edge_array(self, g: WeightedGraph) -> np.ndarray:
        """Theta on ``g.edge_index`` in the ``i -> j`` (``i < j``) orientation."""
        out = np.zeros(len(g.edge_index))
        if not self.entries:
            return out
        pos = {tuple(k): e for e, k in enumerate(g.edge_index.tolist())}
        for (u, w), val in self.entries.items():
            if u not in g.index or w not in g.index:
                continue
            i, j = g.index[u], g.index[w]
            e = pos.get((min(i, j), max(i, j)))
            if e is not None:
                out[e] = val if i < j else -val
        return out

    def csr_array(self, g: WeightedGraph) -> np.ndarray:
        """Theta aligned with ``g.cols``: entry k is theta(row, cols[k])."""
        eid, sign = g._csr[3]
        return self.edge_array(g)[eid.astype(np.int64)] * sign

    def dense(self, g: WeightedGraph) -> np.ndarray:
        n = len(g)
        T = np.zeros((n, n))
        ei, th = g.edge_index, self.edge_array(g)
        T[ei[:, 0], ei[:, 1]] = th
        T[ei[:, 1], ei[:, 0]] = -th
        return T


class ElectricPotential:
    """Real function on the vertices."""

    def __init__(self, values: Mapping[str, float] | None = None):
        self.values: dict[str, float] = {str(x): float(val) for x, val in (values or {}).items()}

    @classmethod
    def constant(cls, g: WeightedGraph, c: float = 0.0) -> "ElectricPotential":
        return cls({x: c for x in g.vertices})

    @classmethod
    def from_array(cls, g: WeightedGraph, arr: Sequence[float]) -> "ElectricPotential":
        arr = np.asarray(arr, dtype=float)
        if arr.shape != (len(g),):
            raise InputError(f"potential array has shape {arr.shape}, expected ({len(g)},)")
        return cls(dict(zip(g.vertices, arr.tolist())))

    def __call__(self, x: str) -> float:
        try:
            return self.values[x]
        except KeyError:
            raise InputError(f"electric potential missing on vertex {x!r}") from None

    def __repr__(self) -> str:
        return f"ElectricPotential({len(self.values)} values)"

    def array(self, g: WeightedGraph) -> np.ndarray:
        return np.array([self(x) for x in g.vertices])


@dataclass(frozen=True)
class Violation:
    kind: str
    where: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.where}"


def degree(g: WeightedGraph, x: str) -> float:
    """Weighted degree ``(1/m(x)) * sum_y b(x, y)``; 0 for isolated vertices."""
    return float(g.degree_array[g._idx(x)])


def validate(g: WeightedGraph, theta: MagneticPotential, v: ElectricPotential) -> list[Violation]:
    """Check the standing hypotheses on a graph instance.

    Returns an empty list when the instance is valid; never raises.
    """
    out: list[Violation] = []
    for x, mx in zip(g.vertices, g.m):
        if not math.isfinite(mx):
            out.append(Violation("nonfinite measure", x))
        elif mx <= 0:
            out.append(Violation("nonpositive measure", x))
    for (i, j), b in sorted(g.raw_pairs.items()):
        pair = f"{g.vertices[i]}-{g.vertices[j]}"
        if i == j:
            out.append(Violation("self-loop", pair))
        elif not math.isfinite(b):
            out.append(Violation("nonfinite edge weight", pair))
        elif b < 0:
            out.append(Violation("negative edge weight", pair))
    for (u, w), val in theta.entries.items():
        pair = f"{u}-{w}"
        if u not in g.index or w not in g.index:
            out.append(Violation("theta on unknown vertex", pair))
            continue
        if g.b(u, w) <= 0:
            out.append(Violation("theta on non-edge", pair))
        if not math.isfinite(val):
            out.append(Violation("nonfinite theta", pair))
        if (w, u) in theta.entries and u < w and theta.entries[(w, u)] != -val:
            out.append(Violation("theta antisymmetry breach", pair))
    for x in g.vertices:
        if x not in v.values:
            out.append(Violation("v missing", x))
        elif not math.isfinite(v.values[x]):
            out.append(Violation("nonfinite v", x))
    for x in v.values:
        if x not in g.index:
            out.append(Violation("v on unknown vertex", x))
    return out


def require_valid(g: WeightedGraph, theta: MagneticPotential, v: ElectricPotential) -> None:
    problems = validate(g, theta, v)
    if problems:
        raise InputError("invalid instance: " + "; ".join(map(str, problems)))


def vertex_set(g: WeightedGraph, W: Iterable[str]) -> VertexSet:
    """Normalize ``W`` to a tuple in ambient vertex order."""
    W = set(W)
    unknown = W - set(g.index)
    if unknown:
        raise InputError(f"vertex set contains unknown ids {sorted(unknown)}")
    return tuple(x for x in g.vertices if x in W)


def restrict(
    g: WeightedGraph, theta: MagneticPotential, v: ElectricPotential, W: Iterable[str]
) -> tuple[WeightedGraph, MagneticPotential, ElectricPotential]:
    """Dirichlet restriction to ``W``.

    Keeps the edges with both endpoints in ``W`` and records the degree each
    vertex had in ``g`` (itself the ambient degree if ``g`` is already a
    restriction), so that restricting twice equals restricting once.
    """
    W = vertex_set(g, W)
    if not W:
        raise InputError("cannot restrict to an empty vertex set")
    inside = set(W)
    edges = {
        (g.vertices[i], g.vertices[j]): b
        for i, j, b in zip(g.edge_index[:, 0], g.edge_index[:, 1], g.edge_weight)
        if g.vertices[i] in inside and g.vertices[j] in inside
    }
    amb = {x: float(g.operator_degree[g.index[x]]) for x in W}
    gw = WeightedGraph(W, edges, m={x: float(g.m[g.index[x]]) for x in W}, ambient_degree=amb)
    tw = MagneticPotential(
        {(u, w): val for (u, w), val in theta.entries.items() if u in inside and w in inside}
    )
    vw = ElectricPotential({x: val for x, val in v.values.items() if x in inside})
    return gw, tw, vw


def ball(g: WeightedGraph, center: str, radius: int) -> VertexSet:
    """Combinatorial ball of the given radius (hop distance)."""
    dist = _bfs_distances(g, center, radius)
    return tuple(x for x in g.vertices if x in dist)


def _bfs_distances(g: WeightedGraph, center: str, cutoff: int | None = None) -> dict[str, int]:
    start = g._idx(center)
    dist = {start: 0}
    queue = deque([start])
    while queue:
        i = queue.popleft()
        if cutoff is not None and dist[i] >= cutoff:
            continue
        for j in g.cols[g.offsets[i] : g.offsets[i + 1]].tolist():
            if j not in dist:
                dist[j] = dist[i] + 1
                queue.append(j)
    return {g.vertices[i]: d for i, d in dist.items()}


def ball_exhaustion(g: WeightedGraph, center: str, radii: Sequence[int]) -> list[VertexSet]:
    """Nested balls ``B(center, r)`` for strictly increasing ``radii``."""
    g._idx(center)
    radii = [int(r) for r in radii]
    if any(r < 0 for r in radii):
        raise InputError("radii must be nonnegative")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise InputError("radii must be strictly increasing")
    dist = _bfs_distances(g, center, radii[-1] if radii else 0)
    return [tuple(x for x in g.vertices if dist.get(x, r + 1) <= r) for r in radii]


def connected_component(g: WeightedGraph, x: str) -> VertexSet:
    dist = _bfs_distances(g, x)
    return tuple(y for y in g.vertices if y in dist)


# --- standard families -------------------------------------------------------


def _finish(g: WeightedGraph, theta: dict | None, v) -> tuple[WeightedGraph, MagneticPotential, ElectricPotential]:
    if isinstance(v, Mapping):
        pot = ElectricPotential({x: float(v.get(x, 0.0)) for x in g.vertices})
    else:
        pot = ElectricPotential.constant(g, float(v))
    return g, MagneticPotential(theta), pot


def path_graph(n: int, m=1.0, v=0.0):
    """Path ``0 - 1 - ... - (n-1)``; ``path_graph(2)`` is the two-vertex graph."""
    if n < 1:
        raise InputError("path needs n >= 1")
    ids = [str(k) for k in range(n)]
    g = WeightedGraph(ids, [(ids[k], ids[k + 1], 1.0) for k in range(n - 1)], m=m)
    return _finish(g, None, v)


def cycle_graph(n: int, m=1.0, v=0.0):
    """Cycle on ``n`` vertices. For ``n <= 2`` this degenerates to a path."""
    if n < 1:
        raise InputError("cycle needs n >= 1")
    ids = [str(k) for k in range(n)]
    pairs = {(ids[k], ids[(k + 1) % n]) for k in range(n) if n > 2 or k + 1 < n}
    g = WeightedGraph(ids, [(u, w, 1.0) for u, w in sorted(pairs)], m=m)
    return _finish(g, None, v)


def _coord_id(c: Sequence[int]) -> str:
    return "_".join(str(k) for k in c)


def lattice_box(d: int, side: int, m=1.0, v=0.0):
    """Box ``{0..side-1}^d`` of the standard lattice with unit weights."""
    if d < 1 or side < 1:
        raise InputError("lattice box needs d >= 1 and side >= 1")
    coords = list(itertools.product(range(side), repeat=d))
    edges = []
    for c in coords:
        for k in range(d):
            if c[k] + 1 < side:
                nb = c[:k] + (c[k] + 1,) + c[k + 1 :]
                edges.append((_coord_id(c), _coord_id(nb), 1.0))
    g = WeightedGraph([_coord_id(c) for c in coords], edges, m=m)
    return _finish(g, None, v)


def landau_gauge(g: WeightedGraph, alpha: float) -> MagneticPotential:
    """Landau-gauge potential with flux ``alpha`` per plaquette on a 2d box.

    Vertex ids must read ``"x1_x2"``. Horizontal bonds carry 0, vertical
    bonds ``(x1, x2) -> (x1, x2 + 1)`` carry ``2 pi alpha x1``.
    """
    coords = {}
    for x in g.vertices:
        parts = x.split("_")
        if len(parts) != 2:
            raise InputError(f"vertex id {x!r} is not a 2d lattice coordinate")
        try:
            coords[x] = (int(parts[0]), int(parts[1]))
        except ValueError:
            raise InputError(f"vertex id {x!r} is not a 2d lattice coordinate") from None
    entries = {}
    for i, j in g.edge_index.tolist():
        u, w = g.vertices[i], g.vertices[j]
        (a1, a2), (c1, c2) = coords[u], coords[w]
        if a1 == c1 and abs(a2 - c2) == 1:
            lo, hi = (u, w) if a2 < c2 else (w, u)
            entries[(lo, hi)] = 2 * math.pi * alpha * a1
        elif a2 == c2 and abs(a1 - c1) == 1:
            entries[(u, w)] = 0.0
        else:
            raise InputError(f"edge {u}-{w} is not a nearest-neighbour lattice bond")
    return MagneticPotential(entries)


def harper_box(side: int, alpha: float, m=1.0, v=0.0):
    """Harper operator on a ``side x side`` box, Landau gauge, flux ``alpha``."""
    g, _, pot = lattice_box(2, side, m=m, v=v)
    return g, landau_gauge(g, alpha), pot


_BUILDERS = {
    "path": (path_graph, (int,)),
    "cycle": (cycle_graph, (int,)),
    "lattice_box": (lattice_box, (int, int)),
    "harper_box": (harper_box, (int, float)),
}


def build_standard(kind: str, *args, m=1.0, v=0.0):
    """Build one of the standard families by name.

    ``kind`` is ``path``, ``cycle``, ``lattice_box`` or ``harper_box``; the
    positional arguments are those of the matching builder.
    """
    try:
        fn, types = _BUILDERS[kind]
    except KeyError:
        raise InputError(f"unknown builder {kind!r}; choose from {sorted(_BUILDERS)}") from None
    if len(args) != len(types):
        raise InputError(f"builder {kind!r} takes {len(types)} argument(s)")
    return fn(*(t(a) for t, a in zip(types, args)), m=m, v=v)


def parse_descriptor(desc: str):
    """Build from a string such as ``"cycle:5"`` or ``"harper_box:6:0.25"``."""
    kind, *args = desc.split(":")
    try:
        return build_standard(kind, *args)
    except ValueError as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"bad builder descriptor {desc!r}: {exc}") from None


def warn_if_degree_unbounded(graphs: Sequence[WeightedGraph], stacklevel: int = 2) -> bool:
    """Warn when the maximal degree keeps growing along a family of boxes.

    Finite boxes always have bounded degree, so this is a heuristic: three or
    more boxes whose maximal degree strictly increases every time. Returns
    True if a warning was emitted.
    """
    maxima = [float(np.max(g.operator_degree, initial=0.0)) for g in graphs]
    if len(maxima) >= 3 and all(b > a for a, b in zip(maxima, maxima[1:])):
        warnings.warn(
            f"weighted degree grows along the family ({maxima[0]:g} -> {maxima[-1]:g}); "
            "the path-integral weights may not be integrable in the limit",
            RuntimeWarning,
            stacklevel=stacklevel,
        )
        return True
    return False
