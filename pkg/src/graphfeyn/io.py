"""File formats: graph JSON in; kernel, result, path and report files out.

All floating output uses 17 significant digits in CSV; JSON floats are
written with Python's round-trip repr and never rounded.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import IO, Iterable

import jsonschema

from .errors import GraphParseError
from .graph import ElectricPotential, MagneticPotential, WeightedGraph

GRAPH_SCHEMA = {
    "type": "object",
    "required": ["vertices"],
    "properties": {
        "vertices": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id"],
                "properties": {
                    "id": {"type": "string"},
                    "m": {"type": "number"},
                    "v": {"type": "number"},
                },
            },
        },
        "edges": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["u", "w", "b"],
                "properties": {
                    "u": {"type": "string"},
                    "w": {"type": "string"},
                    "b": {"type": "number"},
                    "theta": {"type": "number"},
                },
            },
        },
    },
}


def parse_graph(text: str, source: str = "<string>"):
    """Parse graph JSON text into ``(graph, theta, v)``.

    Raises:
        GraphParseError: malformed JSON (with line/column) or a field of the
            wrong type or missing (with its JSON path).
        InputError: structurally inconsistent data such as edges between
            unknown vertices or repeated pairs.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphParseError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        jsonschema.validate(doc, GRAPH_SCHEMA)
    except jsonschema.ValidationError as exc:
        field = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise GraphParseError(f"{source}: field {field}: {exc.message}") from None

    verts = doc["vertices"]
    ids = [rec["id"] for rec in verts]
    m = {rec["id"]: rec.get("m", 1.0) for rec in verts}
    edges = []
    theta = {}
    for rec in doc.get("edges", []):
        edges.append((rec["u"], rec["w"], rec["b"]))
        # Kept even on a zero-weight pair so validation reports it as a non-edge.
        if "theta" in rec:
            theta[(rec["u"], rec["w"])] = rec["theta"]
    g = WeightedGraph(ids, edges, m=m)
    v = ElectricPotential({rec["id"]: rec.get("v", 0.0) for rec in verts})
    return g, MagneticPotential(theta), v


def load_graph(path: str | Path):
    """Read a graph file; see :func:`parse_graph`."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise GraphParseError(f"{path}: cannot read file: {exc.strerror or exc}") from None
    return parse_graph(text, source=str(path))


def graph_to_dict(g: WeightedGraph, theta: MagneticPotential, v: ElectricPotential) -> dict:
    th = theta.edge_array(g)
    return {
        "vertices": [
            {"id": x, "m": float(g.m[i]), "v": float(v(x))} for i, x in enumerate(g.vertices)
        ],
        "edges": [
            {"u": g.vertices[i], "w": g.vertices[j], "b": float(b), "theta": float(t)}
            for (i, j), b, t in zip(g.edge_index.tolist(), g.edge_weight, th)
        ],
    }


def dump_graph(g, theta, v, fp: IO[str]) -> None:
    json.dump(graph_to_dict(g, theta, v), fp, indent=2)
    fp.write("\n")


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_kernel_csv(kernel, fp: IO[str]) -> None:
    """Write a kernel as ``x,y,re,im`` rows in vertex-list order."""
    w = csv.writer(fp, lineterminator="\n")
    w.writerow(["x", "y", "re", "im"])
    for i, x in enumerate(kernel.vertices):
        for j, y in enumerate(kernel.vertices):
            z = kernel.K[i, j]
            w.writerow([x, y, fmt(z.real), fmt(z.imag)])


def read_kernel_csv(fp: IO[str]) -> dict[tuple[str, str], complex]:
    return {(r["x"], r["y"]): complex(float(r["re"]), float(r["im"])) for r in csv.DictReader(fp)}


def estimate_to_dict(est, *, t: float, x: str, y: str, seed: int) -> dict:
    return {
        "re": float(est.mean.real),
        "im": float(est.mean.imag),
        "stderr_re": float(est.stderr_re),
        "stderr_im": float(est.stderr_im),
        "n": int(est.n_samples),
        "n_exploded": int(est.n_exploded),
        "t": float(t),
        "x": x,
        "y": y,
        "seed": int(seed),
    }


def write_estimate_json(est, fp: IO[str], **meta) -> None:
    json.dump(estimate_to_dict(est, **meta), fp)
    fp.write("\n")


def write_paths_csv(paths: Iterable, fp: IO[str]) -> None:
    """Write ``path_id,step,time,vertex``; exploded paths get a ``!exploded`` row."""
    w = csv.writer(fp, lineterminator="\n")
    w.writerow(["path_id", "step", "time", "vertex"])
    for pid, p in enumerate(paths):
        w.writerow([pid, 0, fmt(0.0), p.start])
        for step, (s, y) in enumerate(p.jumps, start=1):
            w.writerow([pid, step, fmt(s), y])
        if p.exploded:
            w.writerow([pid, len(p.jumps) + 1, fmt(p.horizon), "!exploded"])


def write_exhaustion_csv(report, fp: IO[str]) -> None:
    w = csv.writer(fp, lineterminator="\n")
    w.writerow(["radius", "ball_size", "deviation"])
    for r, size, d in zip(report.radii, report.ball_sizes, report.deviations):
        w.writerow([r, size, fmt(d)])


def to_text(writer, *objs, **kw) -> str:
    """Run one of the writers above into a string."""
    buf = io.StringIO()
    writer(*objs, buf, **kw)
    return buf.getvalue()
