"""Command-line interface.

Exit codes: 0 ok, 2 input/domain error, 3 parse error, 4 resource cap,
5 acceptance failure (a comparison or bound check did not hold).
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import exact, io, montecarlo
from .errors import GraphFeynError, InputError
from .exhaustion import exhaustion_study
from .graph import (
    ElectricPotential,
    _BUILDERS,
    landau_gauge,
    parse_descriptor,
    validate,
)
from .sampler import sample_paths
from .stats import SamplerConfig

EXIT_OK, EXIT_INPUT, EXIT_PARSE, EXIT_RESOURCE, EXIT_FAIL = 0, 2, 3, 4, 5
Z_LIMIT = 4.0
KATO_SIMON_TOL = 1e-10


@dataclass(frozen=True)
class RunConfig:
    command: str
    graph: str
    t: float | None
    t_grid: tuple[float, ...]
    source: str | None
    target: str | None
    samples: int
    seed: int
    max_jumps: int
    chunk_size: int
    workers: int
    out: str
    mode: str | None

    def __post_init__(self):
        if self.samples < 1:
            raise InputError("--samples must be >= 1")
        if self.max_jumps < 1:
            raise InputError("--max-jumps must be >= 1")
        if self.workers < 1:
            raise InputError("--workers must be >= 1")
        if not self.t_grid:
            raise InputError("time grid is empty")

    @property
    def sampler(self) -> SamplerConfig:
        return SamplerConfig(max_jumps=self.max_jumps, seed=self.seed, chunk_size=self.chunk_size)


def _default_workers() -> int:
    raw = os.environ.get("GRAPHFEYN_WORKERS")
    if not raw:
        return 1
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"GRAPHFEYN_WORKERS={raw!r} is not an integer") from None


def _parse_grid(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise InputError(f"bad time grid {text!r}") from None


def load_instance(graph: str, override_v: str | None = None, flux: float | None = None):
    """Load a graph file, or build a standard family from ``kind:arg[:arg]``."""
    if not Path(graph).exists() and graph.split(":")[0] in _BUILDERS:
        g, theta, v = parse_descriptor(graph)
    else:
        g, theta, v = io.load_graph(graph)
    if flux is not None:
        theta = landau_gauge(g, flux)
    if override_v == "neg-deg":
        v = ElectricPotential.from_array(g, -g.degree_array)
    elif override_v == "zero":
        v = ElectricPotential.constant(g, 0.0)
    return g, theta, v


@contextlib.contextmanager
def _output(path: str):
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fp:
            yield fp


def _config(args) -> RunConfig:
    t = getattr(args, "t", None)
    grid = _parse_grid(args.t_grid) if getattr(args, "t_grid", None) else ((t,) if t is not None else (0.0,))
    return RunConfig(
        command=args.command,
        graph=args.graph,
        t=t,
        t_grid=grid,
        source=getattr(args, "source", None),
        target=getattr(args, "target", None),
        samples=getattr(args, "samples", 1),
        seed=getattr(args, "seed", 0),
        max_jumps=getattr(args, "max_jumps", 10_000),
        chunk_size=getattr(args, "chunk_size", 50_000),
        workers=getattr(args, "workers", 1),
        out=args.out,
        mode=getattr(args, "mode", None),
    )


def _require(value, flag: str):
    if value is None:
        raise InputError(f"{flag} is required for this command")
    return value


def _vertices(g, cfg: RunConfig):
    xs = [cfg.source] if cfg.source else list(g.vertices)
    ys = [cfg.target] if cfg.target else list(g.vertices)
    for x in xs + ys:
        g._idx(x)
    return xs, ys


def cmd_validate(args) -> int:
    g, theta, v = io.load_graph(args.graph)
    problems = validate(g, theta, v)
    with _output(args.out) as fp:
        for p in problems:
            fp.write(f"{p}\n")
        if not problems:
            fp.write("ok\n")
    return EXIT_INPUT if problems else EXIT_OK


def cmd_exact_kernel(args) -> int:
    cfg = _config(args)
    g, theta, v = load_instance(cfg.graph, args.override_v, args.flux)
    op = exact.assemble_operator(g, theta, v)
    t = _require(cfg.t, "--t")
    kernel = exact.semigroup_kernel_exact(op, t) if cfg.mode == "semigroup" else exact.unitary_kernel_exact(op, t)
    with _output(cfg.out) as fp:
        io.write_kernel_csv(kernel, fp)
    return EXIT_OK


def cmd_mc_kernel(args) -> int:
    cfg = _config(args)
    g, theta, v = load_instance(cfg.graph, args.override_v, args.flux)
    x, y = _require(cfg.source, "--source"), _require(cfg.target, "--target")
    t = _require(cfg.t, "--t")
    if cfg.mode == "semigroup":
        est = montecarlo.mc_semigroup_kernel(g, theta, v, x, y, t, cfg.samples, cfg.sampler, cfg.workers)
    else:
        est = montecarlo.mc_unitary_kernel(g, theta, v, x, y, t, cfg.samples, cfg.sampler, cfg.workers)
    with _output(cfg.out) as fp:
        io.write_estimate_json(est, fp, t=t, x=x, y=y, seed=cfg.seed)
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _config(args)
    g, theta, v = load_instance(cfg.graph, args.override_v, args.flux)
    semigroup = cfg.mode == "semigroup"
    op = exact.assemble_operator(g, theta, v)
    xs, ys = _vertices(g, cfg)
    worst = 0.0
    with _output(cfg.out) as fp:
        w = csv.writer(fp, lineterminator="\n")
        w.writerow(["x", "y", "t", "exact_re", "exact_im", "mc_re", "mc_im", "stderr_re", "stderr_im", "z"])
        for t in cfg.t_grid:
            if semigroup:
                K = exact.semigroup_kernel_exact(op, t)
            else:
                K = exact.unitary_kernel_exact(op, t)
            for x in xs:
                row_fn = montecarlo.mc_semigroup_kernel_row if semigroup else montecarlo.mc_unitary_kernel_row
                row = row_fn(g, theta, v, x, t, cfg.samples, cfg.sampler, cfg.workers)
                for y in ys:
                    ref = K.K[g.index[x], g.index[y]]
                    est = row[g.index[y]]
                    z = est.z_score(ref)
                    worst = max(worst, z)
                    w.writerow([x, y, io.fmt(t), io.fmt(ref.real), io.fmt(ref.imag), io.fmt(est.mean.real),
                                io.fmt(est.mean.imag), io.fmt(est.stderr_re), io.fmt(est.stderr_im), io.fmt(z)])
    return EXIT_OK if worst <= Z_LIMIT else EXIT_FAIL


def cmd_kato_simon(args) -> int:
    cfg = _config(args)
    g, theta, v = load_instance(cfg.graph, args.override_v, args.flux)
    mode = cfg.mode or "exact"
    xs, ys = _vertices(g, cfg)
    ok = True
    with _output(cfg.out) as fp:
        w = csv.writer(fp, lineterminator="\n")
        w.writerow(["x", "y", "t", "bound", "modulus", "margin", "stderr"])
        for t in cfg.t_grid:
            for x in xs:
                for y in ys:
                    r = montecarlo.kato_simon_margin(g, theta, v, x, y, t, mode, cfg.samples, cfg.sampler,
                                                     cfg.workers)
                    tol = KATO_SIMON_TOL if mode == "exact" else Z_LIMIT * r.stderr
                    ok &= r.margin >= -tol
                    w.writerow([x, y, io.fmt(t), io.fmt(r.bound), io.fmt(r.modulus), io.fmt(r.margin),
                                io.fmt(r.stderr)])
    return EXIT_OK if ok else EXIT_FAIL


def cmd_scattering(args) -> int:
    cfg = _config(args)
    g, theta, v = load_instance(cfg.graph, args.override_v, args.flux)
    if args.graph_prime:
        g2, theta2, v2 = load_instance(args.graph_prime)
        if g2.vertices != g.vertices or not np.array_equal(g2.dense_weights(), g.dense_weights()) \
                or not np.array_equal(g2.m, g.m):
            raise InputError("--graph-prime must describe the same weighted graph")
    else:
        theta2, v2 = theta, v
    t = _require(cfg.t, "--t")
    with _output(cfg.out) as fp:
        if (cfg.mode or "exact") == "exact":
            io.write_kernel_csv(exact.scattering_kernel_exact(g, theta, v, theta2, v2, None, t), fp)
        else:
            x, y = _require(cfg.source, "--source"), _require(cfg.target, "--target")
            est = montecarlo.mc_scattering_kernel(g, theta, v, theta2, v2, x, y, t, cfg.samples,
                                                  cfg.sampler, cfg.workers)
            io.write_estimate_json(est, fp, t=t, x=x, y=y, seed=cfg.seed)
    return EXIT_OK


def cmd_exhaustion(args) -> int:
    cfg = _config(args)
    g, theta, v = load_instance(cfg.graph, args.override_v, args.flux)
    center = _require(cfg.source, "--source")
    try:
        radii = [int(r) for r in args.radii.split(",")]
    except ValueError:
        raise InputError(f"bad radii {args.radii!r}") from None
    report = exhaustion_study(g, theta, v, {center: 1.0}, _require(cfg.t, "--t"), radii, center,
                              cfg.mode or "unitary", cfg.workers)
    with _output(cfg.out) as fp:
        io.write_exhaustion_csv(report, fp)
    return EXIT_OK


def cmd_sample_paths(args) -> int:
    cfg = _config(args)
    g, _, _ = load_instance(cfg.graph)
    x = _require(cfg.source, "--source")
    t = _require(cfg.t, "--t")
    if t <= 0:
        raise InputError("--t must be positive")
    paths = sample_paths(g, x, t, cfg.samples, cfg.sampler)
    with _output(cfg.out) as fp:
        io.write_paths_csv(paths, fp)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphfeyn",
        description="Exact and path-integral kernels of magnetic Schrödinger operators on graphs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--graph", required=True,
                        help="graph JSON file, or a builder such as cycle:5 or harper_box:6:0.25")
    common.add_argument("--out", default="-", help="output file (default: stdout)")

    variants = argparse.ArgumentParser(add_help=False)
    variants.add_argument("--override-v", choices=["neg-deg", "zero"],
                          help="replace the electric potential by -deg or 0")
    variants.add_argument("--flux", type=float, help="Landau-gauge flux per plaquette (2d lattice ids x1_x2)")

    timing = argparse.ArgumentParser(add_help=False)
    timing.add_argument("--t", type=float)
    timing.add_argument("--t-grid", help="comma-separated times")

    mc = argparse.ArgumentParser(add_help=False)
    mc.add_argument("--source")
    mc.add_argument("--target")
    mc.add_argument("--samples", type=int, default=100_000)
    mc.add_argument("--seed", type=int, default=0)
    mc.add_argument("--max-jumps", type=int, default=10_000)
    mc.add_argument("--chunk-size", type=int, default=50_000)
    mc.add_argument("--workers", type=int, default=None,
                    help="worker threads (default: $GRAPHFEYN_WORKERS or 1)")

    def add(name, fn, parents, modes=None, **kw):
        p = sub.add_parser(name, parents=parents, **kw)
        if modes:
            p.add_argument("--mode", choices=modes, default=modes[0])
        p.set_defaults(func=fn)
        return p

    add("validate", cmd_validate, [common], help="check a graph file")
    add("exact-kernel", cmd_exact_kernel, [common, variants, timing], ["unitary", "semigroup"],
        help="exact kernel matrix as CSV")
    add("mc-kernel", cmd_mc_kernel, [common, variants, timing, mc], ["unitary", "semigroup"],
        help="path-integral estimate of one kernel entry as JSON")
    add("compare", cmd_compare, [common, variants, timing, mc], ["unitary", "semigroup"],
        help="exact vs Monte Carlo table over a time grid")
    add("kato-simon", cmd_kato_simon, [common, variants, timing, mc], ["exact", "mc"],
        help="check the Kato-Simon bound over a time grid")
    p = add("scattering", cmd_scattering, [common, variants, timing, mc], ["exact", "mc"],
            help="kernel of exp(-itL) exp(itL') (exact CSV or MC JSON)")
    p.add_argument("--graph-prime", help="graph file with the primed potentials (same graph)")
    p = add("exhaustion", cmd_exhaustion, [common, variants, timing, mc], ["unitary", "semigroup"],
            help="convergence along balls around --source")
    p.add_argument("--radii", default="5,10,20,50,100", help="comma-separated increasing radii")
    add("sample-paths", cmd_sample_paths, [common, timing, mc], help="dump sampled jump paths as CSV")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "workers", 1) is None:
            args.workers = _default_workers()
        return args.func(args)
    except GraphFeynError as exc:
        print(f"graphfeyn {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
