"""Command-line experiment runner.

Subcommands: solve, benchmark-sa, compare, noise-study, brute-force, embed.
Exit codes: 0 success, 2 infeasible encoding/embedding, 1 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from .encoding import (
    EmbeddingError, InfeasibleScaleError, embed_layout, encode,
    export_layout, validate_embedding,
)
from .graphs import brute_force_solve, cycle_graph, load_graph, path_graph
from .pipeline import (
    RunConfig, compare_solvers, export_run, noise_study, solve_graph,
)
from .pulses import NoiseSpec
from .sa import SAConfig, sa_benchmark, write_benchmark_csv

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2


def _load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if args.graph:
        cfg = replace(cfg, graph=args.graph)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.out:
        cfg = replace(cfg, out_dir=args.out)
    return cfg


def _graph_from(cfg: RunConfig):
    if not cfg.graph:
        raise ValueError("no graph file given (use --graph or the config)")
    return load_graph(cfg.graph)


def cmd_solve(args) -> int:
    cfg = _load_config(args)
    g = _graph_from(cfg)
    rec, artifacts = solve_graph(g, cfg, record_populations=True)
    out_dir = cfg.out_dir or "."
    paths = export_run(rec, artifacts, out_dir)
    print(json.dumps({"graph": rec.graph_name, "n": rec.n, "R": rec.ratio,
                      "F": rec.fidelity_final, "E": rec.energy_final,
                      "files": paths}, indent=1, default=float))
    return EXIT_OK


def cmd_brute_force(args) -> int:
    cfg = _load_config(args)
    g = _graph_from(cfg)
    sol = brute_force_solve(g)
    doc = {"graph": g.name, "n": g.n, "kind": g.kind, "c_opt": sol.c_opt,
           "d_opt": sol.d_opt,
           "optima": ["".join(str(int(b)) for b in row)
                      for row in sol.assignments()[:64]]}
    print(json.dumps(doc, indent=1, default=float))
    return EXIT_OK


def cmd_embed(args) -> int:
    cfg = _load_config(args)
    g = _graph_from(cfg)
    enc = encode(g, cfg.device, delta_ref=cfg.protocol.delta_ref)
    layout = embed_layout(enc, cfg.device, seed=cfg.seed,
                          restarts=cfg.embed.restarts,
                          unwanted_tol=cfg.embed.unwanted_tol,
                          edge_tol=cfg.embed.edge_tol)
    report = validate_embedding(layout, enc, cfg.device,
                                edge_tol=cfg.embed.edge_tol,
                                unwanted_tol=cfg.embed.unwanted_tol)
    doc = export_layout(layout, enc, cfg.device, report)
    if cfg.out_dir:
        os.makedirs(cfg.out_dir, exist_ok=True)
        path = os.path.join(cfg.out_dir, "layout.json")
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1, default=float)
        print(path)
    else:
        print(json.dumps(doc, indent=1, default=float))
    return EXIT_OK


def _benchmark_family(args):
    if args.family == "path":
        return [path_graph(n) for n in range(args.n_min, args.n_max + 1)]
    if args.family == "cycle-mis":
        return [cycle_graph(n, kind="mis") for n in range(max(3, args.n_min),
                                                          args.n_max + 1)]
    raise ValueError(f"unknown family {args.family!r}")


def cmd_benchmark_sa(args) -> int:
    cfg = _load_config(args)
    if cfg.graph:
        family = [load_graph(cfg.graph)]
    else:
        family = _benchmark_family(args)
    sa_cfg = SAConfig(iterations=args.iterations, runs=args.runs, seed=cfg.seed)
    rows = sa_benchmark(family, sa_cfg)
    out = os.path.join(cfg.out_dir or ".", "sa_benchmark.csv")
    os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
    write_benchmark_csv(rows, out)
    print(out)
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _load_config(args)
    if cfg.graph:
        family = [load_graph(cfg.graph)]
    else:
        family = _benchmark_family(args)
    sa_cfg = SAConfig(iterations=args.iterations, runs=args.runs, seed=cfg.seed)
    rows = compare_solvers(family, cfg, sa_cfg)
    out = os.path.join(cfg.out_dir or ".", "compare.csv")
    os.makedirs(os.path.dirname(out) or ".", exist_ok=True)

    def fmt(v):
        return "" if v is None else format(v, ".6g")

    with open(out, "w") as fh:
        fh.write("graph,N,HP,quantum_gap,sa_gap,error\n")
        for row in rows:
            fh.write(f"{row['graph_name']},{row['n']},{fmt(row['hp'])},"
                     f"{fmt(row['quantum_gap'])},{fmt(row['sa_gap'])},"
                     f"{row['error']}\n")
    print(out)
    return EXIT_OK


def cmd_noise_study(args) -> int:
    cfg = _load_config(args)
    g = _graph_from(cfg)
    if cfg.noise is None:
        cfg = replace(cfg, noise=NoiseSpec(level=args.level, seed=cfg.seed))
    report = noise_study(g, cfg, n_draws=args.draws)
    out_dir = cfg.out_dir or "."
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "noise_study.json")
    with open(path, "w") as fh:
        json.dump(report, fh, indent=1, default=float)
    print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rydanneal",
        description="Rydberg annealer simulator for Max-Cut/MIS graphs")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run-config file")
        p.add_argument("--graph", help="graph document (JSON)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", help="output directory")

    p = sub.add_parser("solve", help="run the full annealing pipeline")
    common(p)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("brute-force", help="exact enumeration oracle")
    common(p)
    p.set_defaults(fn=cmd_brute_force)

    p = sub.add_parser("embed", help="encode and lay out a graph")
    common(p)
    p.set_defaults(fn=cmd_embed)

    p = sub.add_parser("benchmark-sa", help="simulated-annealing benchmark")
    common(p)
    p.add_argument("--family", default="path", choices=["path", "cycle-mis"])
    p.add_argument("--n-min", type=int, default=2)
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--iterations", type=int, default=5000)
    p.add_argument("--runs", type=int, default=50)
    p.set_defaults(fn=cmd_benchmark_sa)

    p = sub.add_parser("compare", help="quantum pipeline vs simulated annealing")
    common(p)
    p.add_argument("--family", default="path", choices=["path", "cycle-mis"])
    p.add_argument("--n-min", type=int, default=4)
    p.add_argument("--n-max", type=int, default=8)
    p.add_argument("--iterations", type=int, default=2000)
    p.add_argument("--runs", type=int, default=20)
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("noise-study", help="post-hoc vs in-loop laser noise")
    common(p)
    p.add_argument("--level", type=float, default=0.08)
    p.add_argument("--draws", type=int, default=50)
    p.set_defaults(fn=cmd_noise_study)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (InfeasibleScaleError, EmbeddingError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except Exception as exc:  # noqa: BLE001
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
