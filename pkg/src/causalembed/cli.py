"""Command-line pipeline: gen, embed, verify, query, eval, export-plot.

Exit codes: 0 success (and perfect where that applies), 2 for a run that
finished but did not reach a perfect embedding, 1 for errors. Config
precedence is flags > config file > built-in defaults.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from .embedding import Embedding, EmbeddingConfig, embed
from .hierarchy import (
    HierarchyGraph,
    ParseError,
    StructureError,
    generate_hierarchy,
    load_edge_list,
    transitive_closure,
    write_edge_list,
)
from .metrics import evaluate
from .repair import perfect_embed, verify_all
from .retrieval import retrieve_chain, detected_parent_table

CONFIG_KEYS = ("margin", "parent_share", "seed", "max_sweeps")


def _digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _build_config(args) -> EmbeddingConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(json.loads(Path(args.config).read_text(encoding="utf-8")))
    if getattr(args, "dim", None) is not None:
        values["spatial_dim"] = args.dim - 1
    for key, flag in (
        ("margin", "eps1"),
        ("parent_share", "eps2"),
        ("seed", "seed"),
        ("max_sweeps", "max_sweeps"),
    ):
        flag_value = getattr(args, flag, None)
        if flag_value is not None:
            values[key] = flag_value
    return EmbeddingConfig.from_dict(values)


def _parse_gen_spec(spec: str, seed: int) -> HierarchyGraph:
    params = {"branching": 4, "seed": seed}
    for item in spec.split(","):
        key, _, raw = item.partition("=")
        if not _:
            raise ValueError(f"bad gen spec item {item!r}, expected key=value")
        params[key.strip()] = raw.strip()
    n = int(params["n"])
    depth = int(params.get("depth", 10))
    branching = int(params["branching"])
    gen_seed = int(params["seed"])
    two_parent = float(params.get("two_parent", 0))
    if two_parent >= 1:
        count, fraction = int(two_parent), 0.0
    else:
        count, fraction = None, two_parent
    return generate_hierarchy(
        n, depth, branching, fraction, gen_seed, two_parent_count=count
    )


def _load_graph(args) -> tuple[HierarchyGraph, str]:
    """Graph plus the content digest of its canonical edge list."""
    if getattr(args, "gen", None):
        graph = _parse_gen_spec(args.gen, args.seed or 0)
        text = write_edge_list(graph)
        if getattr(args, "save_edges", None):
            Path(args.save_edges).write_text(text, encoding="utf-8")
        return graph, _digest(text.encode("utf-8"))
    data = Path(args.pairs).read_bytes()
    graph = load_edge_list(
        data,
        tree=getattr(args, "tree", False),
        allow_multiple_roots=getattr(args, "allow_multi_root", False),
    )
    return graph, _digest(data)


def _manifest_path(out: Path) -> Path:
    if out.suffix == ".json":
        return out.with_suffix(".manifest.json")
    return out.with_name(out.name + ".manifest.json")


def _check_digest(emb: Embedding, digest: str) -> None:
    if emb.input_digest is not None and emb.input_digest != digest:
        raise ValueError(
            "edge list does not match the embedding's input digest "
            f"({digest[:12]}... vs {emb.input_digest[:12]}...)"
        )


def cmd_embed(args) -> int:
    config = _build_config(args)
    timings = {}
    t0 = time.perf_counter()
    graph, digest = _load_graph(args)
    timings["load"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    if args.skip_repair:
        emb = embed(transitive_closure(graph), graph.tokens, config)
        report = verify_all(emb, graph)
    else:
        emb, report = perfect_embed(graph, config)
    timings["embed_and_repair"] = time.perf_counter() - t0

    emb.input_digest = digest
    out = Path(args.out)
    emb.save(out)
    manifest = {
        "config": config.to_dict(),
        "input_digest": digest,
        "timings": timings,
        "outcome": {
            "converged": emb.converged,
            "perfect": report.is_perfect,
            "sweeps_run": emb.sweeps_run,
            "perfect_fraction": report.perfect_fraction,
        },
    }
    _manifest_path(out).write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )
    print(
        json.dumps(
            {
                "embedding": str(out),
                "tokens": len(emb),
                "converged": emb.converged,
                "perfect": report.is_perfect,
                "perfect_fraction": report.perfect_fraction,
            }
        )
    )
    return 0 if report.is_perfect else 2


def cmd_verify(args) -> int:
    emb = Embedding.load(args.emb)
    data = Path(args.pairs).read_bytes()
    _check_digest(emb, _digest(data))
    graph = load_edge_list(data, allow_multiple_roots=True)
    report = verify_all(emb, graph)
    sys.stdout.write(report.to_json(emb.labels))
    return 0 if report.is_perfect else 2


def cmd_query(args) -> int:
    emb = Embedding.load(args.emb)
    if args.all:
        tokens = range(len(emb))
    else:
        tokens = [emb.index_of(label) for label in args.token]
    for token in tokens:
        print(retrieve_chain(emb, token).to_json_line(emb.labels))
    return 0


def cmd_eval(args) -> int:
    emb = Embedding.load(args.emb)
    data = Path(args.pairs).read_bytes()
    _check_digest(emb, _digest(data))
    graph = load_edge_list(data, allow_multiple_roots=True)
    result = evaluate(emb, graph)
    sys.stdout.write(result.to_json())
    if args.ranks_csv:
        Path(args.ranks_csv).write_text(
            result.per_edge_csv(emb.labels), encoding="utf-8"
        )
    return 0


def cmd_export_plot(args) -> int:
    emb = Embedding.load(args.emb)
    prefix = Path(args.out)
    d = emb.config.spatial_dim

    header = "label,t," + ",".join(f"x{i + 1}" for i in range(d))
    rows = [header]
    for i, label in enumerate(emb.labels):
        coords = ",".join(repr(float(v)) for v in emb.x[i])
        rows.append(f"{label},{emb.t[i]!r},{coords}")
    points_path = prefix.with_name(prefix.name + ".points.csv")
    points_path.write_text("\n".join(rows) + "\n", encoding="utf-8")

    table = detected_parent_table(emb)
    edge_rows = ["child,parent"]
    for i, parents in enumerate(table):
        for p in parents:
            edge_rows.append(f"{emb.labels[i]},{emb.labels[p]}")
    edges_path = prefix.with_name(prefix.name + ".edges.csv")
    edges_path.write_text("\n".join(edge_rows) + "\n", encoding="utf-8")

    written = [str(points_path), str(edges_path)]
    if args.cones:
        if d != 2:
            raise ValueError("cone outlines are only exported for 2 spatial dimensions")
        depth = args.cone_depth
        samples = ["label,k,t,x1,x2"]
        for i, label in enumerate(emb.labels):
            for k in range(args.cone_points):
                angle = 2.0 * math.pi * k / args.cone_points
                px = emb.x[i, 0] + depth * math.cos(angle)
                py = emb.x[i, 1] + depth * math.sin(angle)
                samples.append(f"{label},{k},{emb.t[i] - depth!r},{px!r},{py!r}")
        cones_path = prefix.with_name(prefix.name + ".cones.csv")
        cones_path.write_text("\n".join(samples) + "\n", encoding="utf-8")
        written.append(str(cones_path))
    print(json.dumps({"written": written}))
    return 0


def cmd_gen(args) -> int:
    frac = args.two_parent
    if frac >= 1:
        count, fraction = int(frac), 0.0
    else:
        count, fraction = None, frac
    graph = generate_hierarchy(
        args.n,
        args.depth,
        args.branching,
        fraction,
        args.seed,
        two_parent_count=count,
    )
    text = write_edge_list(graph, args.out)
    print(graph.summary_json())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causalembed",
        description="Embed hierarchies in flat spacetime and query them causally.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_flags(p):
        p.add_argument("--dim", type=int, default=None,
                       help="total spacetime dimension (default 3: time + 2 space)")
        p.add_argument("--eps1", type=float, default=None,
                       help="causal margin added when fixing a violated pair")
        p.add_argument("--eps2", type=float, default=None,
                       help="share of each fix pushed onto the ancestor")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--max-sweeps", type=int, default=None, dest="max_sweeps")
        p.add_argument("--config", default=None, help="JSON config file")

    p_embed = sub.add_parser("embed", help="embed an edge list (with repair)")
    src = p_embed.add_mutually_exclusive_group(required=True)
    src.add_argument("--pairs", help="child<TAB>parent edge list")
    src.add_argument("--gen", help="synthetic spec, e.g. n=1182,depth=10,two_parent=10")
    p_embed.add_argument("--out", default="embedding.json")
    p_embed.add_argument("--save-edges", dest="save_edges", default=None,
                         help="with --gen, also write the generated edge list here")
    p_embed.add_argument("--tree", action="store_true",
                         help="require strict tree input")
    p_embed.add_argument("--allow-multi-root", dest="allow_multi_root",
                         action="store_true")
    p_embed.add_argument("--skip-repair", dest="skip_repair", action="store_true",
                         help="stop after plain causality enforcement")
    add_config_flags(p_embed)
    p_embed.set_defaults(func=cmd_embed)

    p_verify = sub.add_parser("verify", help="verify retrieval against an edge list")
    p_verify.add_argument("--emb", required=True)
    p_verify.add_argument("--pairs", required=True)
    p_verify.set_defaults(func=cmd_verify)

    p_query = sub.add_parser("query", help="retrieve chains for tokens")
    p_query.add_argument("--emb", required=True)
    p_query.add_argument("--token", action="append", default=[])
    p_query.add_argument("--all", action="store_true")
    p_query.set_defaults(func=cmd_query)

    p_eval = sub.add_parser("eval", help="mean rank and MAP against an edge list")
    p_eval.add_argument("--emb", required=True)
    p_eval.add_argument("--pairs", required=True)
    p_eval.add_argument("--ranks-csv", dest="ranks_csv", default=None,
                        help="also write per-edge ranks as CSV")
    p_eval.set_defaults(func=cmd_eval)

    p_plot = sub.add_parser("export-plot", help="CSV coordinates and retrieved links")
    p_plot.add_argument("--emb", required=True)
    p_plot.add_argument("--out", required=True, help="output path prefix")
    p_plot.add_argument("--cones", action="store_true",
                        help="also sample past light-cone outlines (2 spatial dims)")
    p_plot.add_argument("--cone-depth", dest="cone_depth", type=float, default=0.1)
    p_plot.add_argument("--cone-points", dest="cone_points", type=int, default=24)
    p_plot.set_defaults(func=cmd_export_plot)

    p_gen = sub.add_parser("gen", help="generate a synthetic hierarchy edge list")
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--depth", type=int, default=10)
    p_gen.add_argument("--branching", type=int, default=4)
    p_gen.add_argument("--two-parent", dest="two_parent", type=float, default=0.0,
                       help="count (>=1) or fraction (<1) of two-parent leaves")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(func=cmd_gen)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, StructureError, ValueError, KeyError, OSError) as exc:
        message = exc.args[0] if exc.args else exc
        print(f"error: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
