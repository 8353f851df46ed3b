"""Command-line entry point: ``infoclus run`` and ``infoclus bench``."""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import plots, report
from .bench import run_bench
from .dataset_io import load_dataset, load_embedding
from .errors import InfoClusError
from .hierarchy import LINKAGES, annotate_stats, build_dendrogram, load_dendrogram
from .kmeans import kmeans_generate
from .search import GENERATORS, SearchConfig, greedy_search
from .stats import ScoreParams

DEFAULT_BETA = 1.5
DEFAULT_TIME_BUDGET = 5.0


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _non_negative(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {v}")
    return v


def _sizes(text: str) -> list[int]:
    try:
        return [_positive_int(t) for t in text.split(",") if t.strip()]
    except argparse.ArgumentTypeError as exc:
        raise argparse.ArgumentTypeError(f"--sizes: {exc}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="infoclus",
        description="Partition a 2-D embedding into clusters explained by a few informative attributes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser(
        "run", help="search for the best partitioning with explanations",
        description="Search for the partitioning with explanations that maximises the "
                    "explanation ratio. Suggested settings: alpha between n/10 and n, beta around 1.5.",
    )
    run.add_argument("--data", required=True, help="CSV with a header row of attribute names")
    run.add_argument("--embedding", required=True, help="CSV with 2 columns, one row per data row")
    run.add_argument("--alpha", type=_non_negative, default=None,
                     help="complexity offset (default n/10; suggested range n/10 .. n)")
    run.add_argument("--beta", type=float, default=DEFAULT_BETA,
                     help="complexity exponent, >= 1 (default 1.5)")
    run.add_argument("--min-att", type=_positive_int, default=1)
    run.add_argument("--max-att", type=_positive_int, default=5)
    run.add_argument("--time-budget", type=_non_negative, default=None, metavar="SECONDS",
                     help=f"search time budget (default {DEFAULT_TIME_BUDGET:g}s when no iteration cap is given)")
    run.add_argument("--max-iterations", type=_positive_int, default=None)
    run.add_argument("--linkage", choices=LINKAGES, default="ward")
    run.add_argument("--generator", choices=GENERATORS, default="hierarchical")
    run.add_argument("--k-min", type=_positive_int, default=2)
    run.add_argument("--k-max", type=_positive_int, default=None, help="default min(32, n)")
    run.add_argument("--min-cluster-size", type=_positive_int, default=2)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--dendrogram", default=None,
                     help="merge table CSV (left_child,right_child,height,count) used instead of clustering")
    run.add_argument("--kind", choices=("numeric", "categorical"), default=None,
                     help="force the attribute kind instead of inferring it")
    run.add_argument("--out-dir", default="./infoclus-out")
    run.add_argument("--no-plots", action="store_true")

    bench = sub.add_parser("bench", help="time initialization, iterations and partitionings")
    bench.add_argument("--sizes", type=_sizes, required=True, help="comma-separated data sizes")
    bench.add_argument("--features", type=_positive_int, default=9)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--iterations", type=_positive_int, default=3)
    bench.add_argument("--out-dir", default="./infoclus-out")
    return parser


def cmd_run(args, parser) -> int:
    if args.min_att > args.max_att:
        parser.error("--min-att must not exceed --max-att")
    if args.beta < 1:
        parser.error("--beta must be >= 1")
    t_start = time.perf_counter()
    dataset = load_dataset(args.data, args.kind)
    embedding = load_embedding(args.embedding, dataset.n)
    alpha = dataset.n / 10 if args.alpha is None else args.alpha
    time_budget = args.time_budget
    if time_budget is None and args.max_iterations is None:
        time_budget = DEFAULT_TIME_BUDGET
    k_max = args.k_max if args.k_max is not None else min(32, dataset.n)
    config = SearchConfig(
        score=ScoreParams(alpha, args.beta),
        minatt=args.min_att,
        maxatt=args.max_att,
        time_budget=time_budget,
        max_iterations=args.max_iterations,
        min_cluster_size=args.min_cluster_size,
        generator=args.generator,
        k_range=(args.k_min, k_max) if args.generator == "kmeans" else None,
        seed=args.seed,
    )
    if args.generator == "hierarchical":
        t0 = time.perf_counter()
        if args.dendrogram:
            tree = load_dendrogram(args.dendrogram, dataset.n)
        else:
            tree = build_dendrogram(embedding, args.linkage)
        tree = annotate_stats(tree, dataset)
        init_seconds = time.perf_counter() - t0
        pwx, log = greedy_search(tree, dataset, config)
    else:
        init_seconds = 0.0
        pwx, log = kmeans_generate(embedding, dataset, config)
    total = time.perf_counter() - t_start

    echo = {
        "data": args.data, "embedding": args.embedding, "dendrogram": args.dendrogram,
        "alpha": alpha, "beta": args.beta, "min_att": args.min_att, "max_att": args.max_att,
        "time_budget": time_budget, "max_iterations": args.max_iterations,
        "linkage": None if args.dendrogram else args.linkage, "generator": args.generator,
        "k_min": args.k_min if args.generator == "kmeans" else None,
        "k_max": k_max if args.generator == "kmeans" else None,
        "min_cluster_size": args.min_cluster_size, "seed": args.seed,
    }
    result = report.run_result(config=echo, dataset=dataset, generator=args.generator, log=log,
                               pwx=pwx, init_seconds=init_seconds, total_seconds=total)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "result.json").write_text(report.dumps(result), encoding="utf-8")
    if not args.no_plots:
        sizes = [c.size for c in pwx.partitioning.clusters]
        (out / "scatter.svg").write_text(
            plots.scatter_svg(embedding.coords, pwx.partitioning.assignment, sizes,
                              title=f"R = {pwx.ratio:.4g}"), encoding="utf-8")
        (out / "explanations.svg").write_text(plots.explanations_svg(result), encoding="utf-8")
    print(f"{len(pwx.partitioning.clusters)} clusters, ratio {pwx.ratio:.6g}, "
          f"{len(log)} iterations -> {out}")
    return 0


def cmd_bench(args) -> int:
    result = run_bench(args.sizes, args.features, seed=args.seed, iterations=args.iterations)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "bench.json").write_text(json.dumps(result, indent=2) + "\n", encoding="utf-8")
    for rec in result["records"]:
        print(f"n={rec['n']}: init {rec['initialization_seconds']:.3f}s, "
              f"iteration {rec['avg_iteration_seconds']:.4f}s, "
              f"partitioning {rec['avg_partitioning_seconds']:.2e}s")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args, parser)
        return cmd_bench(args)
    except (InfoClusError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
