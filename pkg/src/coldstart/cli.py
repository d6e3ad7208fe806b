"""Command line entry point: ``coldstart select|benchmark|coverage|tsne``.

Exit codes: 0 success, 1 invalid input or flags, 2 failure while running.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from . import __version__
from .benchmark import BENCH_METHODS, run_benchmark
from .coverage import (
    TRANSFORMS,
    _Embeddings,
    budget_grid,
    filter_strategies,
    rank_strategies,
    run_coverage,
)
from .io import FormatError, atomic_write, dump_report, format_embeddings, read_embeddings, read_labels
from .metricspace import Metric, PointSet, evaluate
from .selectors import METHODS, MinimaxConfig, select
from .tsne import TsneParams, calibrate_bandwidths, embed, initial_layout, joint_affinities, optimize
from .tsplib import TsplibError, load_tsplib

log = logging.getLogger("coldstart")

WORKERS_ENV = "COLDSTART_WORKERS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def _tsne_params(args) -> TsneParams:
    try:
        return TsneParams(perplexity=args.perplexity, iterations=args.iterations)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# -- select ------------------------------------------------------------------


def cmd_select(args) -> int:
    P = read_embeddings(args.embeddings)
    metric = Metric.parse(args.metric)
    P.check_metric(metric)
    if args.n > P.count:
        raise UsageError(f"--n {args.n} exceeds the number of points ({P.count})")
    labels = None
    if args.method == "random-class-balanced":
        if not args.labels:
            raise UsageError("random-class-balanced needs --labels")
        lab = read_labels(args.labels)
        missing = [i for i in P.ids if i not in lab]
        if missing:
            raise UsageError(f"labels missing for ids: {', '.join(missing[:10])}")
        labels = [lab[i] for i in P.ids]
        if args.n < len(set(labels)):
            raise UsageError(f"--n {args.n} is below the number of classes ({len(set(labels))})")
    params = _tsne_params(args)
    space, sel_metric, tsne_info = P, metric, None
    if args.transform == "tsne":
        if params.perplexity >= P.count:
            raise UsageError(f"perplexity {params.perplexity} must be below the number of points ({P.count})")
        space = embed(P, metric, params, args.seed)
        sel_metric = Metric.EUCLIDEAN
        tsne_info = {"perplexity": params.perplexity, "iterations": params.iterations, "seed": args.seed, "metric": metric.value}
    cfg = MinimaxConfig(thresh=args.thresh)
    sel = select(space, args.method, args.n, sel_metric, args.seed, labels=labels, cfg=cfg)
    obj = evaluate(space, sel.indices, sel_metric)
    doc = {
        "command": "select",
        "method": args.method,
        "metric": metric.value,
        "selection_metric": sel_metric.value,
        "transform": args.transform,
        "tsne": tsne_info,
        "n": args.n,
        "seed": args.seed,
        "ids": [P.ids[i] for i in sel.indices],
        "indices": list(sel.indices),
        "objectives": {"phi_mM": obj.phi_mM, "phi_Mm": obj.phi_Mm, "phi_kmedoids": obj.phi_kmedoids},
    }
    atomic_write(args.output, dump_report(doc))
    return 0


# -- benchmark ---------------------------------------------------------------


def cmd_benchmark(args) -> int:
    inst = load_tsplib(args.tsplib)
    for k in args.ks:
        if not 1 <= k <= inst.dimension:
            raise UsageError(f"k={k} out of range [1, {inst.dimension}]")
    metric = Metric.EUCLIDEAN_NINT if args.round else Metric.EUCLIDEAN
    cfg = MinimaxConfig(thresh=args.thresh)
    reports = run_benchmark(inst, args.method, args.ks, args.runs, args.seed, cfg, metric, workers=_workers())
    doc = {
        "command": "benchmark",
        "instance": inst.name,
        "dimension": inst.dimension,
        "metric": metric.value,
        "thresh": args.thresh,
        "reports": [r.to_dict() for r in reports],
    }
    atomic_write(args.output, dump_report(doc))
    for r in reports:
        std = "-" if r.std is None else f"{r.std:.0f}"
        print(f"{r.instance}\tk={r.k}\t{r.method}\t{r.objective}\t{r.mean:.0f}±{std}")
    return 0


# -- coverage ----------------------------------------------------------------


def cmd_coverage(args) -> int:
    embeddings = {}
    if args.backbone:
        embeddings["backbone"] = read_embeddings(args.backbone)
    if args.projection:
        embeddings["projection-head"] = read_embeddings(args.projection)
    if not embeddings:
        raise UsageError("give --backbone and/or --projection")
    ids = next(iter(embeddings.values())).ids
    for layer, P in embeddings.items():
        if P.ids != ids:
            diff = sorted(set(P.ids) ^ set(ids))[:10]
            raise UsageError(f"ids of layer {layer!r} do not match: {', '.join(diff) or 'order differs'}")
    labels = read_labels(args.labels)
    missing = [i for i in ids if i not in labels]
    if missing:
        raise UsageError(f"{len(missing)} ids have no label: {', '.join(missing[:10])}")
    try:
        strategies = filter_strategies(args.strategies)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    absent = sorted({s.layer for s in strategies if s.layer and s.layer not in embeddings})
    if absent:
        raise UsageError(f"selected strategies need embeddings for layer(s): {', '.join(absent)}")
    n_classes = len({labels[i] for i in ids})
    budgets = args.budgets or budget_grid(n_classes, args.cap)
    if not budgets:
        raise UsageError(f"empty budget grid: {n_classes} classes exceed cap {args.cap}")
    bad = [b for b in budgets if not 1 <= b <= len(ids)]
    if bad:
        raise UsageError(f"budgets out of range [1, {len(ids)}]: {bad}")
    params = _tsne_params(args)
    if any(s.transform == "tsne" for s in strategies) and params.perplexity >= len(ids):
        raise UsageError(f"perplexity {params.perplexity} must be below the number of points ({len(ids)})")
    cfg = MinimaxConfig(thresh=args.thresh)
    cache = _Embeddings(embeddings, params)
    workers = _workers()
    reports = []
    for s in strategies:
        log.info("coverage: %s", s.name)
        reports.append(
            run_coverage(
                embeddings,
                labels,
                s,
                budgets,
                args.runs,
                args.seed,
                args.dataset,
                params,
                cfg,
                workers,
                args.keep_selections,
                _cache=cache,
            )
        )
    table = rank_strategies(reports)
    doc = {
        "command": "coverage",
        "dataset": args.dataset,
        "classes": n_classes,
        "budgets": budgets,
        "runs": args.runs,
        "seed": args.seed,
        "reports": [r.to_dict() for r in reports],
        "summary": table,
    }
    atomic_write(args.output, dump_report(doc))
    print(f"{'method':<22}{'metric':<11}{'transform':<10}{'layer':<17}{args.dataset:>10}{'average':>9}")
    for row in table:
        print(
            f"{row['method']:<22}{row['metric']:<11}{row['transform']:<10}{row['layer']:<17}"
            f"{row['datasets'][args.dataset]:>10.2f}{row['average_score']:>9.2f}"
        )
    return 0


# -- tsne --------------------------------------------------------------------


def cmd_tsne(args) -> int:
    P = read_embeddings(args.embeddings)
    metric = Metric.parse(args.metric)
    P.check_metric(metric)
    params = _tsne_params(args)
    if params.perplexity >= P.count:
        raise UsageError(f"perplexity {params.perplexity} must be below the number of points ({P.count})")
    _, cond = calibrate_bandwidths(P, metric, params)
    joint = joint_affinities(cond)
    Y, trace = optimize(joint, initial_layout(P.count, args.seed), params)
    out = PointSet(Y, P.ids)
    footer = [
        f"metric={metric.value} perplexity={params.perplexity!r} iterations={params.iterations} seed={args.seed}",
        f"kl_divergence_initial={trace[0]!r}",
        f"kl_divergence={trace[params.iterations]!r}",
    ]
    atomic_write(args.output, format_embeddings(out, footer))
    return 0


# -- wiring ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="coldstart", description="Representative subset selection for cold-start labelling.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def tsne_flags(q, iterations=1000):
        q.add_argument("--perplexity", type=float, default=40.0)
        q.add_argument("--iterations", type=_positive, default=iterations)

    s = sub.add_parser("select", help="select a subset of points to label")
    s.add_argument("--embeddings", required=True)
    s.add_argument("--method", choices=METHODS, required=True)
    s.add_argument("--metric", choices=["euclidean", "cosine"], default="euclidean")
    s.add_argument("--transform", choices=TRANSFORMS, default="none")
    s.add_argument("--n", type=_positive, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--labels", help="id,label CSV (random-class-balanced only)")
    s.add_argument("--thresh", type=float, default=0.9999)
    s.add_argument("--output", required=True)
    tsne_flags(s)
    s.set_defaults(func=cmd_select)

    b = sub.add_parser("benchmark", help="multi-seed k-center benchmark on a TSPLIB instance")
    b.add_argument("--tsplib", required=True)
    b.add_argument("--method", choices=BENCH_METHODS, required=True)
    b.add_argument("--ks", type=_int_list, required=True)
    b.add_argument("--runs", type=_positive, default=10)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--thresh", type=float, default=0.9999)
    b.add_argument("--round", action="store_true", help="use TSPLIB nint-rounded distances")
    b.add_argument("--output", required=True)
    b.set_defaults(func=cmd_benchmark)

    c = sub.add_parser("coverage", help="class-discovery coverage over strategies")
    c.add_argument("--backbone")
    c.add_argument("--projection")
    c.add_argument("--labels", required=True)
    c.add_argument("--dataset", default="dataset")
    c.add_argument("--strategies", default="all", help="comma-separated glob patterns over strategy names")
    c.add_argument("--budgets", type=_int_list)
    c.add_argument("--cap", type=_positive, default=100)
    c.add_argument("--runs", type=_positive, default=20)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--thresh", type=float, default=0.9999)
    c.add_argument("--keep-selections", action="store_true")
    c.add_argument("--output", required=True)
    tsne_flags(c)
    c.set_defaults(func=cmd_coverage)

    t = sub.add_parser("tsne", help="2-D t-SNE embedding of an embedding file")
    t.add_argument("--embeddings", required=True)
    t.add_argument("--metric", choices=["euclidean", "cosine"], default="euclidean")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--output", required=True)
    tsne_flags(t)
    t.set_defaults(func=cmd_tsne)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors, --help, --version
        return exc.code if isinstance(exc.code, int) else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if hasattr(args, "thresh") and not 0 < args.thresh <= 1:
            raise UsageError(f"--thresh must lie in (0, 1], got {args.thresh}")
        return args.func(args)
    except (UsageError, FormatError, TsplibError, KeyError, ValueError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"coldstart {args.command}: error: {msg}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        log.debug("failure", exc_info=True)
        print(f"coldstart {args.command}: failed: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
