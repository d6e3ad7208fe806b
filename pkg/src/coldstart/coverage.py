"""Unsupervised class-discovery harness: how often does a strategy hit every class?"""
from __future__ import annotations

import fnmatch
import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .metricspace import Metric, PointSet
from .selectors import MinimaxConfig, select
from .tsne import TsneParams, embed

LAYERS = ("backbone", "projection-head")
TRANSFORMS = ("none", "tsne")
DISTANCE_METHODS = ("greedy", "greedy-minimax", "greedy-maximin", "kmedoids")
RANDOM_METHODS = ("random", "random-class-balanced")


@dataclass(frozen=True)
class StrategySpec:
    method: str
    metric: str | None = None
    transform: str | None = None
    layer: str | None = None

    def __post_init__(self) -> None:
        if self.method in RANDOM_METHODS:
            if (self.metric, self.transform, self.layer) != (None, None, None):
                raise ValueError(f"{self.method} takes no metric/transform/layer")
        elif self.method in DISTANCE_METHODS:
            object.__setattr__(self, "metric", Metric.parse(self.metric or "euclidean").value)
            if self.transform not in TRANSFORMS:
                raise ValueError(f"transform must be one of {TRANSFORMS}")
            if self.layer not in LAYERS:
                raise ValueError(f"layer must be one of {LAYERS}")
            if self.metric not in ("euclidean", "cosine"):
                raise ValueError(f"metric {self.metric!r} not allowed in a strategy")
        else:
            raise ValueError(f"unknown method {self.method!r}")

    @property
    def name(self) -> str:
        if self.method in RANDOM_METHODS:
            return self.method
        return f"{self.method}/{self.metric}/{self.transform}/{self.layer}"

    @classmethod
    def parse(cls, name: str) -> "StrategySpec":
        parts = name.strip().split("/")
        if len(parts) == 1:
            return cls(parts[0])
        if len(parts) != 4:
            raise ValueError(f"strategy {name!r} must be 'method/metric/transform/layer'")
        return cls(*parts)

    def to_dict(self) -> dict:
        return {"method": self.method, "metric": self.metric, "transform": self.transform, "layer": self.layer}


def all_strategies() -> list[StrategySpec]:
    """The 32 distance-based combinations followed by the two random baselines."""
    out = [
        StrategySpec(m, metric, t, layer)
        for m, metric, t, layer in itertools.product(DISTANCE_METHODS, ("euclidean", "cosine"), TRANSFORMS, LAYERS)
    ]
    return out + [StrategySpec(m) for m in RANDOM_METHODS]


def filter_strategies(patterns: Sequence[str] | str | None) -> list[StrategySpec]:
    """Strategies whose name matches any of the glob patterns (all when None or 'all')."""
    if patterns is None:
        return all_strategies()
    if isinstance(patterns, str):
        patterns = [p for p in patterns.split(",") if p]
    if any(p == "all" for p in patterns):
        return all_strategies()
    out = [s for s in all_strategies() if any(fnmatch.fnmatchcase(s.name, p) for p in patterns)]
    if not out:
        raise ValueError(f"no strategy matches {list(patterns)}")
    return out


def budget_grid(num_classes: int, cap: int = 100) -> list[int]:
    """Multiples of the class count up to and including ``cap``."""
    if num_classes < 1:
        raise ValueError("num_classes must be >= 1")
    return list(range(num_classes, cap + 1, num_classes))


@dataclass
class CoverageReport:
    dataset: str
    strategy: StrategySpec
    budgets: list[int]
    runs_per_budget: int
    covered: list[int]
    proportion: list[float]
    dataset_score: float
    selections: dict[str, list[list[str]]] | None = field(default=None)

    def to_dict(self) -> dict:
        d = {
            "dataset": self.dataset,
            "strategy": self.strategy.to_dict(),
            "name": self.strategy.name,
            "budgets": list(self.budgets),
            "runs_per_budget": self.runs_per_budget,
            "covered": list(self.covered),
            "proportion": list(self.proportion),
            "dataset_score": self.dataset_score,
        }
        if self.selections is not None:
            d["selections"] = self.selections
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CoverageReport":
        s = d["strategy"]
        return cls(
            d["dataset"],
            StrategySpec(s["method"], s["metric"], s["transform"], s["layer"]),
            list(d["budgets"]),
            d["runs_per_budget"],
            list(d["covered"]),
            list(d["proportion"]),
            d["dataset_score"],
            d.get("selections"),
        )


def align_labels(P: PointSet, labels: Mapping[str, object] | Sequence) -> list:
    """Per-point labels in P's order. A mapping must cover every id of P."""
    if isinstance(labels, Mapping):
        missing = [i for i in P.ids if i not in labels]
        if missing:
            shown = ", ".join(missing[:10]) + (" ..." if len(missing) > 10 else "")
            raise KeyError(f"{len(missing)} ids have no label: {shown}")
        return [labels[i] for i in P.ids]
    labels = list(labels)
    if len(labels) != P.count:
        raise ValueError(f"{len(labels)} labels for {P.count} points")
    return labels


class _Embeddings:
    """Per-run t-SNE layouts. A layout depends only on (layer, metric, seed), so every
    budget that shares a seed gets the same fresh embedding for that run."""

    def __init__(self, embeddings: Mapping[str, PointSet], params: TsneParams):
        self.embeddings = embeddings
        self.params = params
        self._cache: dict[tuple, PointSet] = {}

    def get(self, spec: StrategySpec, seed: int) -> tuple[PointSet, Metric]:
        base = self.embeddings[spec.layer] if spec.layer else next(iter(self.embeddings.values()))
        metric = Metric.parse(spec.metric or "euclidean")
        if spec.transform != "tsne":
            return base, metric
        key = (spec.layer, metric, seed)
        if key not in self._cache:
            self._cache[key] = embed(base, metric, self.params, seed)
        return self._cache[key], Metric.EUCLIDEAN


def run_coverage(
    embeddings: Mapping[str, PointSet] | PointSet,
    labels: Mapping[str, object] | Sequence,
    strategy: StrategySpec,
    budgets: Sequence[int],
    runs: int = 20,
    base_seed: int = 0,
    dataset: str = "dataset",
    tsne_params: TsneParams | None = None,
    cfg: MinimaxConfig | None = None,
    workers: int = 1,
    keep_selections: bool = False,
    _cache: _Embeddings | None = None,
) -> CoverageReport:
    if isinstance(embeddings, PointSet):
        embeddings = {layer: embeddings for layer in LAYERS}
    if not budgets:
        raise ValueError("budgets must be non-empty")
    if strategy.layer and strategy.layer not in embeddings:
        raise KeyError(f"no embedding for layer {strategy.layer!r}")
    ref = next(iter(embeddings.values()))
    for layer, P in embeddings.items():
        if P.ids != ref.ids:
            raise ValueError(f"layer {layer!r} ids do not match the other layers")
    y = align_labels(ref, labels)
    classes = set(y)
    for b in budgets:
        if not 1 <= b <= ref.count:
            raise ValueError(f"budget {b} out of range [1, {ref.count}]")
    cache = _cache or _Embeddings(embeddings, tsne_params or TsneParams())

    def work(cell):
        b, seed = cell
        if strategy.method == "random-class-balanced" and b < len(classes):
            return cell, None  # cannot cover by pigeonhole; the selector rejects this budget
        P, metric = cache.get(strategy, seed)
        sel = select(P, strategy.method, b, metric, seed, labels=y, cfg=cfg)
        if len(set(sel.indices)) != b:
            raise RuntimeError(f"selection of size {len(sel.indices)} for budget {b}")
        return cell, sel.indices

    cells = [(b, base_seed + r) for b in budgets for r in range(runs)]
    if workers > 1 and strategy.transform == "tsne":
        # warm the embedding cache in parallel; selection itself is cheap
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(lambda s: cache.get(strategy, s), sorted({s for _, s in cells})))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = dict(pool.map(work, cells))
    else:
        results = dict(map(work, cells))

    covered, selections = [], {}
    for b in budgets:
        hits = 0
        picks = []
        for r in range(runs):
            idx = results[(b, base_seed + r)]
            if idx is None:
                picks.append([])
                continue
            picks.append([ref.ids[i] for i in idx])
            if {y[i] for i in idx} == classes:
                hits += 1
        covered.append(hits)
        selections[str(b)] = picks
    proportion = [c / runs for c in covered]
    return CoverageReport(
        dataset,
        strategy,
        list(budgets),
        runs,
        covered,
        proportion,
        float(np.mean(proportion)),
        selections if keep_selections else None,
    )


def score_strategy(reports: Sequence[CoverageReport]) -> float:
    """Average of per-dataset scores (each already averaged over its budgets)."""
    if not reports:
        raise ValueError("no reports to score")
    return float(np.mean([r.dataset_score for r in reports]))


def rank_strategies(reports: Sequence[CoverageReport]) -> list[dict]:
    """Summary rows sorted by average score (best first), one per strategy."""
    by_name: dict[str, list[CoverageReport]] = {}
    for r in reports:
        by_name.setdefault(r.strategy.name, []).append(r)
    rows = []
    for name, rs in by_name.items():
        s = rs[0].strategy
        rows.append(
            {
                "name": name,
                "method": s.method,
                "metric": s.metric or "",
                "transform": s.transform or "",
                "layer": s.layer or "",
                "datasets": {r.dataset: r.dataset_score for r in rs},
                "average_score": score_strategy(rs),
            }
        )
    rows.sort(key=lambda row: (-row["average_score"], row["name"]))
    return rows
