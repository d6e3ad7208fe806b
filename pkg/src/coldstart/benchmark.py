"""Multi-seed benchmark harness for the k-center selectors on TSPLIB instances."""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .metricspace import Metric, PointSet
from .selectors import MinimaxConfig, greedy_k_center, refine_maximin, refine_minimax
from .tsplib import TspInstance, instance_to_pointset

BENCH_METHODS = ("greedy", "greedy-minimax", "greedy-maximin")

# Published mini-max values: (OPT or None, greedy mean, greedy std, greedy-minimax mean, greedy-minimax std).
# bm33708 k=75 appears twice in the reference table; the second row (BKS 593) is omitted.
PUBLISHED_MINIMAX = {
    ("u1060", 20): (1581, 2109, 87, 1839, 79),
    ("u1060", 40): (1021, 1358, 43, 1268, 41),
    ("u1060", 60): (781, 1055, 21, 974, 21),
    ("u1060", 80): (652, 878, 24, 815, 23),
    ("u1060", 100): (570, 740, 12, 687, 23),
    ("sw24978", 25): (None, 1757, 70, 1446, 96),
    ("sw24978", 50): (None, 1181, 24, 1015, 51),
    ("sw24978", 75): (None, 925, 17, 818, 23),
    ("sw24978", 100): (None, 784, 15, 713, 16),
    ("bm33708", 25): (None, 1598, 62, 1260, 46),
    ("bm33708", 50): (None, 1054, 28, 841, 18),
    ("bm33708", 75): (None, 825, 10, 694, 19),
    ("ch71009", 25): (None, 6187, 139, 4880, 186),
    ("ch71009", 50): (None, 3996, 87, 3400, 68),
    ("ch71009", 75): (None, 3223, 64, 2777, 86),
    ("ch71009", 100): (None, 2698, 54, 2356, 54),
}


def summarize(values: Sequence[float]) -> tuple[float, float | None]:
    """Mean and sample standard deviation (None for a single value)."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("cannot summarize an empty list")
    mean = float(v.mean())
    std = float(v.std(ddof=1)) if v.size >= 2 else None
    return mean, std


@dataclass
class BenchReport:
    instance: str
    k: int
    method: str
    objective: str  # "minimax" or "maximin"
    runs: int
    seeds: list[int]
    values: list[float]
    mean: float
    std: float | None
    wall_time_seconds: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "instance": self.instance,
            "k": self.k,
            "method": self.method,
            "objective": self.objective,
            "runs": self.runs,
            "seeds": list(self.seeds),
            "values": list(self.values),
            "mean": self.mean,
            "std": self.std,
            "wall_time_seconds": list(self.wall_time_seconds),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BenchReport":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__})


def run_one(P: PointSet, method: str, k: int, seed: int, metric: Metric, cfg: MinimaxConfig) -> tuple[float, float, float]:
    """Return (phi_mM, phi_Mm, seconds) for a single seeded run."""
    t0 = time.perf_counter()
    sel, _ = greedy_k_center(P, k, metric, seed)
    if method == "greedy-minimax":
        sel = refine_minimax(P, sel, metric, cfg, seed)
    elif method == "greedy-maximin":
        sel = refine_maximin(P, sel, metric, cfg.max_outer_iters)
    elif method != "greedy":
        raise ValueError(f"unknown benchmark method {method!r}")
    dt = time.perf_counter() - t0
    obj = sel.objectives
    return obj.phi_mM, (obj.phi_Mm if obj.phi_Mm is not None else float("nan")), dt


def run_benchmark(
    inst: TspInstance | PointSet,
    method: str,
    ks: Sequence[int],
    runs: int = 10,
    base_seed: int = 0,
    cfg: MinimaxConfig | None = None,
    metric: Metric | str = Metric.EUCLIDEAN,
    objective: str | None = None,
    workers: int = 1,
    name: str | None = None,
) -> list[BenchReport]:
    """Run ``method`` for every k with seeds base_seed .. base_seed + runs - 1.

    The recorded objective defaults to maxi-min for greedy-maximin and mini-max otherwise.
    """
    if method not in BENCH_METHODS:
        raise ValueError(f"method must be one of {BENCH_METHODS}")
    if runs < 1:
        raise ValueError("runs must be >= 1")
    cfg = cfg or MinimaxConfig()
    metric = Metric.parse(metric)
    if isinstance(inst, TspInstance):
        P, name = instance_to_pointset(inst), name or inst.name
    else:
        P, name = inst, name or "points"
    for k in ks:
        if not 1 <= k <= P.count:
            raise ValueError(f"k={k} out of range [1, {P.count}]")
    objective = objective or ("maximin" if method == "greedy-maximin" else "minimax")
    cells = [(k, base_seed + r) for k in ks for r in range(runs)]

    def work(cell):
        k, seed = cell
        return cell, run_one(P, method, k, seed, metric, cfg)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = dict(pool.map(work, cells))
    else:
        results = dict(map(work, cells))

    reports = []
    for k in ks:
        seeds = [base_seed + r for r in range(runs)]
        out = [results[(k, s)] for s in seeds]
        values = [o[0] if objective == "minimax" else o[1] for o in out]
        mean, std = summarize(values)
        reports.append(
            BenchReport(name, k, method, objective, runs, seeds, values, mean, std, [o[2] for o in out])
        )
    return reports


def envelope(mean: float, std: float, sigmas: float = 3.0) -> tuple[float, float]:
    return mean - sigmas * std, mean + sigmas * std
