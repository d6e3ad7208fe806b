"""Label-selection algorithms: greedy k-center and its refinements, k-medoids, random baselines."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from .metricspace import (
    Metric,
    PointSet,
    Selection,
    _check_centers,
    assign_voronoi,
    evaluate,
    pairwise,
    to_all,
)

log = logging.getLogger(__name__)

METHODS = ("greedy", "greedy-minimax", "greedy-maximin", "kmedoids", "random", "random-class-balanced")


@dataclass(frozen=True)
class GreedyTrace:
    # entry i: nearest-center distance of the (i+2)-th center when it was added
    addition_distances: tuple[float, ...]


@dataclass(frozen=True)
class MinimaxConfig:
    thresh: float = 0.9999
    max_outer_iters: int = 100
    # beyond this many probe points the 1-center search falls back to a blockwise full scan
    one_center_enumeration_cap: int = 512

    def __post_init__(self) -> None:
        if not 0 < self.thresh <= 1:
            raise ValueError(f"thresh must lie in (0, 1], got {self.thresh}")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be >= 1")


def _check_n(P: PointSet, n: int) -> None:
    if not 1 <= n <= P.count:
        raise ValueError(f"n={n} out of range [1, {P.count}]")


def _farthest_first(
    P: PointSet, centers: list[int], n: int, metric: Metric, mind: NDArray | None = None
) -> tuple[list[int], list[float]]:
    """Extend ``centers`` in place to size n by farthest-first traversal."""
    if mind is None:
        mind = to_all(P, centers, metric).min(axis=1)
    score = mind.copy()
    score[centers] = -np.inf
    added = []
    while len(centers) < n:
        nxt = int(np.argmax(score))
        added.append(float(mind[nxt]))
        centers.append(nxt)
        d = to_all(P, nxt, metric)[:, 0]
        np.minimum(mind, d, out=mind)
        np.minimum(score, d, out=score)
        score[centers] = -np.inf
    return centers, added


def greedy_k_center(
    P: PointSet, n: int, metric: Metric | str = Metric.EUCLIDEAN, seed: int = 0
) -> tuple[Selection, GreedyTrace]:
    """Farthest-first traversal from a seeded uniformly random first center."""
    metric = Metric.parse(metric)
    _check_n(P, n)
    P.check_metric(metric)
    rng = np.random.default_rng(seed)
    first = int(rng.integers(P.count))
    centers, added = _farthest_first(P, [first], n, metric)
    sel = Selection(tuple(centers), "greedy", seed, evaluate(P, centers, metric))
    return sel, GreedyTrace(tuple(added))


# -- mini-max refinement -----------------------------------------------------


def _one_center_full(P: PointSet, members: NDArray[np.intp], metric: Metric) -> tuple[int, float]:
    best_pos, best_r = -1, np.inf
    step = max(1, 4_000_000 // len(members))
    for lo in range(0, len(members), step):
        ecc = pairwise(P, members[lo : lo + step], members, metric).max(axis=1)
        k = int(np.argmin(ecc))
        if ecc[k] < best_r:
            best_pos, best_r = lo + k, float(ecc[k])
    return int(members[best_pos]), best_r


def local_one_center(
    P: PointSet, members: Sequence[int], metric: Metric | str = Metric.EUCLIDEAN, cap: int | None = None
) -> tuple[int, float]:
    """Exact 1-center of ``members`` (the member minimising its largest distance to the others).

    Probe set starts from the coordinate-wise extreme members. The candidate minimising
    the largest distance to the probes gives a lower bound; it is accepted once its full
    eccentricity meets that bound, otherwise its farthest member joins the probes.
    Ties resolve to the earliest member in ``members``.
    """
    metric = Metric.parse(metric)
    m = np.asarray(members, dtype=np.intp).ravel()
    if m.size == 0:
        raise ValueError("empty member set")
    if m.size == 1:
        return int(m[0]), 0.0
    X = P.unit[m] if metric is Metric.COSINE else P.points[m]
    probes = np.unique(np.concatenate([X.argmin(axis=0), X.argmax(axis=0)]))
    lower = pairwise(P, m[probes], m, metric).max(axis=0)
    while True:
        c = int(np.argmin(lower))
        full = pairwise(P, m[c : c + 1], m, metric)[0]
        far = int(np.argmax(full))
        if full[far] <= lower[c]:
            return int(m[c]), float(full[far])
        probes = np.append(probes, far)
        if cap is not None and len(probes) > cap:
            return _one_center_full(P, m, metric)
        np.maximum(lower, pairwise(P, m[far : far + 1], m, metric)[0], out=lower)


def _cells(assign: NDArray[np.intp], k: int) -> list[NDArray[np.intp]]:
    order = np.argsort(assign, kind="stable")
    bounds = np.searchsorted(assign[order], np.arange(k + 1))
    return [order[bounds[i] : bounds[i + 1]] for i in range(k)]


def _phi_mM(P: PointSet, C: Sequence[int], metric: Metric) -> float:
    return float(to_all(P, C, metric).min(axis=1).max())


def _recentre(P: PointSet, C: list[int], metric: Metric, cfg: MinimaxConfig) -> tuple[list[int], float, int]:
    """Replace every center by the exact 1-center of its Voronoi cell until no improvement."""
    phi = _phi_mM(P, C, metric)
    rounds = 0
    while rounds < cfg.max_outer_iters:
        rounds += 1
        assign, _ = assign_voronoi(P, C, metric)
        new = []
        for i, cell in enumerate(_cells(assign, len(C))):
            new.append(C[i] if cell.size == 0 else local_one_center(P, cell, metric, cfg.one_center_enumeration_cap)[0])
        new_phi = _phi_mM(P, new, metric)
        if not new_phi < phi:
            break
        C, phi = new, new_phi
    return C, phi, rounds


def _redundant(P: PointSet, C: list[int], phi: float, metric: Metric, thresh: float) -> list[int]:
    """Positions of centers whose cell is, on average, covered by other centers within phi.

    All decisions use the same snapshot of C. If every center qualifies, the one with
    the smallest score is kept.
    """
    D = to_all(P, C, metric)
    assign = np.argmin(D, axis=1)
    within = D <= phi
    tau = np.full(len(C), np.inf)
    for i, cell in enumerate(_cells(assign, len(C))):
        if cell.size:
            tau[i] = (within[cell].sum(axis=1) - within[cell, i]).mean()
    out = [i for i in range(len(C)) if tau[i] > thresh]
    if len(out) == len(C):
        out.remove(int(np.argmin(tau)))
    return out


def refine_minimax(
    P: PointSet,
    start: Selection,
    metric: Metric | str = Metric.EUCLIDEAN,
    cfg: MinimaxConfig | None = None,
    seed: int | None = None,
) -> Selection:
    """Lower the mini-max objective of a start selection.

    Alternates Voronoi re-centring with a redundancy pass that drops centers whose cells
    are already covered by the others and refills them farthest-first. The best set seen
    is returned, so the objective never rises above the start.
    """
    metric = Metric.parse(metric)
    cfg = cfg or MinimaxConfig()
    C = list(start.indices)
    _check_centers(P, C)
    P.check_metric(metric)
    n = len(C)
    history = [_phi_mM(P, C, metric)]
    best, best_phi = C, history[0]
    converged = False
    deletions = 0
    for _ in range(cfg.max_outer_iters):
        C, phi, _ = _recentre(P, list(best), metric, cfg)
        if phi < best_phi:
            best, best_phi = C, phi
        history.append(best_phi)
        drop = _redundant(P, C, phi, metric, cfg.thresh)
        if not drop:
            converged = True
            break
        deletions += len(drop)
        dropped = set(drop)
        kept = [c for i, c in enumerate(C) if i not in dropped]
        kept, _ = _farthest_first(P, kept, n, metric)
        C, phi, _ = _recentre(P, kept, metric, cfg)
        if not phi < best_phi:
            converged = True
            break
        best, best_phi = C, phi
        history.append(best_phi)
    else:
        log.info("refine_minimax hit max_outer_iters=%d", cfg.max_outer_iters)
    info = {"history": history, "converged": converged, "deletions": deletions}
    seed = start.seed if seed is None else seed
    return Selection(tuple(best), "greedy-minimax", seed, evaluate(P, best, metric), info)


# -- maxi-min refinement -----------------------------------------------------


def _phi_Mm(P: PointSet, C: Sequence[int], metric: Metric) -> float:
    D = pairwise(P, C, C, metric)
    np.fill_diagonal(D, np.inf)
    return float(D.min())


def refine_maximin(
    P: PointSet, start: Selection, metric: Metric | str = Metric.EUCLIDEAN, max_outer_iters: int = 100
) -> Selection:
    """Raise the maxi-min objective by moving each center, within its Voronoi cell,
    to the member farthest from the other centers."""
    metric = Metric.parse(metric)
    C = list(start.indices)
    _check_centers(P, C)
    if len(C) < 2:
        raise ValueError("maxi-min refinement needs at least two centers")
    P.check_metric(metric)
    phi = _phi_Mm(P, C, metric)
    history = [phi]
    converged = False
    for _ in range(max_outer_iters):
        D = to_all(P, C, metric)
        assign = np.argmin(D, axis=1)
        new = []
        for i, cell in enumerate(_cells(assign, len(C))):
            if cell.size == 0:
                new.append(C[i])
                continue
            others = np.delete(D[cell], i, axis=1).min(axis=1)
            new.append(int(cell[np.argmax(others)]))
        new_phi = _phi_Mm(P, new, metric) if len(set(new)) == len(new) else 0.0
        if not new_phi > phi:
            converged = True
            break
        C, phi = new, new_phi
        history.append(phi)
    info = {"history": history, "converged": converged}
    return Selection(tuple(C), "greedy-maximin", start.seed, evaluate(P, C, metric), info)


# -- k-medoids ---------------------------------------------------------------


def _kmedoids_pp(P: PointSet, n: int, metric: Metric, rng: np.random.Generator) -> list[int]:
    medoids = [int(rng.integers(P.count))]
    mind = to_all(P, medoids, metric)[:, 0]
    while len(medoids) < n:
        w = mind**2
        w[medoids] = 0.0
        total = w.sum()
        if total > 0:
            nxt = int(rng.choice(P.count, p=w / total))
        else:
            # every point coincides with a medoid; take the first unused index
            used = set(medoids)
            nxt = next(i for i in range(P.count) if i not in used)
        medoids.append(nxt)
        np.minimum(mind, to_all(P, nxt, metric)[:, 0], out=mind)
    return medoids


def _medoid(P: PointSet, cell: NDArray[np.intp], current: int, metric: Metric) -> int:
    cost = np.zeros(cell.size)
    step = max(1, 4_000_000 // cell.size)
    for lo in range(0, cell.size, step):
        cost[lo : lo + step] = pairwise(P, cell[lo : lo + step], cell, metric).sum(axis=1)
    k = int(np.argmin(cost))
    cur = np.flatnonzero(cell == current)
    # keep the current medoid on ties so the iteration cannot cycle
    if cur.size and cost[cur[0]] <= cost[k]:
        return current
    return int(cell[k])


def k_medoids(
    P: PointSet, n: int, metric: Metric | str = Metric.EUCLIDEAN, seed: int = 0, max_iter: int = 1000
) -> Selection:
    """k-medoids++ seeding followed by alternate (Voronoi-iteration) updates."""
    metric = Metric.parse(metric)
    _check_n(P, n)
    P.check_metric(metric)
    rng = np.random.default_rng(seed)
    M = _kmedoids_pp(P, n, metric, rng)
    D = to_all(P, M, metric)
    history = [float(D.min(axis=1).sum())]
    iters, converged = 0, False
    while iters < max_iter:
        iters += 1
        assign = np.argmin(D, axis=1)
        new = list(M)
        for i, cell in enumerate(_cells(assign, n)):
            if cell.size:
                new[i] = _medoid(P, cell, M[i], metric)
        for i, cell in enumerate(_cells(assign, n)):
            if cell.size == 0:
                # reseat at the point farthest from all current medoids
                score = to_all(P, new, metric).min(axis=1)
                score[new] = -np.inf
                new[i] = int(np.argmax(score))
        if new == M:
            converged = True
            break
        M = new
        D = to_all(P, M, metric)
        history.append(float(D.min(axis=1).sum()))
    info = {"history": history, "iterations": iters, "converged": converged}
    return Selection(tuple(M), "kmedoids", seed, evaluate(P, M, metric), info)


# -- random baselines --------------------------------------------------------


def random_select(P: PointSet, n: int, seed: int = 0) -> Selection:
    _check_n(P, n)
    rng = np.random.default_rng(seed)
    idx = rng.choice(P.count, size=n, replace=False)
    return Selection(tuple(int(i) for i in idx), "random", seed)


def random_class_balanced(P: PointSet, labels: Sequence, n: int, seed: int = 0) -> Selection:
    """One random point per class, then round-robin over classes in a freshly
    shuffled order each round, skipping classes that have run out."""
    labels = list(labels)
    if len(labels) != P.count:
        raise ValueError(f"{len(labels)} labels for {P.count} points")
    _check_n(P, n)
    classes = sorted(set(labels), key=str)
    if n < len(classes):
        raise ValueError(f"budget {n} is smaller than the number of classes ({len(classes)})")
    rng = np.random.default_rng(seed)
    pools = []
    for c in classes:
        members = np.array([i for i, y in enumerate(labels) if y == c], dtype=np.intp)
        pools.append(list(rng.permutation(members)))
    chosen = [int(pool.pop(0)) for pool in pools]
    while len(chosen) < n:
        for k in rng.permutation(len(classes)):
            if len(chosen) == n:
                break
            if pools[k]:
                chosen.append(int(pools[k].pop(0)))
    return Selection(tuple(chosen), "random-class-balanced", seed)


def select(
    P: PointSet,
    method: str,
    n: int,
    metric: Metric | str = Metric.EUCLIDEAN,
    seed: int = 0,
    labels: Sequence | None = None,
    cfg: MinimaxConfig | None = None,
) -> Selection:
    """Dispatch by method name."""
    if method == "greedy":
        return greedy_k_center(P, n, metric, seed)[0]
    if method == "greedy-minimax":
        return refine_minimax(P, greedy_k_center(P, n, metric, seed)[0], metric, cfg, seed)
    if method == "greedy-maximin":
        start = greedy_k_center(P, n, metric, seed)[0]
        if n < 2:
            return Selection(start.indices, "greedy-maximin", seed, start.objectives)
        return refine_maximin(P, start, metric, (cfg or MinimaxConfig()).max_outer_iters)
    if method == "kmedoids":
        return k_medoids(P, n, metric, seed)
    if method == "random":
        return random_select(P, n, seed)
    if method == "random-class-balanced":
        if labels is None:
            raise ValueError("random-class-balanced needs labels")
        return random_class_balanced(P, labels, n, seed)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
