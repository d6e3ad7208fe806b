"""Point sets, distances and the three subset objectives."""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.spatial.distance import cdist

# rows per block when building point-to-center distance matrices
_CHUNK = 8192


class Metric(str, enum.Enum):
    EUCLIDEAN = "euclidean"
    COSINE = "cosine"
    # TSPlib nint(euclidean) convention, only used by the benchmark harness
    EUCLIDEAN_NINT = "euclidean-nint"

    @classmethod
    def parse(cls, name: "str | Metric") -> "Metric":
        if isinstance(name, Metric):
            return name
        key = name.strip().lower().replace("_", "-")
        aliases = {
            "euclidean": cls.EUCLIDEAN,
            "cosine": cls.COSINE,
            "cosine-distance": cls.COSINE,
            "euclidean-nint": cls.EUCLIDEAN_NINT,
            "nint": cls.EUCLIDEAN_NINT,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown metric {name!r}") from None


@dataclass(frozen=True, eq=False)
class PointSet:
    """Immutable N x d matrix of feature vectors with unique string ids."""

    points: NDArray[np.float64]
    ids: tuple[str, ...]

    def __post_init__(self) -> None:
        pts = np.array(self.points, dtype=np.float64, copy=True)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError(f"points must be a non-empty N x d matrix, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points contain NaN or Inf")
        ids = tuple(str(i) for i in self.ids)
        if len(ids) != pts.shape[0]:
            raise ValueError(f"{len(ids)} ids for {pts.shape[0]} points")
        if len(set(ids)) != len(ids):
            seen: set[str] = set()
            dup = next(i for i in ids if i in seen or seen.add(i))
            raise ValueError(f"duplicate id {dup!r}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "ids", ids)

    @classmethod
    def from_array(cls, points: ArrayLike, ids: Iterable | None = None) -> "PointSet":
        pts = np.asarray(points, dtype=np.float64)
        if ids is None:
            ids = (str(i) for i in range(len(pts)))
        return cls(pts, tuple(ids))

    @property
    def count(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.count

    @cached_property
    def norms(self) -> NDArray[np.float64]:
        return np.linalg.norm(self.points, axis=1)

    @cached_property
    def unit(self) -> NDArray[np.float64]:
        """Rows scaled to unit length; raises if any row has zero norm."""
        if np.any(self.norms == 0):
            bad = int(np.flatnonzero(self.norms == 0)[0])
            raise ValueError(f"point {self.ids[bad]!r} has zero norm; cosine distance undefined")
        u = self.points / self.norms[:, None]
        u.setflags(write=False)
        return u

    def subset(self, indices: Sequence[int]) -> "PointSet":
        idx = np.asarray(indices, dtype=np.intp)
        return PointSet(self.points[idx], tuple(self.ids[i] for i in idx))

    def check_metric(self, metric: Metric) -> None:
        if Metric.parse(metric) is Metric.COSINE:
            self.unit  # noqa: B018  (validates norms)


@dataclass(frozen=True)
class Objectives:
    phi_mM: float
    phi_Mm: float | None  # undefined for a single point
    phi_kmedoids: float


@dataclass(frozen=True)
class Selection:
    indices: tuple[int, ...]
    method: str
    seed: int
    objectives: Objectives | None = None
    info: dict = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.indices)

    def ids(self, P: PointSet) -> list[str]:
        return [P.ids[i] for i in self.indices]


# -- distances ---------------------------------------------------------------


def _check_pair(a: NDArray, b: NDArray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("non-finite input")


def distance(a: ArrayLike, b: ArrayLike, metric: Metric | str = Metric.EUCLIDEAN) -> float:
    metric = Metric.parse(metric)
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    _check_pair(a, b)
    if metric is Metric.COSINE:
        na, nb = np.linalg.norm(a), np.linalg.norm(b)
        if na == 0 or nb == 0:
            raise ValueError("zero-norm vector under cosine distance")
        return _cosine_from_unit(a[None] / na, b[None] / nb)[0, 0]
    d = cdist(a[None], b[None])[0, 0]
    if metric is Metric.EUCLIDEAN_NINT:
        d = math.floor(d + 0.5)
    return float(d)


def _cosine_from_unit(ua: NDArray, ub: NDArray) -> NDArray:
    # 1 - u.v == |u - v|^2 / 2 for unit vectors; this form is exactly symmetric
    # and exactly zero for identical directions
    return np.minimum(0.5 * cdist(ua, ub, "sqeuclidean"), 2.0)


def pairwise(P: PointSet, rows: ArrayLike, cols: ArrayLike, metric: Metric | str) -> NDArray:
    """Distance matrix between P[rows] and P[cols]."""
    metric = Metric.parse(metric)
    rows = np.asarray(rows, dtype=np.intp)
    cols = np.asarray(cols, dtype=np.intp)
    if metric is Metric.COSINE:
        U = P.unit
        return _cosine_from_unit(U[rows], U[cols])
    X = P.points
    D = cdist(X[rows], X[cols])
    if metric is Metric.EUCLIDEAN_NINT:
        D = np.floor(D + 0.5)
    return D


def to_all(P: PointSet, col: ArrayLike, metric: Metric | str) -> NDArray:
    """Distances from every point of P to P[col] (one column per entry of col)."""
    col = np.atleast_1d(np.asarray(col, dtype=np.intp))
    metric = Metric.parse(metric)
    if P.count <= _CHUNK:
        return pairwise(P, np.arange(P.count), col, metric)
    out = np.empty((P.count, len(col)))
    for lo in range(0, P.count, _CHUNK):
        hi = min(lo + _CHUNK, P.count)
        out[lo:hi] = pairwise(P, np.arange(lo, hi), col, metric)
    return out


def _check_centers(P: PointSet, centers: Sequence[int], *, distinct: bool = True) -> NDArray[np.intp]:
    c = np.asarray(centers, dtype=np.intp).ravel()
    if c.size == 0:
        raise ValueError("empty center list")
    if np.any((c < 0) | (c >= P.count)):
        raise IndexError(f"center index out of range [0, {P.count})")
    if distinct and len(np.unique(c)) != len(c):
        raise ValueError("center indices must be distinct")
    return c


def assign_voronoi(
    P: PointSet, centers: Sequence[int], metric: Metric | str = Metric.EUCLIDEAN
) -> tuple[NDArray[np.intp], NDArray[np.float64]]:
    """Nearest-center assignment (positions into ``centers``) and distances.

    Ties go to the earlier center in the list.
    """
    c = _check_centers(P, centers)
    P.check_metric(metric)
    assign = np.empty(P.count, dtype=np.intp)
    dists = np.empty(P.count)
    for lo in range(0, P.count, _CHUNK):
        hi = min(lo + _CHUNK, P.count)
        D = pairwise(P, np.arange(lo, hi), c, metric)
        a = np.argmin(D, axis=1)
        assign[lo:hi] = a
        dists[lo:hi] = D[np.arange(hi - lo), a]
    return assign, dists


def objective_minimax(P: PointSet, X: Sequence[int], metric: Metric | str = Metric.EUCLIDEAN) -> float:
    """Largest distance from any point to its nearest selected point."""
    _, d = assign_voronoi(P, X, metric)
    return float(d.max())


def objective_maximin(P: PointSet, X: Sequence[int], metric: Metric | str = Metric.EUCLIDEAN) -> float:
    """Smallest pairwise distance among the selected points."""
    c = _check_centers(P, X)
    if len(c) < 2:
        raise ValueError("maxi-min objective needs at least two selected points")
    P.check_metric(metric)
    D = pairwise(P, c, c, metric)
    np.fill_diagonal(D, np.inf)
    return float(D.min())


def objective_kmedoids(P: PointSet, X: Sequence[int], metric: Metric | str = Metric.EUCLIDEAN) -> float:
    _, d = assign_voronoi(P, X, metric)
    return float(d.sum())


def evaluate(P: PointSet, X: Sequence[int], metric: Metric | str = Metric.EUCLIDEAN) -> Objectives:
    _, d = assign_voronoi(P, X, metric)
    mm = objective_maximin(P, X, metric) if len(X) >= 2 else None
    return Objectives(phi_mM=float(d.max()), phi_Mm=mm, phi_kmedoids=float(d.sum()))


# -- exhaustive oracle -------------------------------------------------------

OBJECTIVES = ("minimax", "maximin", "kmedoids")


class EnumerationBudgetExceeded(RuntimeError):
    pass


def brute_force_optimal(
    P: PointSet,
    n: int,
    objective: str,
    metric: Metric | str = Metric.EUCLIDEAN,
    budget: int = 2_000_000,
) -> Selection:
    """Exact optimum of ``objective`` over all size-n subsets.

    Ties resolve to the lexicographically smallest index tuple.
    """
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}")
    N = P.count
    if not 1 <= n <= N:
        raise ValueError(f"n={n} out of range [1, {N}]")
    if objective == "maximin" and n < 2:
        raise ValueError("maxi-min objective needs n >= 2")
    total = math.comb(N, n)
    if total > budget:
        raise EnumerationBudgetExceeded(f"C({N},{n}) = {total} subsets exceeds budget {budget}")
    P.check_metric(metric)
    D = pairwise(P, np.arange(N), np.arange(N), metric)

    best_val, best = None, None
    combos = itertools.combinations(range(N), n)
    while True:
        block = np.array(list(itertools.islice(combos, 4096)), dtype=np.intp)
        if block.size == 0:
            break
        if objective == "maximin":
            sub = D[block[:, :, None], block[:, None, :]]
            iu = np.triu_indices(n, 1)
            vals = sub[:, iu[0], iu[1]].min(axis=1)
            k = int(np.argmax(vals))
            better = best_val is None or vals[k] > best_val
        else:
            near = D[:, block].min(axis=2)  # N x B
            vals = near.max(axis=0) if objective == "minimax" else near.sum(axis=0)
            k = int(np.argmin(vals))
            better = best_val is None or vals[k] < best_val
        if better:
            best_val, best = float(vals[k]), tuple(int(i) for i in block[k])

    return Selection(best, "exhaustive", 0, evaluate(P, best, metric), {"objective": objective, "value": best_val})
