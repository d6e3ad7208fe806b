"""Exact (O(N^2)) t-SNE to two dimensions.

High-dimensional affinities use the configured metric: squared distance in the Gaussian
exponent for euclidean, the raw distance for cosine. The low-dimensional side is always
a Student-t kernel on squared euclidean distance.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.spatial.distance import pdist, squareform

from .metricspace import Metric, PointSet, pairwise

log = logging.getLogger(__name__)

_EPS = np.finfo(np.float64).eps
_MIN_GAIN = 0.01


@dataclass(frozen=True)
class TsneParams:
    perplexity: float = 40.0
    iterations: int = 1000
    output_dim: int = 2
    learning_rate: float = 200.0
    early_exaggeration: float = 12.0
    exaggeration_iters: int = 250
    momentum_early: float = 0.5
    momentum_late: float = 0.8
    entropy_tolerance: float = 1e-5
    bandwidth_search_max_steps: int = 50

    def __post_init__(self) -> None:
        if self.perplexity <= 0:
            raise ValueError("perplexity must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.output_dim != 2:
            raise ValueError("only two output dimensions are supported")


@dataclass(frozen=True, eq=False)
class AffinityMatrix:
    values: NDArray[np.float64]
    form: str  # "conditional" or "joint"
    # achieved perplexity per row (conditional form only)
    perplexities: NDArray[np.float64] | None = None


def _input_distances(P: PointSet, metric: Metric) -> NDArray:
    metric = Metric.parse(metric)
    idx = np.arange(P.count)
    D = pairwise(P, idx, idx, metric)
    if metric is Metric.COSINE:
        return D
    return D**2


def calibrate_bandwidths(
    P: PointSet, metric: Metric | str = Metric.EUCLIDEAN, params: TsneParams | None = None
) -> tuple[NDArray[np.float64], AffinityMatrix]:
    """Per-point Gaussian bandwidths matching the target perplexity.

    Bisection on beta = 1 / (2 sigma^2), all rows at once. Rows that cannot reach the
    target within the step cap keep their closest attempt; their achieved perplexity is
    reported in ``AffinityMatrix.perplexities``.
    """
    params = params or TsneParams()
    N = P.count
    if N < 3:
        raise ValueError("t-SNE needs at least 3 points")
    if params.perplexity >= N:
        raise ValueError(f"perplexity {params.perplexity} must be below the number of points ({N})")
    P.check_metric(metric)
    D = _input_distances(P, Metric.parse(metric))
    np.fill_diagonal(D, np.inf)
    # shift each row by its nearest distance; cancels in the normalisation
    D = D - D.min(axis=1, keepdims=True)
    np.fill_diagonal(D, np.inf)

    target = np.log(params.perplexity)  # nats
    tol = params.entropy_tolerance * np.log(2.0)
    finite = np.where(np.isfinite(D), D, 0.0)
    scale = finite.sum(axis=1) / (N - 1)
    beta = 1.0 / np.where(scale > 0, scale, 1.0)
    lo = np.zeros(N)
    hi = np.full(N, np.inf)
    best_beta = beta.copy()
    best_err = np.full(N, np.inf)
    active = np.ones(N, dtype=bool)

    for _ in range(params.bandwidth_search_max_steps):
        H = _row_entropy(D, beta)
        err = H - target
        improved = np.abs(err) < best_err
        best_err = np.where(improved, np.abs(err), best_err)
        best_beta = np.where(improved, beta, best_beta)
        active &= np.abs(err) > tol
        if not active.any():
            break
        up = active & (err > 0)  # entropy too high -> sharpen
        down = active & (err <= 0)
        lo = np.where(up, beta, lo)
        hi = np.where(down, beta, hi)
        beta = np.where(up, np.where(np.isinf(hi), beta * 2.0, 0.5 * (beta + hi)), beta)
        beta = np.where(down, 0.5 * (beta + lo), beta)

    if np.any(best_err > tol):
        n_bad = int(np.sum(best_err > tol))
        log.warning("perplexity search did not converge for %d of %d points", n_bad, N)
    W = np.exp(-D * best_beta[:, None])
    cond = W / W.sum(axis=1, keepdims=True)
    np.fill_diagonal(cond, 0.0)
    perp = np.exp(_row_entropy(D, best_beta))
    sigmas = np.sqrt(1.0 / (2.0 * best_beta))
    return sigmas, AffinityMatrix(cond, "conditional", perp)


def _row_entropy(D: NDArray, beta: NDArray) -> NDArray:
    """Shannon entropy (nats) of each row of exp(-beta * D), normalised."""
    W = np.exp(-D * beta[:, None])
    S = W.sum(axis=1)
    Dw = np.where(W > 0, D, 0.0) * W
    return np.log(S) + beta * Dw.sum(axis=1) / S


def joint_affinities(cond: AffinityMatrix) -> AffinityMatrix:
    if cond.form != "conditional":
        raise ValueError("expected conditional affinities")
    N = cond.values.shape[0]
    J = (cond.values + cond.values.T) / (2.0 * N)
    return AffinityMatrix(J, "joint")


def _student_t(Y: NDArray) -> NDArray:
    num = 1.0 / (1.0 + squareform(pdist(Y, "sqeuclidean")))
    np.fill_diagonal(num, 0.0)
    return num


def kl_divergence(aff: AffinityMatrix, Y: NDArray) -> float:
    Pj = aff.values
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[0] != Pj.shape[0]:
        raise ValueError(f"layout has shape {Y.shape}, expected ({Pj.shape[0]}, k)")
    num = _student_t(Y)
    Q = np.maximum(num / num.sum(), _EPS)
    mask = Pj > 0
    return float(np.sum(Pj[mask] * np.log(Pj[mask] / Q[mask])))


def tsne_gradient(Pj: NDArray, Y: NDArray) -> NDArray:
    """Gradient of KL(P || Q) with respect to the layout Y."""
    num = _student_t(Y)
    Q = np.maximum(num / num.sum(), _EPS)
    W = (Pj - Q) * num
    return 4.0 * (W.sum(axis=1)[:, None] * Y - W @ Y)


def optimize(
    aff: AffinityMatrix, Y0: NDArray, params: TsneParams | None = None, kl_every: int = 50
) -> tuple[NDArray, dict[int, float]]:
    """Gradient descent with momentum, per-coordinate gains and early exaggeration.

    Returns the final layout and a {iteration: KL} trace recorded every ``kl_every``
    iterations (iteration 0 is the initial layout, without exaggeration).
    """
    params = params or TsneParams()
    if aff.form != "joint":
        raise ValueError("optimize expects joint affinities")
    Pj = aff.values
    Y = np.array(Y0, dtype=np.float64, copy=True)
    update = np.zeros_like(Y)
    gains = np.ones_like(Y)
    trace = {0: kl_divergence(aff, Y)}
    for it in range(1, params.iterations + 1):
        early = it <= params.exaggeration_iters
        ex = params.early_exaggeration if early else 1.0
        mom = params.momentum_early if early else params.momentum_late
        if it == params.exaggeration_iters + 1:
            # fresh momentum and gains for the unexaggerated phase
            update[:] = 0.0
            gains[:] = 1.0
        grad = tsne_gradient(Pj * ex, Y)
        gains = np.where(update * grad < 0.0, gains + 0.2, gains * 0.8)
        np.maximum(gains, _MIN_GAIN, out=gains)
        update = mom * update - params.learning_rate * gains * grad
        Y += update
        if it % kl_every == 0 or it == params.iterations:
            trace[it] = kl_divergence(aff, Y)
    return Y, trace


def initial_layout(N: int, seed: int) -> NDArray:
    return np.random.default_rng(seed).normal(0.0, 1e-4, size=(N, 2))


def embed(
    P: PointSet,
    metric: Metric | str = Metric.EUCLIDEAN,
    params: TsneParams | None = None,
    seed: int = 0,
    init: NDArray | None = None,
    trace: dict | None = None,
) -> PointSet:
    """Two-dimensional t-SNE layout of P; ids are carried over.

    Pass a dict as ``trace`` to receive the {iteration: KL} record.
    """
    params = params or TsneParams()
    Y0 = initial_layout(P.count, seed) if init is None else np.asarray(init, dtype=np.float64)
    if Y0.shape != (P.count, params.output_dim):
        raise ValueError(f"initial layout has shape {Y0.shape}, expected ({P.count}, {params.output_dim})")
    # Work in a canonical point order so that floating-point summation order, and
    # hence the result, does not depend on how the input rows happen to be ordered.
    keys = np.hstack([P.points, Y0])
    order = np.lexsort(keys.T[::-1])
    _, cond = calibrate_bandwidths(P.subset(order), metric, params)
    joint = joint_affinities(cond)
    Ys, kl = optimize(joint, Y0[order], params)
    Y = np.empty_like(Ys)
    Y[order] = Ys
    if trace is not None:
        trace.update(kl)
    return PointSet(Y, P.ids)
