"""Synthetic labelled point clouds for exercising the coverage harness."""
from __future__ import annotations

import numpy as np

from .metricspace import PointSet


def imbalanced_blobs(
    n: int = 500,
    classes: int = 10,
    smallest: float = 0.02,
    radius: float = 10.0,
    spread: float = 1.0,
    dim: int = 2,
    seed: int = 0,
) -> tuple[PointSet, list[str]]:
    """Gaussian blobs with centers on a circle; blob 0 holds ``smallest`` of the mass
    and the rest is shared equally. Returns the points and per-point labels."""
    if classes < 2 or not 0 < smallest < 1 / classes:
        raise ValueError("need classes >= 2 and 0 < smallest < 1/classes")
    if dim < 2:
        raise ValueError("dim must be >= 2")
    rng = np.random.default_rng(seed)
    sizes = [max(1, round(n * smallest))]
    rest = n - sizes[0]
    sizes += [rest // (classes - 1) + (1 if c < rest % (classes - 1) else 0) for c in range(classes - 1)]
    angles = 2 * np.pi * np.arange(classes) / classes
    centers = np.zeros((classes, dim))
    centers[:, 0] = radius * np.cos(angles)
    centers[:, 1] = radius * np.sin(angles)
    pts = np.vstack([rng.normal(centers[c], spread, size=(s, dim)) for c, s in enumerate(sizes)])
    labels = [f"c{c}" for c, s in enumerate(sizes) for _ in range(s)]
    perm = rng.permutation(n)
    return PointSet.from_array(pts[perm]), [labels[i] for i in perm]
