"""Lloyd's k-means with k-means++ seeding."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class KMeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    inertia_history: list = field(default_factory=list)
    iterations: int = 0

    @property
    def inertia(self):
        return self.inertia_history[-1]


def _sq_dists(points, centroids):
    return ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)


def kmeans_plus_plus(points, k, rng):
    n = len(points)
    centroids = [points[rng.integers(n)]]
    closest = ((points - centroids[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = closest.sum()
        if total <= 0:
            # all remaining mass sits on chosen centroids; pick any other distinct point
            idx = int(np.flatnonzero(closest > 0)[0]) if np.any(closest > 0) else int(rng.integers(n))
        else:
            idx = int(np.searchsorted(np.cumsum(closest), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        centroids.append(points[idx])
        closest = np.minimum(closest, ((points - points[idx]) ** 2).sum(axis=1))
    return np.array(centroids, dtype=np.float64)


def kmeans(points, k, seed, max_iter=300):
    """Cluster ``points`` (n x d, or length-n for scalars) into ``k`` groups.

    Iterates until the assignment stops changing or ``max_iter`` is reached.
    ``inertia_history`` holds the within-cluster sum of squares after every
    update and never increases.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    if k < 1 or k > len(points):
        raise ValueError(f"k={k} needs between 1 and {len(points)} clusters")
    if len(np.unique(points, axis=0)) < k:
        raise ValueError(f"fewer than k={k} distinct points")
    rng = np.random.default_rng(seed)
    centroids = kmeans_plus_plus(points, k, rng)
    labels = _sq_dists(points, centroids).argmin(axis=1)
    history = [float(_sq_dists(points, centroids)[np.arange(len(points)), labels].sum())]
    it = 0
    for it in range(1, max_iter + 1):
        for c in range(k):
            members = labels == c
            if members.any():  # an empty cluster keeps its centroid
                centroids[c] = points[members].mean(axis=0)
        d = _sq_dists(points, centroids)
        new_labels = d.argmin(axis=1)
        history.append(float(d[np.arange(len(points)), new_labels].sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return KMeansResult(labels, centroids, history, it)
