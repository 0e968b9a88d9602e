"""Lloyd's k-means with k-means++ seeding."""
from dataclasses import dataclass, field
from typing import List

import numpy as np
from scipy.spatial.distance import cdist

from ..core.rng import Rng
from ..logger_config import setup_logger

logger = setup_logger('hypernet')

MAX_ITER = 100
REL_TOL = 1e-6


@dataclass
class KMeansResult:
    centroids: np.ndarray
    assignments: np.ndarray
    inertia_history: List[float] = field(default_factory=list)

    @property
    def inertia(self) -> float:
        return self.inertia_history[-1]

    @property
    def iterations(self) -> int:
        return len(self.inertia_history)


def kmeans_plus_plus(X: np.ndarray, C: int, rng: Rng) -> np.ndarray:
    N = X.shape[0]
    chosen = [int(rng.integers(N))]
    d2 = cdist(X, X[chosen], "sqeuclidean")[:, 0]
    for _ in range(1, C):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(N, p=d2 / total))
        else:
            remaining = np.setdiff1d(np.arange(N), chosen)
            nxt = int(rng.choice(remaining))
        chosen.append(nxt)
        d2 = np.minimum(d2, cdist(X, X[nxt:nxt + 1], "sqeuclidean")[:, 0])
    return X[chosen].copy()


def kmeans(X: np.ndarray, C: int, rng: Rng, max_iter: int = MAX_ITER, tol: float = REL_TOL) -> KMeansResult:
    X = np.asarray(X, dtype=np.float64)
    N = X.shape[0]
    if N < C:
        raise ValueError(f"k-means needs at least C={C} vectors, got {N}")
    if C < 1:
        raise ValueError(f"C must be positive, got {C}")
    centroids = kmeans_plus_plus(X, C, rng)
    history: List[float] = []
    labels = np.zeros(N, dtype=np.int64)
    for _ in range(max_iter):
        d2 = cdist(X, centroids, "sqeuclidean")
        labels = np.argmin(d2, axis=1)
        nearest = d2[np.arange(N), labels]
        inertia = float(nearest.sum())
        previous = history[-1] if history else None
        history.append(inertia)
        if previous is not None and previous - inertia <= tol * previous:
            break

        counts = np.bincount(labels, minlength=C)
        updated = np.zeros_like(centroids)
        np.add.at(updated, labels, X)
        filled = counts > 0
        updated[filled] /= counts[filled, None]
        empty = np.flatnonzero(~filled)
        if empty.size:
            logger.warning(f"Re-seeding {empty.size} empty k-means cluster(s)")
            far = nearest.copy()
            for k in empty:
                idx = int(np.argmax(far))
                updated[k] = X[idx]
                far[idx] = -1.0
        centroids = updated
    return KMeansResult(centroids, labels, history)
