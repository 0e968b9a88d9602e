"""Hypergraphs over pattern vectors and the normalized HGNN propagation."""
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from ..core.checkpoint import load_checkpoint, save_checkpoint
from ..core.tensor import ShapeError, Tensor, TensorLike, as_tensor, matmul, relu
from ..logger_config import setup_logger

logger = setup_logger('hypernet')

CACHE_MODULE = "hypergraph"


@dataclass(frozen=True, eq=False)
class Hypergraph:
    """Incidence ``H`` (vertices x hyperedges), weights ``w`` and the centroid of each hyperedge."""
    H: np.ndarray
    w: np.ndarray
    centroids: np.ndarray

    def __post_init__(self):
        H = np.asarray(self.H, dtype=np.float64)
        w = np.asarray(self.w, dtype=np.float64)
        if H.ndim != 2 or w.shape != (H.shape[1],):
            raise ShapeError(f"incidence {H.shape} and weights {w.shape} do not conform")
        centroids = np.asarray(self.centroids, dtype=np.float64)
        if centroids.shape[0] != H.shape[1]:
            raise ShapeError(f"{centroids.shape[0]} centroids for {H.shape[1]} hyperedges")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "centroids", centroids)
        if np.any(w <= 0):
            raise ValueError("hyperedge weights must be positive")
        if np.any(self.vertex_degrees <= 0):
            raise ValueError(f"vertices {np.flatnonzero(self.vertex_degrees <= 0).tolist()} have non-positive degree")
        if np.any(self.edge_degrees <= 0):
            raise ValueError(f"hyperedges {np.flatnonzero(self.edge_degrees <= 0).tolist()} have non-positive degree")

    @property
    def n_vertices(self) -> int:
        return self.H.shape[0]

    @property
    def n_edges(self) -> int:
        return self.H.shape[1]

    @property
    def vertex_degrees(self) -> np.ndarray:
        return self.H @ self.w

    @property
    def edge_degrees(self) -> np.ndarray:
        return self.H.sum(axis=0)

    @cached_property
    def operator(self) -> np.ndarray:
        """S = Dv^-1/2 H W De^-1 H^T Dv^-1/2."""
        dv = 1.0 / np.sqrt(self.vertex_degrees)
        left = dv[:, None] * self.H * (self.w / self.edge_degrees)[None, :]
        right = self.H.T * dv[None, :]
        return left @ right


def nearest_centroids(vectors: np.ndarray, centroids: np.ndarray, k: int) -> np.ndarray:
    d = cdist(np.atleast_2d(vectors), centroids, "sqeuclidean")
    return np.argsort(d, axis=1, kind="stable")[:, :k]


def build_hypergraph(vectors: np.ndarray, centroids: np.ndarray, knn: int = 4) -> Hypergraph:
    """One hyperedge per centroid; each vertex joins its ``knn`` nearest centroids.

    Hyperedges nobody joined are dropped. If every vector is identical the
    result is a single hyperedge holding all of them.
    """
    if knn < 1:
        raise ValueError(f"knn must be at least 1, got {knn}")
    vectors = np.asarray(vectors, dtype=np.float64)
    centroids = np.asarray(centroids, dtype=np.float64)
    N = vectors.shape[0]
    if N == 0:
        raise ValueError("cannot build a hypergraph over zero vectors")
    if np.all(vectors == vectors[0]):
        logger.warning(f"All {N} pattern vectors are identical; using a single hyperedge")
        return Hypergraph(np.ones((N, 1)), np.ones(1), vectors[:1].copy())
    k = min(knn, centroids.shape[0])
    H = np.zeros((N, centroids.shape[0]))
    H[np.arange(N)[:, None], nearest_centroids(vectors, centroids, k)] = 1.0
    used = H.sum(axis=0) > 0
    if not np.all(used):
        logger.info(f"Dropping {int((~used).sum())} empty hyperedge(s)")
    return Hypergraph(H[:, used], np.ones(int(used.sum())), centroids[used])


def attach_query(hg: Hypergraph, query: np.ndarray, knn: int = 4) -> Hypergraph:
    """Copy of ``hg`` with ``query`` appended as the last vertex."""
    k = min(knn, hg.n_edges)
    row = np.zeros((1, hg.n_edges))
    row[0, nearest_centroids(query, hg.centroids, k)[0]] = 1.0
    return Hypergraph(np.vstack([hg.H, row]), hg.w, hg.centroids)


def hgnn_layer(X: TensorLike, S: Optional[np.ndarray], theta: TensorLike, last: bool = False) -> Tensor:
    """relu(S X Theta), identity instead of relu when ``last``; ``S=None`` skips propagation."""
    X, theta = as_tensor(X), as_tensor(theta)
    out = matmul(X, theta)
    if S is not None:
        if S.shape[1] != out.shape[0]:
            raise ShapeError(f"hgnn_layer: shape mismatch {S.shape} @ {out.shape}")
        out = matmul(Tensor(S, copy=False), out)
    return out if last else relu(out)


def save_hypergraph(path, hg: Hypergraph, vectors: np.ndarray, knn: int,
                    meta: Optional[dict] = None) -> Path:
    arrays = {"H": hg.H, "w": hg.w, "centroids": hg.centroids, "vectors": vectors}
    return save_checkpoint(path, CACHE_MODULE, arrays, {"knn": knn, **(meta or {})})


def load_hypergraph(path) -> Tuple[Hypergraph, np.ndarray, dict]:
    ckpt = load_checkpoint(path, CACHE_MODULE)
    a = ckpt.arrays
    return Hypergraph(a["H"], a["w"], a["centroids"]), a["vectors"], ckpt.meta
