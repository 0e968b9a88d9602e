"""Colored point clouds: containers, sampling, distances and file I/O."""
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy.spatial import cKDTree

from ..core.rng import Rng
from ..core.tensor import ShapeError, Tensor, TensorLike, add, as_tensor, reduce_mean, reduce_sum, square, sub

MAX_POINTS = 10000


@dataclass(frozen=True, eq=False)
class PointCloud:
    """N x 6 samples: xyz in object units, rgb in [0, 1]."""
    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 6:
            raise ShapeError(f"point cloud must be N x 6, got {pts.shape}")
        if pts.shape[0] < 1:
            raise ValueError("point cloud is empty")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point cloud has non-finite values")
        if np.any(pts[:, 3:] < 0.0) or np.any(pts[:, 3:] > 1.0):
            raise ValueError("point colors must lie in [0, 1]")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_parts(cls, xyz: np.ndarray, rgb: np.ndarray) -> "PointCloud":
        return cls(np.hstack([xyz, rgb]))

    @property
    def xyz(self) -> np.ndarray:
        return self.points[:, :3]

    @property
    def rgb(self) -> np.ndarray:
        return self.points[:, 3:]

    def __len__(self) -> int:
        return self.points.shape[0]

    def subset(self, idx) -> "PointCloud":
        return PointCloud(self.points[idx])


Cloud = Union[PointCloud, np.ndarray]


def _xyz(pc: Cloud) -> np.ndarray:
    arr = pc.xyz if isinstance(pc, PointCloud) else np.asarray(pc, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] < 3:
        raise ShapeError(f"expected an N x 3 (or N x 6) array, got {arr.shape}")
    return arr[:, :3]


def fps(pc: Cloud, n: int, rng: Rng, start: Optional[int] = None) -> np.ndarray:
    """Farthest point sampling; ties go to the lowest index."""
    xyz = _xyz(pc)
    N = xyz.shape[0]
    if not 1 <= n <= N:
        raise ValueError(f"cannot sample {n} points from a cloud of {N}")
    first = int(rng.integers(N)) if start is None else int(start)
    selected = np.empty(n, dtype=np.int64)
    selected[0] = first
    dist = np.sum((xyz - xyz[first]) ** 2, axis=1)
    dist[first] = -1.0
    for k in range(1, n):
        nxt = int(np.argmax(dist))
        selected[k] = nxt
        dist = np.minimum(dist, np.sum((xyz - xyz[nxt]) ** 2, axis=1))
        dist[selected[:k + 1]] = -1.0
    return selected


def _nearest_sq(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    _, idx = cKDTree(dst).query(src, k=1)
    diff = src - dst[idx]
    return np.sum(diff * diff, axis=1)


def chamfer(a: Cloud, b: Cloud) -> float:
    """Symmetric Chamfer distance with squared nearest-neighbour distances."""
    a, b = _xyz(a), _xyz(b)
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValueError("chamfer: empty point cloud")
    return float(_nearest_sq(a, b).mean() + _nearest_sq(b, a).mean())


def loss_pc(p: PointCloud, p_hat: PointCloud) -> float:
    """Sum over points of the xyz MSE plus the rgb MSE, rows matched by index."""
    if len(p) != len(p_hat):
        raise ShapeError(f"loss_pc: clouds differ in size ({len(p)} vs {len(p_hat)})")
    d = p.points - p_hat.points
    return float(np.sum(np.mean(d[:, :3] ** 2, axis=1) + np.mean(d[:, 3:] ** 2, axis=1)))


def loss_pc_op(p: TensorLike, p_hat: TensorLike) -> Tensor:
    p, p_hat = as_tensor(p), as_tensor(p_hat)
    if p.shape != p_hat.shape or p.ndim != 2 or p.shape[1] != 6:
        raise ShapeError(f"loss_pc: shape mismatch {p.shape} vs {p_hat.shape}")
    d = square(sub(p, p_hat))
    return add(reduce_sum(reduce_mean(d[:, :3], axis=1)), reduce_sum(reduce_mean(d[:, 3:], axis=1)))


def save_text(path, pc: PointCloud) -> Path:
    path = Path(path)
    np.savetxt(path, pc.points, fmt="%.17g")
    return path


def load_text(path) -> PointCloud:
    pts = np.loadtxt(path, dtype=np.float64, ndmin=2)
    return PointCloud(pts)


def save_binary(path, pc: PointCloud) -> Path:
    path = Path(path)
    path.write_bytes(np.ascontiguousarray(pc.points, dtype="<f8").tobytes())
    return path


def load_binary(path) -> PointCloud:
    raw = Path(path).read_bytes()
    if len(raw) % 48:
        raise ValueError(f"{path}: size {len(raw)} is not a whole number of xyzrgb rows")
    return PointCloud(np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(-1, 6))


def load_cloud(path) -> PointCloud:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Point cloud not found: {path}")
    return load_binary(path) if path.suffix == ".bin" else load_text(path)
