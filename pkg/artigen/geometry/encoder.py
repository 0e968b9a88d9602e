"""Deterministic descriptors: cloud-level pattern vectors and part shape latents.

Both are fixed seeded random projections of hand-built features, so they
are pure functions of their input. Pattern vectors also carry a coarse rgb
occupancy grid: part colors mark which slots an object fills.
"""
from functools import lru_cache

import numpy as np

from ..core.rng import Rng
from .pointcloud import PointCloud, fps

ENCODER_SEED = 20240611
PATTERN_DIM = 1024
FPS_POINTS = 64
POINT_FEATURES = 15
LATENT_FEATURES = 10
COLOR_LEVELS = 4
COLOR_WEIGHT = 3.0


@lru_cache(maxsize=8)
def _projection(seed: int, stream: str, rows: int, cols: int) -> np.ndarray:
    P = Rng(seed).derive(stream).normal((rows, cols)) / np.sqrt(rows)
    P.setflags(write=False)
    return P


def point_features(pc: PointCloud) -> np.ndarray:
    """Per point: xyz, rgb, distance from origin and a one-hot octant code."""
    xyz = pc.xyz
    radial = np.linalg.norm(xyz, axis=1, keepdims=True)
    code = (xyz[:, 0] >= 0).astype(int) + 2 * (xyz[:, 1] >= 0) + 4 * (xyz[:, 2] >= 0)
    octant = np.eye(8)[code]
    return np.hstack([xyz, pc.rgb, radial, octant])


def color_occupancy(rgb: np.ndarray, levels: int = COLOR_LEVELS) -> np.ndarray:
    """Which cells of a ``levels``^3 rgb grid hold at least one point."""
    cells = np.clip((np.asarray(rgb) * levels).astype(int), 0, levels - 1)
    code = cells @ np.array([levels * levels, levels, 1])
    occupied = np.zeros(levels ** 3)
    occupied[np.unique(code)] = 1.0
    return occupied


def pattern_encode(pc: PointCloud, seed: int = ENCODER_SEED, fps_points: int = FPS_POINTS,
                   dim: int = PATTERN_DIM) -> np.ndarray:
    """Unit-norm ``dim``-vector describing a colored cloud in its global frame."""
    if len(pc) < fps_points:
        raise ValueError(f"cloud too small to encode: {len(pc)} points, need at least {fps_points}")
    idx = fps(pc, fps_points, Rng(seed).derive("fps"))
    feats = point_features(pc.subset(idx))
    # occupancy reads the whole cloud so small parts are never missed by FPS
    pooled = np.concatenate([feats.max(axis=0), feats.mean(axis=0), COLOR_WEIGHT * color_occupancy(pc.rgb)])
    v = pooled @ _projection(seed, "pattern", pooled.size, dim)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ValueError("degenerate cloud: pattern vector is zero")
    return v / norm


def shape_latent(b, F: int = 128, seed: int = ENCODER_SEED) -> np.ndarray:
    """Bounded F-dim latent for a box-shaped part with extents ``b``."""
    b = np.asarray(b, dtype=np.float64)
    if np.any(b <= 0):
        raise ValueError(f"box extents must be positive, got {b.tolist()}")
    feats = np.concatenate([b, b * b, np.log(b), [1.0]])
    return np.tanh(feats @ _projection(seed, "latent", LATENT_FEATURES, F))
