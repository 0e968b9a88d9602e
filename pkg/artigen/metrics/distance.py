"""Instantiation Distance between articulated objects and ID matrices over sets.

An object is instantiated J times: pose j comes from ``Rng(seed).derive("pose", j)``
and its surface sample from ``Rng(seed).derive("points", j)``. Streams depend on
the seed and the pose index only, so the j-th poses of two objects are drawn
from the same uniforms and ID(a, b) == ID(b, a) holds exactly.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from ..core.rng import Rng
from ..geometry.pointcloud import chamfer
from ..geometry.synth import sample_object_points
from ..graph.tree import forward_kinematics, sample_pose
from ..graph.types import ArticulationGraph
from ..graph.validate import validate
from ..logger_config import setup_logger

logger = setup_logger('metrics')


@dataclass(frozen=True)
class IdConfig:
    J: int = 4
    N_s: int = 2048
    seed: int = 0

    def __post_init__(self):
        if self.J < 1:
            raise ValueError(f"need at least one pose sample, got J={self.J}")
        if self.N_s < 16:
            raise ValueError(f"need at least 16 surface points, got N_s={self.N_s}")


def instantiate(g: ArticulationGraph, cfg: IdConfig = IdConfig()) -> List[np.ndarray]:
    """J posed surface samples (N_s x 3 each) of a valid tree."""
    violations = validate(g)
    if violations:
        raise ValueError(f"cannot instantiate an invalid graph: {'; '.join(violations)}")
    root = Rng(cfg.seed)
    clouds = []
    for j in range(cfg.J):
        pose = sample_pose(g, root.derive("pose", j))
        xyz, _ = sample_object_points(g, cfg.N_s, root.derive("points", j), forward_kinematics(g, pose))
        clouds.append(xyz)
    return clouds


def _paired_chamfer(a: Sequence[np.ndarray], b: Sequence[np.ndarray]) -> float:
    return float(np.mean([chamfer(x, y) for x, y in zip(a, b)]))


def instantiation_distance(g1: ArticulationGraph, g2: ArticulationGraph, cfg: IdConfig = IdConfig()) -> float:
    """Mean Chamfer distance between the j-th instantiations of both objects."""
    return _paired_chamfer(instantiate(g1, cfg), instantiate(g2, cfg))


def _instantiate_all(graphs: Sequence[ArticulationGraph], cfg: IdConfig, workers: int):
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda g: instantiate(g, cfg), graphs))
    return [instantiate(g, cfg) for g in graphs]


def distance_matrix(rows: Sequence[ArticulationGraph], cols: Optional[Sequence[ArticulationGraph]] = None,
                    cfg: IdConfig = IdConfig(), workers: int = 1) -> np.ndarray:
    """ID between every row and column object; ``cols=None`` gives the symmetric within-set matrix.

    Entries are independent, so the result does not depend on ``workers``.
    """
    if not rows:
        raise ValueError("distance_matrix: empty set")
    symmetric = cols is None
    inst_rows = _instantiate_all(rows, cfg, workers)
    inst_cols = inst_rows if symmetric else _instantiate_all(cols, cfg, workers)
    if not inst_cols:
        raise ValueError("distance_matrix: empty set")
    cells = [(i, j) for i in range(len(inst_rows)) for j in range(len(inst_cols))
             if not symmetric or j > i]
    logger.debug(f"Computing {len(cells)} ID entries ({len(inst_rows)} x {len(inst_cols)}), workers={workers}")

    def entry(cell):
        i, j = cell
        return _paired_chamfer(inst_rows[i], inst_cols[j])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(entry, cells))
    else:
        values = [entry(c) for c in cells]
    D = np.zeros((len(inst_rows), len(inst_cols)))
    for (i, j), v in zip(cells, values):
        D[i, j] = v
        if symmetric:
            D[j, i] = v
    return D
