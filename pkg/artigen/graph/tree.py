"""Kinematic-tree extraction and forward kinematics."""
from collections import deque
from typing import Dict, Iterable, List, Mapping

import numpy as np

from ..core.rng import Rng
from .se3 import matrix_to_tg, move_line, screw_matrix, tg_to_matrix
from .types import PRISMATIC, REVOLUTE, ArticulationGraph, EdgeAttr, NodeAttr, Pair, PoseState

RANGE_TOL = 1e-12


def edge_weight(score: float) -> float:
    """MST weight of an edge candidate: confident edges (|c| near 1) are cheap."""
    return float(np.clip(1.0 - abs(score), 0.0, 1.0))


class _DisjointSet:
    def __init__(self, items: Iterable[int]):
        self.parent = {i: i for i in items}

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i: int, j: int) -> bool:
        ri, rj = self.find(i), self.find(j)
        if ri == rj:
            return False
        self.parent[max(ri, rj)] = min(ri, rj)
        return True


def mst_extract(nodes: Iterable[int], candidates: Mapping[Pair, float]) -> List[Pair]:
    """Kruskal over ``candidates`` (pair -> weight); ties go to the earlier pair.

    Returns the tree's pairs in lexicographic order.
    """
    nodes = sorted(set(nodes))
    if len(nodes) <= 1:
        return []
    ds = _DisjointSet(nodes)
    tree = []
    for (i, j), w in sorted(candidates.items(), key=lambda kv: (kv[1], kv[0])):
        if i not in ds.parent or j not in ds.parent:
            raise ValueError(f"candidate edge {(i, j)} touches a node outside the tree")
        if ds.union(i, j):
            tree.append((min(i, j), max(i, j)))
            if len(tree) == len(nodes) - 1:
                break
    if len(tree) != len(nodes) - 1:
        raise ValueError(f"edge candidates do not connect nodes {nodes}")
    return sorted(tree)


def traversal(g: ArticulationGraph) -> List[Pair]:
    """(parent, child) pairs in breadth-first order from the root."""
    root = g.root()
    if root is None:
        return []
    adj = g.adjacency()
    seen = {root}
    order = []
    queue = deque([root])
    while queue:
        p = queue.popleft()
        for c in adj.get(p, []):
            if c in seen:
                continue
            seen.add(c)
            order.append((p, c))
            queue.append(c)
    if len(g.edges) != len(order):
        raise ValueError(f"graph is not a tree: cycle detected ({len(g.edges)} edges, "
                         f"{len(order)} reachable from root {root})")
    missing = set(g.existing()) - seen
    if missing:
        raise ValueError(f"graph is not a tree: parts {sorted(missing)} unreachable from root {root}")
    return order


def _check_pose(g: ArticulationGraph, pose: PoseState) -> None:
    for pair, values in pose.joints.items():
        key = (min(pair), max(pair))
        if key not in g.edges:
            raise ValueError(f"pose names {pair}, which is not an edge")
        r = g.edges[key].range
        for k, name in ((PRISMATIC, "displacement"), (REVOLUTE, "angle")):
            lo, hi = r[k]
            if not lo - RANGE_TOL <= values[k] <= hi + RANGE_TOL:
                raise ValueError(f"pose {name} {values[k]:.6g} on edge {key} outside range [{lo:.6g}, {hi:.6g}]")


def joint_motions(g: ArticulationGraph, pose: PoseState) -> Dict[int, np.ndarray]:
    """World-frame motion of every existing part relative to its rest pose.

    Joints missing from ``pose`` sit at zero.
    """
    _check_pose(g, pose)
    root = g.root()
    if root is None:
        return {}
    motions = {root: np.eye(4)}
    for p, c in traversal(g):
        key = (min(p, c), max(p, c))
        e = g.edges[key]
        disp, angle = pose.get(key)
        motions[c] = motions[p] @ screw_matrix(e.direction, e.moment, angle * e.chirality, disp)
    return motions


def forward_kinematics(g: ArticulationGraph, pose: PoseState) -> Dict[int, np.ndarray]:
    """Global 4x4 transform of every existing part at ``pose``."""
    return {i: M @ tg_to_matrix(g.nodes[i].Tg) for i, M in joint_motions(g, pose).items()}


def pose_graph(g: ArticulationGraph, pose: PoseState) -> ArticulationGraph:
    """The same object re-expressed so that its zero pose is ``pose``."""
    motions = joint_motions(g, pose)
    nodes = list(g.nodes)
    for i, M in motions.items():
        n = g.nodes[i]
        nodes[i] = NodeAttr(n.o, matrix_to_tg(M @ tg_to_matrix(n.Tg)), n.b, n.f)
    parent = {c: p for p, c in traversal(g)}
    edges = {}
    for key, e in g.edges.items():
        p = key[0] if parent.get(key[1]) == key[0] else key[1]
        d, m = move_line(motions[p], e.direction, e.moment)
        values = np.asarray(pose.get(key), dtype=np.float64)
        edges[key] = EdgeAttr(e.c, np.concatenate([d, m]), e.range - values[:, None])
    return g.replace(nodes=nodes, edges=edges)


def sample_pose(g: ArticulationGraph, rng: Rng) -> PoseState:
    """Uniform joint values within each edge's ranges, edges in key order."""
    joints = {}
    for key, e in g.edges.items():
        u = rng.random(2)
        lo, hi = e.range[:, 0], e.range[:, 1]
        joints[key] = tuple(float(v) for v in lo + u * (hi - lo))
    return PoseState(joints)
