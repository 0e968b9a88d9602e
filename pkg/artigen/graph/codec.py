"""Flat matrix encodings of articulation graphs and decode-time quantization.

Row layouts: node ``[o, Tg(6), b(3), f(F)]``; edge ``[c, d(3), m(3), r(2x2)]``
with edge rows in lexicographic pair order.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..core.tensor import ShapeError
from ..logger_config import setup_logger
from .se3 import canonical_rotvec
from .tree import edge_weight, mst_extract
from .types import DEFAULT_DIMS, ArticulationGraph, EdgeAttr, GraphDims, NodeAttr

logger = setup_logger('graph')

PLUCKER_TOL = 1e-12
MIN_DIRECTION = 1e-8
MIN_EXTENT = 1e-6


@dataclass(frozen=True)
class Thresholds:
    node: float = 0.5
    edge: float = 0.5


def encode_graph(g: ArticulationGraph) -> Tuple[np.ndarray, np.ndarray]:
    dims = g.dims
    M_v = np.zeros((dims.K, dims.d_v))
    M_e = np.zeros((dims.n_pairs, dims.d_e))
    for i, node in enumerate(g.nodes):
        if node.exists:
            M_v[i] = node.row()
    for pair, edge in g.edges.items():
        M_e[dims.pair_row[pair]] = edge.row()
    return M_v, M_e


def plucker_project(p) -> np.ndarray:
    """Nearest valid Plücker line: unit direction, moment orthogonal to it."""
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    if p.shape != (6,):
        raise ShapeError(f"plucker_project: expected 6 values, got shape {p.shape}")
    d, m = p[:3], p[3:]
    s = np.linalg.norm(d)
    if s <= MIN_DIRECTION:
        raise ValueError(f"degenerate joint axis: |d| = {s:.3g}")
    if abs(s - 1.0) <= PLUCKER_TOL and abs(d @ m) <= PLUCKER_TOL:
        return p.copy()
    d = d / s
    m = m / s
    m = m - (m @ d) * d
    return np.concatenate([d, m])


def check_shapes(M_v: np.ndarray, M_e: np.ndarray, dims: GraphDims) -> None:
    if M_v.shape != (dims.K, dims.d_v):
        raise ShapeError(f"vertex matrix must be {(dims.K, dims.d_v)}, got {M_v.shape}")
    if M_e.shape != (dims.n_pairs, dims.d_e):
        raise ShapeError(f"edge matrix must be {(dims.n_pairs, dims.d_e)}, got {M_e.shape}")


def decode_node(row: np.ndarray, threshold: float = 0.5) -> NodeAttr:
    F = row.size - 10
    if row[0] < threshold:
        return NodeAttr.absent(F)
    tg = row[1:7].copy()
    tg[:3] = canonical_rotvec(tg[:3])
    b = np.maximum(row[7:10], MIN_EXTENT)
    return NodeAttr(1.0, tg, b, row[10:])


def decode_edge_attrs(row: np.ndarray, c: float) -> EdgeAttr:
    r = np.sort(np.asarray(row[7:11], dtype=np.float64).reshape(2, 2), axis=1)
    return EdgeAttr(c, plucker_project(row[1:7]), r)


def decode_matrices(M_v: np.ndarray, M_e: np.ndarray, thresholds: Thresholds = Thresholds(),
                    dims: GraphDims = DEFAULT_DIMS, label=None) -> ArticulationGraph:
    M_v = np.asarray(M_v, dtype=np.float64)
    M_e = np.asarray(M_e, dtype=np.float64)
    check_shapes(M_v, M_e, dims)
    nodes = tuple(decode_node(row, thresholds.node) for row in M_v)
    edges = {}
    for (i, j), row in zip(dims.pairs, M_e):
        if abs(row[0]) < thresholds.edge:
            continue
        if not (nodes[i].exists and nodes[j].exists):
            continue
        try:
            edges[(i, j)] = decode_edge_attrs(row, float(np.sign(row[0])))
        except ValueError as e:
            logger.warning(f"Dropping edge {(i, j)}: {e}")
    return ArticulationGraph(nodes, edges, label)


def to_tree(M_v: np.ndarray, M_e: np.ndarray, thresholds: Thresholds = Thresholds(),
            dims: GraphDims = DEFAULT_DIMS, label=None) -> ArticulationGraph:
    """Decode nodes, keep the minimum spanning tree of the complete candidate graph.

    Edge weights come from the raw column-0 scores; a degenerate axis is
    replaced by a vertical one through the midpoint of the two parts.
    """
    M_v = np.asarray(M_v, dtype=np.float64)
    M_e = np.asarray(M_e, dtype=np.float64)
    check_shapes(M_v, M_e, dims)
    nodes = tuple(decode_node(row, thresholds.node) for row in M_v)
    existing = [i for i, n in enumerate(nodes) if n.exists]
    keep = set(existing)
    candidates = {pair: edge_weight(M_e[dims.pair_row[pair], 0])
                  for pair in dims.pairs if pair[0] in keep and pair[1] in keep}
    edges = {}
    for pair in mst_extract(existing, candidates):
        row = M_e[dims.pair_row[pair]]
        c = 1.0 if row[0] >= 0 else -1.0
        try:
            edges[pair] = decode_edge_attrs(row, c)
        except ValueError:
            i, j = pair
            mid = 0.5 * (nodes[i].translation + nodes[j].translation)
            d = np.array([0.0, 0.0, 1.0])
            logger.warning(f"Degenerate axis on edge {pair}; using a vertical axis through {mid.tolist()}")
            r = np.sort(row[7:11].reshape(2, 2), axis=1)
            edges[pair] = EdgeAttr(c, np.concatenate([d, np.cross(mid, d)]), r)
    return ArticulationGraph(nodes, edges, label)


def quantize_vertices(M_v: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """Re-encode decoded nodes: o in {0, 1}, absent rows all zero, rotations canonical."""
    M_v = np.asarray(M_v, dtype=np.float64)
    out = np.zeros_like(M_v)
    for i, row in enumerate(M_v):
        node = decode_node(row, threshold)
        if node.exists:
            out[i] = node.row()
    return out
