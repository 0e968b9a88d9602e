"""Attributed-graph representation of an articulated object.

Nodes are parts ``[o, Tg, b, f]``; edges are joints ``[c, plucker, range]``
keyed by unordered slot pairs ``(i, j)`` with ``i < j``.
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Optional, Tuple

import numpy as np

Pair = Tuple[int, int]

PRISMATIC, REVOLUTE = 0, 1
DEGENERATE_RANGE = 1e-6


@dataclass(frozen=True)
class GraphDims:
    """Slot count K and shape-latent width F; everything else derives from them."""
    K: int = 8
    F: int = 128

    @property
    def d_v(self) -> int:
        return 1 + 6 + 3 + self.F

    @property
    def d_e(self) -> int:
        return 1 + 6 + 4

    @property
    def n_pairs(self) -> int:
        return self.K * (self.K - 1) // 2

    @cached_property
    def pairs(self) -> List[Pair]:
        """Lexicographic pair order shared by every edge-matrix row."""
        return [(i, j) for i in range(self.K) for j in range(i + 1, self.K)]

    @cached_property
    def pair_row(self) -> Dict[Pair, int]:
        return {p: r for r, p in enumerate(self.pairs)}


DEFAULT_DIMS = GraphDims()


def _as_vector(x, n: int, name: str) -> np.ndarray:
    arr = np.array(x, dtype=np.float64).reshape(-1)
    if arr.shape != (n,):
        raise ValueError(f"{name} must have {n} values, got {arr.shape[0]}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class NodeAttr:
    o: float
    Tg: np.ndarray
    b: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "Tg", _as_vector(self.Tg, 6, "Tg"))
        object.__setattr__(self, "b", _as_vector(self.b, 3, "b"))
        f = np.array(self.f, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "f", _as_vector(f, f.size, "f"))

    @classmethod
    def absent(cls, F: int = DEFAULT_DIMS.F) -> "NodeAttr":
        return cls(0.0, np.zeros(6), np.zeros(3), np.zeros(F))

    @property
    def exists(self) -> bool:
        return self.o >= 0.5

    @property
    def rotvec(self) -> np.ndarray:
        return self.Tg[:3]

    @property
    def translation(self) -> np.ndarray:
        return self.Tg[3:]

    def row(self) -> np.ndarray:
        return np.concatenate([[self.o], self.Tg, self.b, self.f])

    def __eq__(self, other) -> bool:
        if not isinstance(other, NodeAttr):
            return NotImplemented
        return (self.o == other.o and np.array_equal(self.Tg, other.Tg)
                and np.array_equal(self.b, other.b) and np.array_equal(self.f, other.f))


@dataclass(frozen=True, eq=False)
class EdgeAttr:
    c: float
    plucker: np.ndarray
    range: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "plucker", _as_vector(self.plucker, 6, "plucker"))
        r = np.array(self.range, dtype=np.float64).reshape(2, 2)
        r.setflags(write=False)
        object.__setattr__(self, "range", r)

    @property
    def direction(self) -> np.ndarray:
        return self.plucker[:3]

    @property
    def moment(self) -> np.ndarray:
        return self.plucker[3:]

    @property
    def chirality(self) -> int:
        return 1 if self.c >= 0 else -1

    def is_prismatic(self) -> bool:
        lo, hi = self.range[PRISMATIC]
        return hi - lo >= DEGENERATE_RANGE

    def is_revolute(self) -> bool:
        lo, hi = self.range[REVOLUTE]
        return hi - lo >= DEGENERATE_RANGE

    def joint_kind(self) -> str:
        kinds = [k for k, on in (("prismatic", self.is_prismatic()), ("revolute", self.is_revolute())) if on]
        return "+".join(kinds) if kinds else "fixed"

    def row(self) -> np.ndarray:
        return np.concatenate([[self.c], self.plucker, self.range.reshape(-1)])

    def __eq__(self, other) -> bool:
        if not isinstance(other, EdgeAttr):
            return NotImplemented
        return (self.c == other.c and np.array_equal(self.plucker, other.plucker)
                and np.array_equal(self.range, other.range))


@dataclass(frozen=True, eq=False)
class ArticulationGraph:
    """K node slots plus joints over unordered slot pairs; treated as a value."""
    nodes: Tuple[NodeAttr, ...]
    edges: Dict[Pair, EdgeAttr] = field(default_factory=dict)
    label: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        normalized = {}
        for (i, j), e in self.edges.items():
            normalized[(min(i, j), max(i, j))] = e
        object.__setattr__(self, "edges", dict(sorted(normalized.items())))

    @classmethod
    def empty(cls, dims: GraphDims = DEFAULT_DIMS, label: Optional[str] = None) -> "ArticulationGraph":
        return cls(tuple(NodeAttr.absent(dims.F) for _ in range(dims.K)), {}, label)

    @property
    def K(self) -> int:
        return len(self.nodes)

    @property
    def dims(self) -> GraphDims:
        return GraphDims(K=len(self.nodes), F=self.nodes[0].f.size if self.nodes else DEFAULT_DIMS.F)

    def existing(self) -> List[int]:
        return [i for i, n in enumerate(self.nodes) if n.exists]

    @property
    def part_count(self) -> int:
        return len(self.existing())

    def root(self) -> Optional[int]:
        ids = self.existing()
        return ids[0] if ids else None

    def adjacency(self) -> Dict[int, List[int]]:
        adj: Dict[int, List[int]] = {i: [] for i in self.existing()}
        for i, j in self.edges:
            adj.setdefault(i, []).append(j)
            adj.setdefault(j, []).append(i)
        for k in adj:
            adj[k].sort()
        return adj

    def replace(self, nodes=None, edges=None, label=None) -> "ArticulationGraph":
        return ArticulationGraph(self.nodes if nodes is None else nodes,
                                 self.edges if edges is None else edges,
                                 self.label if label is None else label)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ArticulationGraph):
            return NotImplemented
        return (self.label == other.label and self.nodes == other.nodes
                and self.edges.keys() == other.edges.keys()
                and all(self.edges[k] == other.edges[k] for k in self.edges))


@dataclass(frozen=True)
class PoseState:
    """Joint values per edge: (prismatic displacement, revolute angle)."""
    joints: Dict[Pair, Tuple[float, float]] = field(default_factory=dict)

    @classmethod
    def rest(cls, g: ArticulationGraph) -> "PoseState":
        """Zero pose clamped into each edge's ranges."""
        joints = {}
        for pair, e in g.edges.items():
            joints[pair] = tuple(float(np.clip(0.0, e.range[k][0], e.range[k][1])) for k in (PRISMATIC, REVOLUTE))
        return cls(joints)

    def get(self, pair: Pair) -> Tuple[float, float]:
        return self.joints.get(pair, (0.0, 0.0))
