"""Synthetic articulated objects and surface sampling of box-shaped parts.

Four templates stand in for real object categories: cabinets with hinged
doors, chests of drawers, faucets with a swivel spout and lift-and-turn
handles, and laptops. Slot 0 is always the body; every template is a tree.
"""
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from ..core.rng import Rng
from ..graph.se3 import rotvec_to_matrix, tg_to_matrix, transform_points
from ..graph.types import ArticulationGraph, EdgeAttr, NodeAttr
from .encoder import shape_latent
from .pointcloud import PointCloud

TEMPLATES = ("cabinet_door", "drawer_box", "faucet_arm", "laptop_lid")

PALETTE = np.array([
    [0.90, 0.10, 0.10],
    [0.10, 0.60, 0.90],
    [0.15, 0.75, 0.20],
    [0.95, 0.75, 0.10],
    [0.60, 0.20, 0.80],
    [0.10, 0.80, 0.75],
    [0.95, 0.45, 0.10],
    [0.45, 0.45, 0.45],
])


@dataclass(frozen=True)
class SynthSpec:
    """What to generate. ``template=None`` cycles through every template."""
    template: Optional[str] = None
    part_count: Optional[int] = None
    part_range: Tuple[int, int] = (2, 4)
    size_range: Tuple[float, float] = (0.5, 0.9)
    n_points: int = 2048
    random_yaw: bool = False
    seed: int = 0
    K: int = 8
    F: int = 128

    def __post_init__(self):
        if self.template is not None and self.template not in TEMPLATES:
            raise ValueError(f"unknown template '{self.template}', expected one of {TEMPLATES}")
        lo, hi = self.part_range
        if not 2 <= lo <= hi <= self.K:
            raise ValueError(f"part_range {self.part_range} must satisfy 2 <= lo <= hi <= {self.K}")
        if self.part_count is not None and not 2 <= self.part_count <= self.K:
            raise ValueError(f"part_count {self.part_count} must be within [2, {self.K}]")
        if not 0 < self.size_range[0] <= self.size_range[1] <= 0.9:
            raise ValueError(f"size_range {self.size_range} must lie in (0, 0.9]")
        if not 1 <= self.n_points <= 10000:
            raise ValueError(f"n_points {self.n_points} must be within [1, 10000]")


class SynthSample(NamedTuple):
    graph: ArticulationGraph
    cloud: PointCloud
    label: str


@dataclass
class _Joint:
    parent: int
    child: int
    point: np.ndarray
    direction: np.ndarray
    prismatic: Tuple[float, float] = (0.0, 0.0)
    revolute: Tuple[float, float] = (0.0, 0.0)
    chirality: float = 1.0


@dataclass
class _Layout:
    """Parts and joints of one object in its own axis-aligned frame."""
    centers: List[np.ndarray] = field(default_factory=list)
    extents: List[np.ndarray] = field(default_factory=list)
    joints: List[_Joint] = field(default_factory=list)

    def part(self, center, extents) -> int:
        self.centers.append(np.asarray(center, dtype=np.float64))
        self.extents.append(np.asarray(extents, dtype=np.float64))
        return len(self.centers) - 1

    def joint(self, parent: int, child: int, point, direction, rng: Rng,
              prismatic=(0.0, 0.0), revolute=(0.0, 0.0)) -> None:
        d = np.asarray(direction, dtype=np.float64)
        c = 1.0
        if prismatic[1] - prismatic[0] == 0.0:
            # pure hinges flip axis and chirality together; the motion is unchanged
            c = float(rng.rademacher(1)[0])
            d = c * d
        self.joints.append(_Joint(parent, child, np.asarray(point, dtype=np.float64), d,
                                  tuple(prismatic), tuple(revolute), c))


def _cabinet_door(n: int, size: np.ndarray, rng: Rng) -> _Layout:
    W, D, H = size
    lay = _Layout()
    body = lay.part((0.0, 0.0, 0.0), (W, D, H))
    doors = n - 1
    w, td = W / doors, 0.02
    y = -D / 2 - td / 2
    for k in range(doors):
        x = -W / 2 + (k + 0.5) * w
        door = lay.part((x, y, 0.0), (0.98 * w, td, 0.95 * H))
        left = k % 2 == 0
        hinge = (x - w / 2 if left else x + w / 2, y, 0.0)
        axis = (0.0, 0.0, -1.0) if left else (0.0, 0.0, 1.0)
        lay.joint(body, door, hinge, axis, rng, revolute=(0.0, float(rng.uniform(np.pi / 2, np.pi))))
    return lay


def _drawer_box(n: int, size: np.ndarray, rng: Rng) -> _Layout:
    W, D, H = size
    lay = _Layout()
    body = lay.part((0.0, 0.0, 0.0), (W, D, H))
    drawers = n - 1
    h = H / drawers
    for k in range(drawers):
        center = (0.0, -0.05 * D, -H / 2 + (k + 0.5) * h)
        drawer = lay.part(center, (0.9 * W, 0.9 * D, 0.85 * h))
        lay.joint(body, drawer, center, (0.0, -1.0, 0.0), rng,
                  prismatic=(0.0, float(rng.uniform(0.4, 0.8)) * D))
    return lay


def _faucet_arm(n: int, size: np.ndarray, rng: Rng) -> _Layout:
    W, D, H = size
    lay = _Layout()
    bw, hc = 0.25 * W, 0.8 * H
    base = lay.part((0.0, 0.0, 0.0), (bw, bw, hc))
    L = 0.45 * D
    spout = lay.part((0.0, L / 2, hc / 2 - 0.04), (0.08, L, 0.08))
    swing = float(rng.uniform(np.pi / 4, np.pi / 2))
    lay.joint(base, spout, (0.0, 0.0, hc / 2), (0.0, 0.0, 1.0), rng, revolute=(-swing, swing))
    r = bw / 2 + 0.04
    for k in range(n - 2):
        phi = np.pi / 2 + np.pi * (k + 1) / (n - 1)
        center = (r * np.cos(phi), r * np.sin(phi), hc / 2 + 0.03)
        handle = lay.part(center, (0.06, 0.06, 0.06))
        lay.joint(base, handle, center, (0.0, 0.0, 1.0), rng,
                  prismatic=(0.0, 0.04), revolute=(-np.pi / 2, np.pi / 2))
    return lay


def _laptop_lid(n: int, size: np.ndarray, rng: Rng) -> _Layout:
    W, D, _ = size
    lay = _Layout()
    tb = 0.03 + 0.03 * float(rng.random())
    base = lay.part((0.0, 0.0, 0.0), (W, D, tb))
    lid = lay.part((0.0, 0.0, tb / 2 + 0.35 * tb), (W, D, 0.7 * tb))
    lay.joint(base, lid, (0.0, D / 2, tb / 2), (-1.0, 0.0, 0.0), rng,
              revolute=(0.0, float(rng.uniform(2 * np.pi / 3, np.pi))))
    return lay


_BUILDERS = {
    "cabinet_door": _cabinet_door,
    "drawer_box": _drawer_box,
    "faucet_arm": _faucet_arm,
    "laptop_lid": _laptop_lid,
}


def _to_graph(lay: _Layout, yaw: float, spec: SynthSpec, label: str) -> ArticulationGraph:
    R = rotvec_to_matrix((0.0, 0.0, yaw))
    rotvec = np.array([0.0, 0.0, yaw])
    nodes = [NodeAttr.absent(spec.F) for _ in range(spec.K)]
    for i, (center, extents) in enumerate(zip(lay.centers, lay.extents)):
        nodes[i] = NodeAttr(1.0, np.concatenate([rotvec, R @ center]), extents,
                            shape_latent(extents, spec.F))
    edges = {}
    for j in lay.joints:
        d = R @ j.direction
        q = R @ j.point
        edges[(j.parent, j.child)] = EdgeAttr(j.chirality, np.concatenate([d, np.cross(q, d)]),
                                              [j.prismatic, j.revolute])
    return ArticulationGraph(nodes, edges, label)


def synth_graph(template: str, spec: SynthSpec, rng: Rng) -> ArticulationGraph:
    if template == "laptop_lid":
        n = 2
    elif spec.part_count is not None:
        n = spec.part_count
    else:
        n = int(rng.integers(spec.part_range[0], spec.part_range[1] + 1))
    shrink = 0.7 if spec.random_yaw else 1.0
    size = rng.uniform(spec.size_range[0], spec.size_range[1], 3) * shrink
    lay = _BUILDERS[template](n, size, rng)
    yaw = float(rng.uniform(-np.pi, np.pi)) if spec.random_yaw else 0.0
    return _to_graph(lay, yaw, spec, template)


def synth_dataset(spec: SynthSpec, count: int, rng: Optional[Rng] = None,
                  templates: Optional[Sequence[str]] = None) -> List[SynthSample]:
    """``count`` samples, each drawn from its own stream ``rng.derive(i)``."""
    if count < 1:
        raise ValueError(f"count must be at least 1, got {count}")
    templates = tuple(templates or TEMPLATES)
    unknown = set(templates) - set(TEMPLATES)
    if unknown:
        raise ValueError(f"unknown template(s) {sorted(unknown)}, expected some of {TEMPLATES}")
    rng = rng or Rng(spec.seed)
    samples = []
    for i in range(count):
        sub = rng.derive(i)
        template = spec.template or templates[i % len(templates)]
        g = synth_graph(template, spec, sub.derive("graph"))
        cloud = object_cloud(g, spec.n_points, sub.derive("points"))
        samples.append(SynthSample(g, cloud, template))
    return samples


def box_face_areas(b: np.ndarray) -> np.ndarray:
    """Areas of the -x, +x, -y, +y, -z, +z faces."""
    return np.array([b[1] * b[2], b[1] * b[2], b[0] * b[2], b[0] * b[2], b[0] * b[1], b[0] * b[1]])


def sample_box_surface(b, n: int, rng: Rng) -> Tuple[np.ndarray, np.ndarray]:
    """``n`` uniform points on a centered box surface, plus the face of each."""
    b = np.asarray(b, dtype=np.float64)
    if np.any(b <= 0):
        raise ValueError(f"box extents must be positive, got {b.tolist()}")
    areas = box_face_areas(b)
    faces = rng.choice(6, size=n, p=areas / areas.sum())
    pts = (rng.random((n, 3)) - 0.5) * b
    axis = faces // 2
    sign = np.where(faces % 2 == 0, -0.5, 0.5)
    pts[np.arange(n), axis] = sign * b[axis]
    return pts, faces


def sample_part_points(node: NodeAttr, n: int, rng: Rng,
                       transform: Optional[np.ndarray] = None) -> np.ndarray:
    """Surface points of a part's box, placed by ``transform`` (default: its T_g)."""
    if not node.exists:
        raise ValueError("cannot sample points from an absent part")
    local, _ = sample_box_surface(node.b, n, rng)
    M = tg_to_matrix(node.Tg) if transform is None else transform
    return transform_points(M, local)


def sample_object_points(g: ArticulationGraph, n: int, rng: Rng,
                         transforms: Optional[Dict[int, np.ndarray]] = None) -> Tuple[np.ndarray, np.ndarray]:
    """``n`` surface points over all parts, allotted by surface area; returns (xyz, slot)."""
    slots = g.existing()
    if not slots:
        raise ValueError("graph has no parts to sample")
    areas = np.array([box_face_areas(g.nodes[i].b).sum() for i in slots])
    counts = np.bincount(rng.choice(len(slots), size=n, p=areas / areas.sum()), minlength=len(slots))
    xyz, owner = [], []
    for slot, k in zip(slots, counts):
        if k == 0:
            continue
        M = None if transforms is None else transforms[slot]
        xyz.append(sample_part_points(g.nodes[slot], int(k), rng.derive("part", slot), M))
        owner.append(np.full(int(k), slot))
    return np.vstack(xyz), np.concatenate(owner)


def object_cloud(g: ArticulationGraph, n: int, rng: Rng,
                 transforms: Optional[Dict[int, np.ndarray]] = None) -> PointCloud:
    """Colored cloud with one palette color per part slot."""
    xyz, owner = sample_object_points(g, n, rng, transforms)
    return PointCloud.from_parts(xyz, PALETTE[owner % len(PALETTE)])
