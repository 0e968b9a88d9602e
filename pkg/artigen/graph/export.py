"""JSON and URDF serialization of articulation graphs."""
import json
import xml.etree.ElementTree as ET

import numpy as np

from .se3 import matrix_to_rpy, tg_to_matrix
from .tree import traversal
from .types import PRISMATIC, REVOLUTE, ArticulationGraph, EdgeAttr, NodeAttr
from .validate import validate

SCHEMA_NAME = "artigen-graph"
SCHEMA_VERSION = 1


def _require_valid(g: ArticulationGraph) -> None:
    violations = validate(g)
    if violations:
        raise ValueError("invalid articulation graph: " + "; ".join(violations))


def graph_to_dict(g: ArticulationGraph) -> dict:
    return {
        "schema": SCHEMA_NAME,
        "version": SCHEMA_VERSION,
        "label": g.label,
        "nodes": [
            {"o": n.o, "Tg": n.Tg.tolist(), "b": n.b.tolist(), "f": n.f.tolist()}
            for n in g.nodes
        ],
        "edges": [
            {"pair": [i, j], "c": e.c, "plucker": e.plucker.tolist(), "range": e.range.tolist()}
            for (i, j), e in g.edges.items()
        ],
    }


def graph_from_dict(data: dict) -> ArticulationGraph:
    if data.get("schema") != SCHEMA_NAME:
        raise ValueError(f"not an articulation graph document (schema={data.get('schema')!r})")
    if data.get("version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported graph schema version {data.get('version')}")
    try:
        nodes = [NodeAttr(float(n["o"]), n["Tg"], n["b"], n["f"]) for n in data["nodes"]]
        edges = {
            tuple(e["pair"]): EdgeAttr(float(e["c"]), e["plucker"], e["range"])
            for e in data["edges"]
        }
    except (KeyError, TypeError) as e:
        raise ValueError(f"malformed graph document: {e}") from e
    return ArticulationGraph(nodes, edges, data.get("label"))


def export_json(g: ArticulationGraph) -> str:
    _require_valid(g)
    return json.dumps(graph_to_dict(g), indent=2) + "\n"


def import_json(text: str) -> ArticulationGraph:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValueError(f"graph JSON is unreadable: {e}") from e
    return graph_from_dict(data)


def _fmt(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def _link(robot: ET.Element, name: str, node: NodeAttr = None, frame_origin=None) -> None:
    link = ET.SubElement(robot, "link", name=name)
    if node is None:
        return
    M = tg_to_matrix(node.Tg)
    xyz = M[:3, 3] - frame_origin
    for tag in ("visual", "collision"):
        el = ET.SubElement(link, tag)
        ET.SubElement(el, "origin", xyz=_fmt(xyz), rpy=_fmt(matrix_to_rpy(M)))
        geometry = ET.SubElement(el, "geometry")
        ET.SubElement(geometry, "box", size=_fmt(node.b))


def _joint(robot: ET.Element, name: str, kind: str, parent: str, child: str,
           xyz, axis=None, limit=None) -> None:
    joint = ET.SubElement(robot, "joint", name=name, type=kind)
    ET.SubElement(joint, "parent", link=parent)
    ET.SubElement(joint, "child", link=child)
    ET.SubElement(joint, "origin", xyz=_fmt(xyz), rpy="0.0 0.0 0.0")
    if axis is not None:
        ET.SubElement(joint, "axis", xyz=_fmt(axis))
    if limit is not None:
        ET.SubElement(joint, "limit", lower=repr(float(limit[0])), upper=repr(float(limit[1])),
                      effort="10.0", velocity="1.0")


def export_urdf(g: ArticulationGraph, name: str = None) -> str:
    """URDF 1.0 text: one box link per part, joints in breadth-first order.

    Link frames are world-aligned and sit on the incoming joint axis, so
    joint axes are the world-frame directions. An edge with both ranges open
    becomes a prismatic joint, a massless link and a revolute joint.
    """
    _require_valid(g)
    robot = ET.Element("robot", name=name or g.label or "articulated_object")
    root = g.root()
    origins = {root: np.zeros(3)}
    order = traversal(g)
    for p, c in order:
        e = g.edges[(min(p, c), max(p, c))]
        origins[c] = np.cross(e.direction, e.moment)

    for i in sorted(origins):
        _link(robot, f"part_{i}", g.nodes[i], origins[i])

    for p, c in order:
        e: EdgeAttr = g.edges[(min(p, c), max(p, c))]
        xyz = origins[c] - origins[p]
        parent, child = f"part_{p}", f"part_{c}"
        joint = f"joint_{p}_{c}"
        prismatic, revolute = e.is_prismatic(), e.is_revolute()
        if prismatic and revolute:
            slider = f"part_{c}_slider"
            _link(robot, slider)
            _joint(robot, joint + "_slide", "prismatic", parent, slider, xyz,
                   e.direction, e.range[PRISMATIC])
            _joint(robot, joint + "_hinge", "revolute", slider, child, np.zeros(3),
                   e.chirality * e.direction, e.range[REVOLUTE])
        elif prismatic:
            _joint(robot, joint, "prismatic", parent, child, xyz, e.direction, e.range[PRISMATIC])
        elif revolute:
            _joint(robot, joint, "revolute", parent, child, xyz,
                   e.chirality * e.direction, e.range[REVOLUTE])
        else:
            _joint(robot, joint, "fixed", parent, child, xyz)

    ET.indent(robot)
    return '<?xml version="1.0"?>\n' + ET.tostring(robot, encoding="unicode") + "\n"
