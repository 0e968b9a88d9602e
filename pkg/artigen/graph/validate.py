from typing import List

import numpy as np

from .tree import traversal
from .types import ArticulationGraph

UNIT_TOL = 1e-9


def validate(g: ArticulationGraph, require_tree: bool = True) -> List[str]:
    """Every invariant violation in ``g`` as a readable message; empty when valid."""
    violations = []
    F = g.nodes[0].f.size if g.nodes else 0
    for i, n in enumerate(g.nodes):
        if n.o not in (0.0, 1.0):
            violations.append(f"node {i}: existence flag {n.o} not in {{0, 1}}")
        if n.f.size != F:
            violations.append(f"node {i}: shape latent has {n.f.size} values, expected {F}")
        if not (np.all(np.isfinite(n.Tg)) and np.all(np.isfinite(n.b)) and np.all(np.isfinite(n.f))):
            violations.append(f"node {i}: non-finite attribute")
            continue
        if n.exists:
            if np.any(n.b <= 0):
                violations.append(f"node {i}: bounding box extents {n.b.tolist()} must be positive")
            angle = float(np.linalg.norm(n.rotvec))
            if angle > np.pi + UNIT_TOL:
                violations.append(f"node {i}: rotation angle {angle:.6g} exceeds pi")

    for (i, j), e in g.edges.items():
        pair = (i, j)
        if not (0 <= i < j < g.K):
            violations.append(f"edge {pair}: slot indices out of range")
            continue
        if not (g.nodes[i].exists and g.nodes[j].exists):
            violations.append(f"edge {pair}: touches a non-existent node")
        if e.c not in (-1.0, 1.0):
            violations.append(f"edge {pair}: chirality {e.c} not in {{-1, 1}}")
        if not (np.all(np.isfinite(e.plucker)) and np.all(np.isfinite(e.range))):
            violations.append(f"edge {pair}: non-finite attribute")
            continue
        d, m = e.direction, e.moment
        if abs(np.linalg.norm(d) - 1.0) > UNIT_TOL:
            violations.append(f"edge {pair}: axis direction is not unit length")
        if abs(d @ m) > UNIT_TOL:
            violations.append(f"edge {pair}: Plücker moment not orthogonal to direction")
        for k, kind in enumerate(("prismatic", "revolute")):
            if e.range[k][0] > e.range[k][1]:
                violations.append(f"edge {pair}: {kind} range order (lo > hi)")

    if require_tree and not violations:
        if not g.existing():
            return ["graph has no parts"]
        try:
            traversal(g)
        except ValueError as err:
            violations.append(str(err))
    return violations
