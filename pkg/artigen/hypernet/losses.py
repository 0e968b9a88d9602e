"""Composite vertex-matrix loss: whole-matrix MSE, box+existence and existence-gated terms.

Predictions and targets are flat ``(B, K * D_v)`` rows, node-major.
"""
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from ..core.tensor import (
    ShapeError, Tensor, TensorLike, add, as_tensor, matmul, mse, mul, reduce_mean, reduce_sum, scale,
    square, sub,
)
from ..graph.types import DEFAULT_DIMS, GraphDims

B_OFFSET = 7


@dataclass(frozen=True)
class LossWeights:
    matrix: float = 0.4
    bbox: float = 0.4
    exist: float = 1.0

    @classmethod
    def from_terms(cls, terms, base: "LossWeights" = None) -> "LossWeights":
        """Keep only the named terms (``matrix``, ``bbox``, ``exist``) at their base weights."""
        base = base or cls()
        unknown = set(terms) - {"matrix", "bbox", "exist"}
        if unknown:
            raise ValueError(f"unknown loss terms {sorted(unknown)}")
        return cls(*(getattr(base, t) if t in terms else 0.0 for t in ("matrix", "bbox", "exist")))


def _columns(dims: GraphDims) -> Tuple[np.ndarray, np.ndarray]:
    starts = np.arange(dims.K) * dims.d_v
    o_cols = starts
    b_cols = (starts[:, None] + B_OFFSET + np.arange(3)[None, :]).reshape(-1)
    return o_cols, b_cols


def _row_gate(dims: GraphDims) -> np.ndarray:
    """K x (K * D_v) matrix copying each node's flag across its row."""
    E = np.zeros((dims.K, dims.K * dims.d_v))
    for i in range(dims.K):
        E[i, i * dims.d_v:(i + 1) * dims.d_v] = 1.0
    return E


def loss_hg(pred: TensorLike, gt: np.ndarray, weights: LossWeights = LossWeights(),
            dims: GraphDims = DEFAULT_DIMS) -> Tuple[Tensor, Dict[str, float]]:
    """Weighted total plus each component's value; zero-weight terms are not computed."""
    pred = as_tensor(pred)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.ndim == 2 and gt.size == pred.size:
        gt = gt.reshape(pred.shape)
    if pred.ndim != 2 or pred.shape[1] != dims.K * dims.d_v or gt.shape != pred.shape:
        raise ShapeError(f"loss_hg: shape mismatch {pred.shape} vs {gt.shape}")
    o_cols, b_cols = _columns(dims)
    terms, components = [], {"matrix": 0.0, "bbox": 0.0, "exist": 0.0}

    if weights.matrix:
        l_matrix = mse(pred, gt)
        components["matrix"] = l_matrix.item()
        terms.append(scale(l_matrix, weights.matrix))

    if weights.bbox:
        d_o = square(sub(pred[:, o_cols], gt[:, o_cols]))
        d_b = square(sub(pred[:, b_cols], gt[:, b_cols]))
        l_bbox = add(reduce_mean(reduce_sum(d_o, axis=1)),
                     scale(reduce_mean(reduce_sum(d_b, axis=1)), 1.0 / 3.0))
        components["bbox"] = l_bbox.item()
        terms.append(scale(l_bbox, weights.bbox))

    if weights.exist:
        E = _row_gate(dims)
        gated_pred = mul(matmul(pred[:, o_cols], E), pred)
        gated_gt = (gt[:, o_cols] @ E) * gt
        l_exist = mse(gated_pred, gated_gt)
        components["exist"] = l_exist.item()
        terms.append(scale(l_exist, weights.exist))

    if not terms:
        raise ValueError("all loss weights are zero")
    total = terms[0]
    for t in terms[1:]:
        total = add(total, t)
    components["total"] = total.item()
    return total, components
