"""Hypergraph vertex extractor: HGNN layers followed by an MLP head producing M_v."""
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..core.checkpoint import load_checkpoint, save_checkpoint
from ..core.nn import dense_forward, init_dense
from ..core.optim import ParamSet
from ..core.rng import Rng
from ..core.tensor import Tensor
from ..graph.types import GraphDims
from .hypergraph import Hypergraph, attach_query, hgnn_layer

MODULE_NAME = "hypernet"
HEAD_LAYERS = 2


@dataclass(frozen=True)
class ExtractorArch:
    pattern_dim: int = 1024
    hidden: int = 256
    layers: int = 2
    K: int = 8
    F: int = 128
    use_hypergraph: bool = True

    @property
    def dims(self) -> GraphDims:
        return GraphDims(self.K, self.F)

    def layer_dims(self) -> Sequence[int]:
        """Widths through the HGNN stack, e.g. 1024 -> 1024 -> 256."""
        return [self.pattern_dim] * self.layers + [self.hidden]


class ExtractorModel:
    def __init__(self, params: ParamSet, arch: ExtractorArch = ExtractorArch()):
        self.params = params
        self.arch = arch
        self.meta: dict = {}

    @classmethod
    def init(cls, rng: Rng, arch: ExtractorArch = ExtractorArch()) -> "ExtractorModel":
        if arch.layers < 1:
            raise ValueError(f"extractor needs at least one HGNN layer, got {arch.layers}")
        widths = arch.layer_dims()
        values = {}
        for l in range(arch.layers):
            w = init_dense(rng.derive("hgnn", l), "hgnn", [widths[l], widths[l + 1]], bias=False)
            values[f"hgnn.{l}.theta"] = w["hgnn.0.weight"]
        out = arch.dims.K * arch.dims.d_v
        values.update(init_dense(rng.derive("head"), "head", [arch.hidden, arch.hidden, out]))
        return cls(ParamSet(values), arch)

    def forward(self, params, X: np.ndarray, S: Optional[np.ndarray],
                rows: Optional[np.ndarray] = None) -> Tensor:
        """Flat M_v rows for vertices ``rows`` (all vertices when None)."""
        if not self.arch.use_hypergraph:
            S = None
        h = Tensor(X, copy=False)
        if S is None and rows is not None:
            h, rows = h[rows], None
        L = self.arch.layers
        for l in range(L):
            last = l == L - 1
            S_l = S[rows] if last and rows is not None else S
            h = hgnn_layer(h, S_l, params[f"hgnn.{l}.theta"], last=last)
        return dense_forward(params, "head", h, HEAD_LAYERS)

    def extract_vertices(self, query: np.ndarray, vectors: np.ndarray, hg: Hypergraph,
                         knn: int = 4) -> np.ndarray:
        """M_v (K x D_v) for a query pattern vector attached to the dataset hypergraph."""
        dims = self.arch.dims
        query = np.asarray(query, dtype=np.float64).reshape(-1)
        if query.size != self.arch.pattern_dim:
            raise ValueError(f"query has {query.size} values, expected {self.arch.pattern_dim}")
        augmented = attach_query(hg, query, knn)
        X = np.vstack([vectors, query[None, :]])
        out = self.forward(self.params, X, augmented.operator, rows=np.array([X.shape[0] - 1]))
        return out.numpy().reshape(dims.K, dims.d_v)

    def save(self, path, meta: Optional[dict] = None, config: Optional[dict] = None):
        arch = {k: getattr(self.arch, k) for k in ExtractorArch.__dataclass_fields__}
        return save_checkpoint(path, MODULE_NAME, self.params.to_arrays(),
                               {"arch": arch, "step": self.params.step, **(meta or {})}, config)

    @classmethod
    def load(cls, path) -> "ExtractorModel":
        ckpt = load_checkpoint(path, MODULE_NAME)
        arch = ExtractorArch(**ckpt.meta["arch"])
        model = cls(ParamSet.from_arrays(ckpt.arrays, ckpt.meta.get("step", 0)), arch)
        model.meta = ckpt.meta
        return model
