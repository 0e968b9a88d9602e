"""Per-edge noise predictor conditioned on the two endpoint vertex rows."""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..core.checkpoint import load_checkpoint, save_checkpoint
from ..core.nn import dense_forward, init_dense
from ..core.optim import ParamSet
from ..core.rng import Rng
from ..core.tensor import Tensor
from ..graph.types import GraphDims

MODULE_NAME = "jointdiff"
MLP_LAYERS = 3


def time_embedding(t, dim: int = 32) -> np.ndarray:
    """Sinusoidal embedding of (original) timestep labels, shape (len(t), dim)."""
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    half = dim // 2
    freqs = np.exp(-np.log(10000.0) * np.arange(half) / half)
    angles = t[:, None] * freqs[None, :]
    return np.concatenate([np.sin(angles), np.cos(angles)], axis=1)


@dataclass(frozen=True)
class DenoiserArch:
    K: int = 8
    F: int = 128
    hidden: int = 256
    time_embed_dim: int = 32

    @property
    def dims(self) -> GraphDims:
        return GraphDims(self.K, self.F)

    @property
    def input_dim(self) -> int:
        d = self.dims
        return d.d_e + 2 * d.d_v + self.time_embed_dim


class Denoiser:
    """eps_theta(M_t, t, M_v): one shared MLP applied to every pair row."""

    def __init__(self, params: ParamSet, arch: DenoiserArch = DenoiserArch()):
        self.params = params
        self.arch = arch
        self.meta: dict = {}
        pairs = np.array(arch.dims.pairs)
        self._left, self._right = pairs[:, 0], pairs[:, 1]

    @classmethod
    def init(cls, rng: Rng, arch: DenoiserArch = DenoiserArch()) -> "Denoiser":
        dims = [arch.input_dim, arch.hidden, arch.hidden, arch.dims.d_e]
        return cls(ParamSet(init_dense(rng, "mlp", dims)), arch)

    def assemble(self, M_t: np.ndarray, t, M_v: np.ndarray) -> np.ndarray:
        """Network inputs for a batch: (B * pairs, D_e + 2 D_v + embed)."""
        M_t = np.asarray(M_t, dtype=np.float64)
        M_v = np.asarray(M_v, dtype=np.float64)
        if M_t.ndim == 2:
            M_t, M_v = M_t[None], M_v[None]
        B, P, _ = M_t.shape
        t = np.broadcast_to(np.asarray(t), (B,))
        emb = np.repeat(time_embedding(t, self.arch.time_embed_dim), P, axis=0)
        rows = np.concatenate([M_t, M_v[:, self._left], M_v[:, self._right]], axis=2)
        return np.hstack([rows.reshape(B * P, -1), emb])

    def forward(self, params, inputs: np.ndarray) -> Tensor:
        return dense_forward(params, "mlp", Tensor(inputs, copy=False), MLP_LAYERS)

    def __call__(self, M_t: np.ndarray, t, M_v: np.ndarray) -> np.ndarray:
        out = self.forward(self.params, self.assemble(M_t, t, M_v)).numpy()
        return out.reshape(np.shape(M_t))

    def save(self, path, meta: Optional[dict] = None, config: Optional[dict] = None):
        arch = {k: getattr(self.arch, k) for k in DenoiserArch.__dataclass_fields__}
        return save_checkpoint(path, MODULE_NAME, self.params.to_arrays(),
                               {"arch": arch, "step": self.params.step, **(meta or {})}, config)

    @classmethod
    def load(cls, path) -> "Denoiser":
        ckpt = load_checkpoint(path, MODULE_NAME)
        model = cls(ParamSet.from_arrays(ckpt.arrays, ckpt.meta.get("step", 0)),
                    DenoiserArch(**ckpt.meta["arch"]))
        model.meta = ckpt.meta
        return model
