"""Named parameter sets, the Adam update and the step learning-rate schedule."""
from dataclasses import dataclass, field
from typing import Dict, Iterator, Mapping, Optional, Tuple

import numpy as np

from .tensor import NumericalError, ShapeError, Tensor

ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8


@dataclass
class AdamState:
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0


class ParamSet(Mapping[str, Tensor]):
    """Immutable map name -> trainable Tensor plus the Adam moments for each."""

    def __init__(self, values: Mapping[str, np.ndarray], state: Optional[AdamState] = None):
        self._params: Dict[str, Tensor] = {
            name: Tensor(value, requires_grad=True) for name, value in values.items()
        }
        state = state or AdamState()
        for name, p in self._params.items():
            state.m.setdefault(name, np.zeros(p.shape))
            state.v.setdefault(name, np.zeros(p.shape))
            if state.m[name].shape != p.shape or state.v[name].shape != p.shape:
                raise ShapeError(f"Adam moments for '{name}' do not match parameter shape {p.shape}")
        if state.step < 0:
            raise ValueError(f"Adam step count must be non-negative, got {state.step}")
        self.state = state

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._params)

    def __len__(self) -> int:
        return len(self._params)

    @property
    def step(self) -> int:
        return self.state.step

    def numpy(self) -> Dict[str, np.ndarray]:
        return {name: p.data for name, p in self._params.items()}

    def count(self) -> int:
        return sum(p.size for p in self._params.values())

    def to_arrays(self) -> Dict[str, np.ndarray]:
        """Flat array map including optimizer state, for checkpoints."""
        arrays = dict(self.numpy())
        for name in self._params:
            arrays[f"adam.m/{name}"] = self.state.m[name]
            arrays[f"adam.v/{name}"] = self.state.v[name]
        return arrays

    @classmethod
    def from_arrays(cls, arrays: Mapping[str, np.ndarray], step: int = 0) -> "ParamSet":
        values = {k: v for k, v in arrays.items() if not k.startswith("adam.")}
        state = AdamState(
            m={k[len("adam.m/"):]: v for k, v in arrays.items() if k.startswith("adam.m/")},
            v={k[len("adam.v/"):]: v for k, v in arrays.items() if k.startswith("adam.v/")},
            step=step,
        )
        return cls(values, state)


def adam_step(params: ParamSet, grads: Mapping[str, np.ndarray], lr: float,
              betas: Tuple[float, float] = ADAM_BETAS, eps: float = ADAM_EPS) -> ParamSet:
    """One bias-corrected Adam update; returns a new ParamSet."""
    b1, b2 = betas
    t = params.step + 1
    new_values, m_new, v_new = {}, {}, {}
    for name, p in params.items():
        g = grads.get(name)
        g = np.zeros(p.shape) if g is None else np.asarray(g, dtype=np.float64)
        if g.shape != p.shape:
            raise ShapeError(f"gradient for '{name}' has shape {g.shape}, parameter has {p.shape}")
        if not np.all(np.isfinite(g)):
            raise NumericalError(f"non-finite gradient for parameter '{name}'", where=name)
        m = b1 * params.state.m[name] + (1.0 - b1) * g
        v = b2 * params.state.v[name] + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        new_values[name] = p.data - lr * m_hat / (np.sqrt(v_hat) + eps)
        m_new[name], v_new[name] = m, v
    return ParamSet(new_values, AdamState(m_new, v_new, t))


def lr_at(step: int, base_lr: float, period: int = 20, gamma: float = 0.7) -> float:
    """Step decay: ``base_lr * gamma ** floor(step / period)``."""
    if step < 0:
        raise ValueError(f"step must be non-negative, got {step}")
    return base_lr * gamma ** (step // period)
