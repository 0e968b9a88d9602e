"""Dense layer stacks built from the tensor op set."""
from typing import Dict, Mapping, Sequence

import numpy as np

from .rng import Rng
from .tensor import Tensor, linear, relu


def init_dense(rng: Rng, prefix: str, dims: Sequence[int], bias: bool = True) -> Dict[str, np.ndarray]:
    """Glorot-uniform weights for a stack ``dims[0] -> dims[1] -> ... -> dims[-1]``."""
    params = {}
    for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        params[f"{prefix}.{i}.weight"] = rng.uniform(-limit, limit, (fan_in, fan_out))
        if bias:
            params[f"{prefix}.{i}.bias"] = np.zeros(fan_out)
    return params


def dense_forward(params: Mapping[str, Tensor], prefix: str, x: Tensor, n_layers: int) -> Tensor:
    """relu between layers, identity after the last one."""
    for i in range(n_layers):
        x = linear(x, params[f"{prefix}.{i}.weight"], params.get(f"{prefix}.{i}.bias"))
        if i < n_layers - 1:
            x = relu(x)
    return x
