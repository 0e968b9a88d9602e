"""Central finite-difference checks against the tape's analytic gradients."""
from typing import Callable, Dict, Mapping

import numpy as np

from .optim import ParamSet
from .tensor import Tensor, backward, trace

LossFn = Callable[[Mapping[str, Tensor]], Tensor]


def analytic_gradient(loss_fn: LossFn, params: ParamSet) -> Dict[str, np.ndarray]:
    with trace():
        loss = loss_fn(params)
    return backward(loss, params)


def numerical_gradient(loss_fn: LossFn, params: ParamSet, eps: float = 1e-5) -> Dict[str, np.ndarray]:
    base = params.numpy()
    grads = {}
    for name, value in base.items():
        g = np.zeros(value.shape)
        flat = g.reshape(-1)
        for k in range(value.size):
            bumped = []
            for sign in (1.0, -1.0):
                shifted = value.copy().reshape(-1)
                shifted[k] += sign * eps
                values = dict(base)
                values[name] = shifted.reshape(value.shape)
                bumped.append(loss_fn(ParamSet(values)).item())
            flat[k] = (bumped[0] - bumped[1]) / (2.0 * eps)
        grads[name] = g
    return grads


def relative_error(analytic: Mapping[str, np.ndarray], numeric: Mapping[str, np.ndarray]) -> float:
    """Largest per-parameter ||a - n|| / max(||a|| + ||n||, 1e-12)."""
    worst = 0.0
    for name in analytic:
        a, n = analytic[name], numeric[name]
        denom = max(np.linalg.norm(a) + np.linalg.norm(n), 1e-12)
        worst = max(worst, float(np.linalg.norm(a - n) / denom))
    return worst


def check_gradients(loss_fn: LossFn, params: ParamSet, eps: float = 1e-5) -> float:
    return relative_error(analytic_gradient(loss_fn, params), numerical_gradient(loss_fn, params, eps))
