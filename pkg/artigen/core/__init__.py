from .tensor import (
    NumericalError, ShapeError, Tape, Tensor, add, backward, broadcast_to, concat, index,
    linear, matmul, mse, mul, reduce_mean, reduce_sum, relu, scale, sigmoid, square, sub, trace,
)
from .optim import AdamState, ParamSet, adam_step, lr_at
from .rng import Rng

__all__ = [
    'Tensor', 'Tape', 'trace', 'backward', 'ShapeError', 'NumericalError',
    'matmul', 'add', 'mul', 'relu', 'sigmoid', 'reduce_sum', 'reduce_mean', 'square',
    'concat', 'index', 'broadcast_to', 'scale', 'sub', 'mse', 'linear',
    'ParamSet', 'AdamState', 'adam_step', 'lr_at', 'Rng',
]
