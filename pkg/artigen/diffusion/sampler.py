"""Forward noising and the reverse chain over edge matrices.

Vertex rows condition every step and are never noised; only the edge
matrix moves along the chain.
"""
import json
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from ..core.rng import Rng
from ..core.tensor import NumericalError, ShapeError
from ..graph.types import GraphDims
from ..logger_config import setup_logger
from .schedule import NoiseSchedule

logger = setup_logger('diffusion')

EpsModel = Callable[[np.ndarray, int, np.ndarray], np.ndarray]


def q_sample(M_0: np.ndarray, t, eps: np.ndarray, schedule: NoiseSchedule) -> np.ndarray:
    """sqrt(abar_t) M_0 + sqrt(1 - abar_t) eps; ``t`` may be one step per leading row."""
    M_0 = np.asarray(M_0, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if eps.shape != M_0.shape:
        raise ShapeError(f"q_sample: noise shape {eps.shape} does not match {M_0.shape}")
    schedule.check_index(t)
    ab = np.asarray(schedule.alpha_bars[t])
    if ab.ndim:
        ab = ab.reshape((-1,) + (1,) * (M_0.ndim - 1))
    return np.sqrt(ab) * M_0 + np.sqrt(1.0 - ab) * eps


def init_edge_noise(K: int, rng: Rng, d_e: int = 11) -> np.ndarray:
    """Standard normal edge matrix with a random +-1 added to the existence column."""
    if K < 2:
        raise ValueError(f"need at least two node slots, got K={K}")
    n_pairs = K * (K - 1) // 2
    M = rng.normal((n_pairs, d_e))
    M[:, 0] += rng.rademacher(n_pairs)
    return M


def denoise_step(M_t: np.ndarray, t: int, M_v: np.ndarray, eps_model: EpsModel,
                 z: Optional[np.ndarray], schedule: NoiseSchedule) -> np.ndarray:
    """One reverse step from schedule index ``t`` to ``t - 1``."""
    if not 1 <= t <= schedule.T:
        raise ValueError(f"denoise_step: t={t} outside the schedule's steps [1, {schedule.T}]")
    eps = np.asarray(eps_model(M_t, int(schedule.timesteps[t]), M_v), dtype=np.float64)
    if eps.shape != M_t.shape:
        raise ShapeError(f"noise prediction shape {eps.shape} does not match {M_t.shape}")
    alpha, alpha_bar = schedule.alphas[t], schedule.alpha_bars[t]
    mean = (M_t - (1.0 - alpha) / np.sqrt(1.0 - alpha_bar) * eps) / np.sqrt(alpha)
    if z is None:
        return mean
    return mean + schedule.sigmas[t] * z


def sample_edges(M_v: np.ndarray, eps_model: EpsModel, schedule: NoiseSchedule, rng: Rng,
                 dims: GraphDims = GraphDims(), trace_path: Optional[Path] = None) -> np.ndarray:
    """Run the chain from T down to 1 and return the clean edge matrix."""
    M_v = np.asarray(M_v, dtype=np.float64).view()
    M_v.setflags(write=False)
    M = init_edge_noise(dims.K, rng.derive("init"), dims.d_e)
    logger.debug(f"Sampling edges over {schedule.T} steps")
    trace_file = open(trace_path, "w") if trace_path else None
    try:
        for t in range(schedule.T, 0, -1):
            z = rng.derive("z", t).normal(M.shape) if t > 1 else None
            M = denoise_step(M, t, M_v, eps_model, z, schedule)
            if not np.all(np.isfinite(M)):
                logger.error(f"Non-finite edge matrix at step t={t}")
                raise NumericalError(f"sampling diverged at t={t}", where=f"t={t}")
            if trace_file:
                trace_file.write(json.dumps({"t": int(schedule.timesteps[t]),
                                             "mean_abs": float(np.abs(M).mean()),
                                             "max_abs": float(np.abs(M).max())}) + "\n")
    finally:
        if trace_file:
            trace_file.close()
    return M
