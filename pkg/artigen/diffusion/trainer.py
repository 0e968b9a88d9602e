import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from ..config import DiffusionConfig, ModelConfig
from ..core.optim import adam_step
from ..core.rng import Rng
from ..core.tensor import NumericalError, Tensor, backward, mse, trace
from ..hypernet.trainer import batch_rows, scheduled_lr
from ..logger_config import setup_logger
from .denoiser import Denoiser, DenoiserArch
from .sampler import q_sample
from .schedule import NoiseSchedule, make_schedule

logger = setup_logger('diffusion.trainer')

StepCallback = Callable[[int, Dict[str, float]], None]


@dataclass
class DenoiserTraining:
    model: Denoiser
    schedule: NoiseSchedule
    history: List[Dict[str, float]] = field(default_factory=list)


def noise_batch(model: Denoiser, M_v: np.ndarray, M_e: np.ndarray, schedule: NoiseSchedule,
                rng: Rng) -> Tuple[np.ndarray, np.ndarray]:
    """(network inputs, target noise) for one minibatch with uniform t in [1, T]."""
    B = M_e.shape[0]
    t = rng.integers(1, schedule.T + 1, size=B)
    eps = rng.normal(M_e.shape)
    M_t = q_sample(M_e, t, eps, schedule)
    return model.assemble(M_t, schedule.timesteps[t], M_v), eps.reshape(-1, M_e.shape[-1])


def denoiser_loss(model: Denoiser, params, inputs: np.ndarray, target: np.ndarray) -> Tensor:
    return mse(model.forward(params, inputs), target)


def train_denoiser(M_v: np.ndarray, M_e: np.ndarray, config: DiffusionConfig, model_config: ModelConfig,
                   rng: Rng, resume: Optional[Denoiser] = None,
                   on_step: Optional[StepCallback] = None) -> DenoiserTraining:
    """Regress the injected noise from noised edge matrices, vertices held clean."""
    M_v = np.asarray(M_v, dtype=np.float64)
    M_e = np.asarray(M_e, dtype=np.float64)
    if M_e.shape[0] == 0 or M_v.shape[0] != M_e.shape[0]:
        raise ValueError(f"need matching, non-empty vertex/edge sets, got {M_v.shape[0]} and {M_e.shape[0]}")
    schedule = make_schedule(config.T, config.beta_start, config.beta_end, config.sigma_rule)
    arch = DenoiserArch(K=model_config.K, F=model_config.F, hidden=config.hidden,
                        time_embed_dim=config.time_embed_dim)
    model = resume if resume is not None else Denoiser.init(rng.derive("init"), arch)
    params = model.params
    start = params.step
    N = M_e.shape[0]
    iters_per_epoch = max(1, math.ceil(N / config.batch_size))
    history: List[Dict[str, float]] = []
    logger.info(f"Training denoiser: {N} samples, {params.count()} parameters, "
                f"iterations {start}..{config.iterations}, T={schedule.T}")

    for it in range(start, config.iterations):
        rows = batch_rows(rng, it, N, config.batch_size)
        inputs, target = noise_batch(model, M_v[rows], M_e[rows], schedule, rng.derive("noise", it))
        lr = scheduled_lr(it, config.lr, config.lr_period, config.lr_gamma, config.lr_unit, iters_per_epoch,
                          config.lr_interval)
        try:
            with trace():
                loss = denoiser_loss(model, params, inputs, target)
            grads = backward(loss, params)
            params = adam_step(params, grads, lr, tuple(config.betas), config.eps)
        except NumericalError as e:
            logger.error(f"Non-finite value at iteration {it + 1}: {e}")
            raise NumericalError(f"denoiser training diverged at iteration {it + 1}: {e}",
                                 where=f"iteration {it + 1}") from e
        record = {"iteration": it + 1, "lr": lr, "total": loss.item()}
        history.append(record)
        if config.log_every and (it + 1) % config.log_every == 0:
            logger.info(f"iter {it + 1}: loss {record['total']:.6g} lr {lr:.3g}")
        if on_step:
            on_step(it + 1, record)

    return DenoiserTraining(Denoiser(params, arch), schedule, history)
