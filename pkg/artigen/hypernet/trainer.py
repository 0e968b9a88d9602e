import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from ..config import ExtractorConfig, ModelConfig
from ..core.optim import adam_step, lr_at
from ..core.rng import Rng
from ..core.tensor import NumericalError, backward, trace
from ..logger_config import setup_logger
from .hypergraph import Hypergraph, build_hypergraph
from .kmeans import kmeans
from .losses import LossWeights, loss_hg
from .model import ExtractorArch, ExtractorModel

logger = setup_logger('hypernet.trainer')

StepCallback = Callable[[int, Dict[str, float]], None]


@dataclass
class ExtractorTraining:
    model: ExtractorModel
    hypergraph: Hypergraph
    vectors: np.ndarray
    history: List[Dict[str, float]] = field(default_factory=list)


def scheduled_lr(iteration: int, base_lr: float, period: int, gamma: float, unit: str,
                 iters_per_epoch: int, interval: int = 100) -> float:
    """Rate at ``iteration``; the scheduler steps once per ``unit``."""
    if unit == "interval":
        step = iteration // interval
    elif unit == "epoch":
        step = iteration // iters_per_epoch
    else:
        step = iteration
    return lr_at(step, base_lr, period, gamma)


def batch_rows(rng: Rng, iteration: int, n: int, batch_size: int) -> np.ndarray:
    """Rows for one iteration; depends only on the iteration number."""
    return np.sort(rng.derive("batch", iteration).choice(n, size=batch_size, replace=n < batch_size))


def fit_hypergraph(vectors: np.ndarray, config: ExtractorConfig, rng: Rng) -> Hypergraph:
    C = config.C
    if vectors.shape[0] < C:
        logger.warning(f"Reducing C from {C} to dataset size {vectors.shape[0]}")
        C = vectors.shape[0]
    clusters = kmeans(vectors, C, rng.derive("kmeans"))
    logger.info(f"k-means: C={C}, {clusters.iterations} iterations, inertia {clusters.inertia:.6g}")
    return build_hypergraph(vectors, clusters.centroids, config.knn)


def train_extractor(vectors: np.ndarray, targets: np.ndarray, config: ExtractorConfig,
                    model_config: ModelConfig, rng: Rng, resume: Optional[ExtractorModel] = None,
                    on_step: Optional[StepCallback] = None) -> ExtractorTraining:
    """Fit the extractor on (pattern vector, flat M_v) pairs.

    Training is transductive: every dataset vector is a hypergraph vertex
    and each batch reads its rows of the propagated features.
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64).reshape(vectors.shape[0], -1)
    if vectors.shape[0] == 0:
        raise ValueError("cannot train the extractor on an empty dataset")
    arch = ExtractorArch(pattern_dim=model_config.pattern_dim, hidden=config.hidden,
                         layers=config.hgnn_layers, K=model_config.K, F=model_config.F,
                         use_hypergraph=config.use_hypergraph)
    weights = LossWeights(config.lambda_matrix, config.lambda_bbox, config.lambda_exist)
    hg = fit_hypergraph(vectors, config, rng)
    S = hg.operator if config.use_hypergraph else None

    model = resume if resume is not None else ExtractorModel.init(rng.derive("init"), arch)
    params = model.params
    start = params.step
    N = vectors.shape[0]
    iters_per_epoch = max(1, math.ceil(N / config.batch_size))
    history: List[Dict[str, float]] = []
    logger.info(f"Training extractor: {N} samples, {params.count()} parameters, "
                f"iterations {start}..{config.iterations}")

    for it in range(start, config.iterations):
        rows = batch_rows(rng, it, N, config.batch_size)
        lr = scheduled_lr(it, config.lr, config.lr_period, config.lr_gamma, config.lr_unit, iters_per_epoch,
                          config.lr_interval)
        try:
            with trace():
                pred = model.forward(params, vectors, S, rows)
                loss, components = loss_hg(pred, targets[rows], weights, arch.dims)
            grads = backward(loss, params)
            params = adam_step(params, grads, lr, tuple(config.betas), config.eps)
        except NumericalError as e:
            logger.error(f"Non-finite value at iteration {it + 1}: {e}")
            raise NumericalError(f"extractor training diverged at iteration {it + 1}: {e}",
                                 where=f"iteration {it + 1}") from e
        record = {"iteration": it + 1, "lr": lr, **components}
        history.append(record)
        if config.log_every and (it + 1) % config.log_every == 0:
            logger.info(f"iter {it + 1}: loss {components['total']:.6g} "
                        f"(matrix {components['matrix']:.4g}, bbox {components['bbox']:.4g}, "
                        f"exist {components['exist']:.4g}) lr {lr:.3g}")
        if on_step:
            on_step(it + 1, record)

    model = ExtractorModel(params, arch)
    return ExtractorTraining(model, hg, vectors, history)
