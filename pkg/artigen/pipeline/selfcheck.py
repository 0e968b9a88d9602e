"""Numerical self-checks runnable from a fresh checkout in well under a minute."""
import itertools
import time
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from ..core.gradcheck import check_gradients
from ..core.optim import ParamSet
from ..core.rng import Rng
from ..core.tensor import mse
from ..diffusion.denoiser import Denoiser, DenoiserArch
from ..diffusion.sampler import denoise_step, q_sample
from ..diffusion.schedule import NoiseSchedule, make_schedule
from ..geometry.pointcloud import loss_pc_op
from ..graph.codec import plucker_project
from ..graph.tree import mst_extract
from ..graph.types import GraphDims
from ..hypernet.hypergraph import Hypergraph
from ..hypernet.losses import LossWeights, loss_hg
from ..logger_config import setup_logger
from ..metrics.distribution import cov, mmd, one_nna

logger = setup_logger('selfcheck')

GRAD_TOL = 1e-5
INVERSION_TOL = 1e-9
SPECTRAL_TOL = 1e-9
METRIC_TOL = 1e-12


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def gradient_check(instances: int = 10, seed: int = 0) -> str:
    """Tape gradients of the point-cloud, vertex-matrix and noise-regression losses."""
    rng = Rng(seed).derive("gradients")
    dims = GraphDims(K=3, F=2)
    worst = 0.0
    for n in range(instances):
        sub = rng.derive(n)
        target = sub.normal((5, 6))
        worst = max(worst, check_gradients(lambda p: loss_pc_op(p["cloud"], target),
                                           ParamSet({"cloud": sub.normal((5, 6))})))

        gt = sub.normal((2, dims.K * dims.d_v))
        gt[:, ::dims.d_v] = sub.integers(0, 2, size=(2, dims.K))
        worst = max(worst, check_gradients(lambda p: loss_hg(p["pred"], gt, LossWeights(), dims)[0],
                                           ParamSet({"pred": sub.normal(gt.shape)})))

        model = Denoiser.init(sub.derive("denoiser"), DenoiserArch(K=dims.K, F=dims.F, hidden=6, time_embed_dim=4))
        M_v = sub.normal((dims.K, dims.d_v))
        inputs = model.assemble(sub.normal((dims.n_pairs, dims.d_e)), 3, M_v)
        eps = sub.normal((dims.n_pairs, dims.d_e))
        worst = max(worst, check_gradients(lambda p: mse(model.forward(p, inputs), eps), model.params))
    if worst > GRAD_TOL:
        raise AssertionError(f"max relative gradient error {worst:.3g} exceeds {GRAD_TOL}")
    return f"max relative error {worst:.2e} over {3 * instances} instances"


def schedule_check(schedule: Optional[NoiseSchedule] = None) -> str:
    schedules = [schedule] if schedule else [make_schedule(1000), make_schedule(1000, sigma_rule="posterior"),
                                             make_schedule(1000).strided(10)]
    for s in schedules:
        errors = s.identity_errors()
        if errors:
            raise AssertionError("; ".join(errors))
    return f"{len(schedules)} schedules consistent"


def inversion_check(schedule: Optional[NoiseSchedule] = None, seed: int = 0) -> str:
    """One reverse step at t=1 with the true noise must give back the clean matrix."""
    schedule = schedule or make_schedule(1000)
    rng = Rng(seed).derive("inversion")
    M_0 = rng.normal((28, 11))
    eps = rng.normal(M_0.shape)
    M_1 = q_sample(M_0, 1, eps, schedule)
    recovered = denoise_step(M_1, 1, np.zeros((8, 138)), lambda M, t, V: eps, None, schedule)
    err = float(np.max(np.abs(recovered - M_0)))
    if err > INVERSION_TOL:
        raise AssertionError(f"t=1 inversion error {err:.3g} exceeds {INVERSION_TOL}")
    return f"max error {err:.2e}"


def _all_spanning_trees(nodes: List[int], pairs: List[tuple]):
    for subset in itertools.combinations(pairs, len(nodes) - 1):
        reached, frontier = {nodes[0]}, [nodes[0]]
        while frontier:
            u = frontier.pop()
            for i, j in subset:
                for a, b in ((i, j), (j, i)):
                    if a == u and b not in reached:
                        reached.add(b)
                        frontier.append(b)
        if len(reached) == len(nodes):
            yield subset


def brute_force_tree(weights: dict) -> List[tuple]:
    """The spanning tree whose ascending (weight, pair) list is smallest."""
    nodes = sorted({v for pair in weights for v in pair})
    best = min(_all_spanning_trees(nodes, sorted(weights)),
               key=lambda tree: sorted((weights[p], p) for p in tree))
    return sorted(best)


def mst_check(instances: int = 200, seed: int = 0) -> str:
    rng = Rng(seed).derive("mst")
    pairs = [(i, j) for i in range(4) for j in range(i + 1, 4)]
    for n in range(instances):
        # quarter steps make ties common
        weights = {p: float(w) / 4 for p, w in zip(pairs, rng.derive(n).integers(0, 5, size=len(pairs)))}
        got, want = mst_extract(range(4), weights), brute_force_tree(weights)
        if got != want:
            raise AssertionError(f"instance {n}: Kruskal gave {got}, exhaustive search gave {want}")
    return f"{instances} instances agree (16 trees each)"


def random_hypergraph(rng: Rng, n: int = 12, m: int = 5) -> Hypergraph:
    H = (rng.random((n, m)) < 0.4).astype(float)
    H[np.arange(n), rng.integers(0, m, size=n)] = 1.0
    H = H[:, H.sum(axis=0) > 0]
    return Hypergraph(H, rng.uniform(0.5, 2.0, size=H.shape[1]), np.zeros((H.shape[1], 1)))


def spectral_check(instances: int = 20, seed: int = 0) -> str:
    """S D_v^(1/2) 1 = D_v^(1/2) 1 and the spectrum of S lies in [-1, 1]."""
    rng = Rng(seed).derive("spectral")
    worst_vec, worst_rho = 0.0, 0.0
    for n in range(instances):
        hg = random_hypergraph(rng.derive(n))
        u = np.sqrt(hg.vertex_degrees)
        worst_vec = max(worst_vec, float(np.max(np.abs(hg.operator @ u - u))))
        worst_rho = max(worst_rho, float(np.max(np.abs(np.linalg.eigvalsh(hg.operator)))))
    if worst_vec > SPECTRAL_TOL or worst_rho > 1.0 + SPECTRAL_TOL:
        raise AssertionError(f"eigenvector residual {worst_vec:.3g}, spectral radius {worst_rho:.12g}")
    identity = Hypergraph(np.eye(6), np.ones(6), np.zeros((6, 1)))
    if not np.array_equal(identity.operator, np.eye(6)):
        raise AssertionError("identity incidence does not give the identity operator")
    return f"residual {worst_vec:.2e}, spectral radius {worst_rho:.12f}"


def plucker_check(seed: int = 0) -> str:
    rng = Rng(seed).derive("plucker")
    for n in range(100):
        p = plucker_project(rng.derive(n).normal(6))
        if abs(np.linalg.norm(p[:3]) - 1.0) > 1e-12 or abs(p[:3] @ p[3:]) > 1e-12:
            raise AssertionError(f"projection {n} is not a valid line")
        if not np.array_equal(plucker_project(p), p):
            raise AssertionError(f"projection {n} is not idempotent")
    return "100 projections valid and idempotent"


def metrics_check(instances: int = 50, seed: int = 0) -> str:
    rng = Rng(seed).derive("metrics")
    for n in range(instances):
        sub = rng.derive(n)
        D = sub.random((7, 9))
        want_mmd = np.mean([min(D[i, j] for i in range(7)) for j in range(9)])
        nearest = {min(range(9), key=lambda j: (D[i, j], j)) for i in range(7)}
        if abs(mmd(D) - want_mmd) > METRIC_TOL or abs(cov(D) - len(nearest) / 9) > METRIC_TOL:
            raise AssertionError(f"instance {n}: MMD/COV differ from the loop oracle")
        U = sub.random((10, 10))
        U = U + U.T
        hits = 0
        for i in range(10):
            j = min((k for k in range(10) if k != i), key=lambda k: (U[i, k], k))
            hits += (i < 5) == (j < 5)
        if abs(one_nna(U, 5) - hits / 10) > METRIC_TOL:
            raise AssertionError(f"instance {n}: 1-NNA differs from the loop oracle")
    return f"{instances} random matrices agree"


CHECKS: List[tuple] = [
    ("gradients", gradient_check),
    ("schedule identities", schedule_check),
    ("t=1 inversion", inversion_check),
    ("MST oracle (K=4)", mst_check),
    ("hypergraph spectrum", spectral_check),
    ("Plücker projection", plucker_check),
    ("metric oracles", metrics_check),
]


def run_selfcheck(checks=None, on_result: Optional[Callable[[CheckResult], None]] = None) -> List[CheckResult]:
    results = []
    for name, fn in checks or CHECKS:
        start = time.perf_counter()
        try:
            result = CheckResult(name, True, fn())
        except Exception as e:
            logger.error(f"Self-check '{name}' failed: {e}")
            result = CheckResult(name, False, str(e))
        result.seconds = time.perf_counter() - start
        logger.info(f"{name}: {'ok' if result.passed else 'FAILED'} ({result.detail})")
        results.append(result)
        if on_result:
            on_result(result)
    return results
