import json
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

import numpy as np

from ..config import EvalConfig
from ..core.checkpoint import save_checkpoint
from ..graph.types import ArticulationGraph
from ..logger_config import setup_logger
from .distance import IdConfig, distance_matrix
from .distribution import cov, mmd, one_nna, union_matrix

logger = setup_logger('metrics.report')

MATRIX_MODULE = "metrics"
METRICS = ("cov", "mmd", "one_nna")
# column header and direction marker of each metric
HEADERS = {"cov": "COV↑", "mmd": "MMD↓", "one_nna": "1-NNA↓"}


def seed_metrics(gen: Sequence[ArticulationGraph], ref: Sequence[ArticulationGraph], cfg: IdConfig,
                 workers: int = 1) -> Dict[str, Any]:
    D_gr = distance_matrix(gen, ref, cfg, workers)
    D_gg = distance_matrix(gen, None, cfg, workers)
    D_rr = distance_matrix(ref, None, cfg, workers)
    return {
        "cov": cov(D_gr),
        "mmd": mmd(D_gr),
        "one_nna": one_nna(union_matrix(D_gg, D_gr, D_rr), len(gen)),
        "matrices": {"gen_ref": D_gr, "gen_gen": D_gg, "ref_ref": D_rr},
    }


def eval_report(gen: Sequence[ArticulationGraph], ref: Sequence[ArticulationGraph],
                config: EvalConfig = EvalConfig(), out_dir=None, regime: Optional[str] = None,
                config_echo: Optional[dict] = None) -> Dict[str, Any]:
    """COV / MMD / 1-NNA for every evaluation seed plus their mean and std.

    With ``out_dir`` the ID matrices of each seed are written there.
    """
    if not gen or not ref:
        raise ValueError(f"evaluation needs non-empty sets, got {len(gen)} generated and {len(ref)} reference")
    runs = []
    for seed in config.seeds:
        cfg = IdConfig(J=config.poses, N_s=config.surface_points, seed=int(seed))
        logger.info(f"Evaluating seed {seed}: {len(gen)} generated vs {len(ref)} reference objects")
        result = seed_metrics(gen, ref, cfg, config.workers)
        run = {"seed": int(seed), **{k: result[k] for k in METRICS}}
        if out_dir is not None:
            path = Path(out_dir) / f"distances_seed{seed}.bin"
            save_checkpoint(path, MATRIX_MODULE, result["matrices"],
                            {"seed": int(seed), "rows": "generated", "cols": "reference"}, config_echo)
            run["matrix_path"] = str(path)
        runs.append(run)

    summary = {}
    for k in METRICS:
        values = np.array([r[k] for r in runs])
        summary[k] = {"mean": float(values.mean()), "std": float(values.std())}
    return {
        "regime": regime,
        "n_generated": len(gen),
        "n_reference": len(ref),
        "seeds": [int(s) for s in config.seeds],
        "id_protocol": {"poses": config.poses, "surface_points": config.surface_points},
        "runs": runs,
        "summary": summary,
        "config": config_echo,
    }


def write_report(path, report: Dict[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return path
