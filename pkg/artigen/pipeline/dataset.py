"""On-disk dataset: a manifest, one graph JSON and one binary cloud per sample.

The manifest carries no timestamps so re-running ``synth`` with the same
configuration produces identical bytes.
"""
import json
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..config import Config, ConfigManager, ModelConfig
from ..geometry.encoder import pattern_encode
from ..geometry.pointcloud import load_binary, save_binary
from ..geometry.synth import SynthSample
from ..graph.codec import encode_graph
from ..graph.export import export_json, import_json
from ..graph.types import ArticulationGraph, NodeAttr
from ..logger_config import setup_logger

MANIFEST = "manifest.json"
GENERATION_MANIFEST = "generation.json"
EVAL_REPORT = "eval_report.json"
MANIFEST_VERSION = 1


def fit_slots(g: ArticulationGraph, K: int) -> Optional[ArticulationGraph]:
    """Repack existing parts into the first slots of a K-slot graph; None if it has more than K parts."""
    existing = g.existing()
    if len(existing) > K:
        return None
    if g.K == K and existing == list(range(len(existing))):
        return g
    F = g.dims.F
    slot = {old: new for new, old in enumerate(existing)}
    nodes = [g.nodes[i] for i in existing] + [NodeAttr.absent(F)] * (K - len(existing))
    # slot order is preserved, so every pair keeps its orientation
    edges = {(slot[i], slot[j]): e for (i, j), e in g.edges.items()}
    return ArticulationGraph(tuple(nodes), edges, g.label)


class DatasetStore:
    def __init__(self, root):
        self.root = Path(root)
        self.logger = setup_logger('dataset')

    @property
    def manifest_path(self) -> Path:
        return self.root / MANIFEST

    def write(self, samples: Sequence[SynthSample], config: Config) -> Path:
        (self.root / "graphs").mkdir(parents=True, exist_ok=True)
        (self.root / "clouds").mkdir(parents=True, exist_ok=True)
        entries = []
        for i, s in enumerate(samples):
            graph_rel = f"graphs/{i:05d}.json"
            cloud_rel = f"clouds/{i:05d}.bin"
            (self.root / graph_rel).write_text(export_json(s.graph))
            save_binary(self.root / cloud_rel, s.cloud)
            entries.append({"index": i, "label": s.label, "parts": s.graph.part_count,
                            "graph": graph_rel, "cloud": cloud_rel})
        manifest = {
            "version": MANIFEST_VERSION,
            "config_hash": ConfigManager.config_hash(config),
            "seed": config.seed,
            "synth": ConfigManager.to_dict(config.synth),
            "model": {"K": config.model.K, "F": config.model.F},
            "count": len(entries),
            "entries": entries,
        }
        self.manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        self.logger.info(f"Wrote {len(entries)} samples to {self.root}")
        return self.manifest_path

    def manifest(self) -> dict:
        if not self.manifest_path.exists():
            raise FileNotFoundError(f"Dataset manifest not found: {self.manifest_path}")
        return json.loads(self.manifest_path.read_text())

    def load(self, K: int) -> List[SynthSample]:
        """Every sample with at most K parts, repacked to K slots."""
        samples = []
        for entry in self.manifest()["entries"]:
            g = import_json((self.root / entry["graph"]).read_text())
            fitted = fit_slots(g, K)
            if fitted is None:
                self.logger.warning(f"Skipping sample {entry['index']}: {g.part_count} parts exceed K={K}")
                continue
            samples.append(SynthSample(fitted, load_binary(self.root / entry["cloud"]), entry["label"]))
        if not samples:
            raise ValueError(f"no usable samples in {self.root}")
        self.logger.info(f"Loaded {len(samples)} samples from {self.root}")
        return samples


def load_graph_dir(path) -> List[ArticulationGraph]:
    """All graph JSON files under ``path`` in file-name order."""
    path = Path(path)
    if not path.is_dir():
        raise FileNotFoundError(f"Graph directory not found: {path}")
    files = sorted(p for p in path.glob("*.json") if p.name not in (MANIFEST, GENERATION_MANIFEST, EVAL_REPORT))
    if not files and (path / "graphs").is_dir():
        files = sorted((path / "graphs").glob("*.json"))
    if not files:
        raise ValueError(f"no graph JSON files in {path}")
    return [import_json(p.read_text()) for p in files]


def training_arrays(samples: Sequence[SynthSample],
                    model: ModelConfig) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(pattern vectors, M_v stack, M_e stack) for a list of samples."""
    vectors, vertices, edges = [], [], []
    for i, s in enumerate(samples):
        dims = s.graph.dims
        if (dims.K, dims.F) != (model.K, model.F):
            raise ValueError(f"sample {i} has K={dims.K}, F={dims.F}; model expects K={model.K}, F={model.F}")
        vectors.append(pattern_encode(s.cloud, model.encoder_seed, model.fps_points, model.pattern_dim))
        M_v, M_e = encode_graph(s.graph)
        vertices.append(M_v)
        edges.append(M_e)
    return np.stack(vectors), np.stack(vertices), np.stack(edges)
