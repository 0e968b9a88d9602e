import csv
import json
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from ..config import Config, ConfigManager
from ..core.rng import Rng
from ..diffusion.denoiser import Denoiser, DenoiserArch
from ..diffusion.sampler import sample_edges
from ..diffusion.schedule import make_schedule
from ..diffusion.trainer import DenoiserTraining, train_denoiser
from ..geometry.encoder import pattern_encode
from ..geometry.pointcloud import PointCloud, load_cloud
from ..geometry.synth import SynthSpec, object_cloud, synth_dataset, synth_graph
from ..graph.codec import Thresholds, quantize_vertices, to_tree
from ..graph.export import export_json, export_urdf, import_json
from ..graph.validate import validate
from ..hypernet.hypergraph import load_hypergraph, save_hypergraph
from ..hypernet.model import ExtractorModel
from ..hypernet.trainer import ExtractorTraining, train_extractor
from ..logger_config import setup_logger
from ..metrics.report import eval_report, write_report
from .dataset import EVAL_REPORT, GENERATION_MANIFEST, DatasetStore, load_graph_dir, training_arrays
from .prompt import Prompt, parse_prompt
from .types import GenerationResult, StageError

StepCallback = Callable[[int, Dict[str, float]], None]

EXTRACTOR_CKPT = "extractor.ckpt"
HYPERGRAPH_CKPT = "hypergraph.bin"
DENOISER_CKPT = "denoiser.ckpt"
EXTRACTOR_LOSS = "extractor_loss.csv"
DENOISER_LOSS = "denoiser_loss.csv"
HISTORY_META_SUFFIX = ".meta.json"


class Pipeline:
    """Runs the stages end to end: synthesize, train both networks, generate, evaluate.

    Every stage draws from its own stream of the root seed, so stages can be
    re-run independently and reproduce their artifacts.
    """

    def __init__(self, config: Config):
        self.logger = setup_logger('pipeline')
        self.config = config
        self.config_hash = ConfigManager.config_hash(config)
        self.dataset = DatasetStore(config.paths.dataset_dir)
        self.checkpoints = Path(config.paths.checkpoint_dir)
        self.logger.info(f"Initializing pipeline (config {self.config_hash}, seed {config.seed})")

    def stage_rng(self, stage: str) -> Rng:
        return Rng(self.config.seed).derive(stage)

    def _synth_spec(self, template: Optional[str] = None) -> SynthSpec:
        s, m = self.config.synth, self.config.model
        return SynthSpec(template=template, part_range=tuple(s.part_range), size_range=tuple(s.size_range),
                         n_points=s.n_points, random_yaw=s.random_yaw, seed=self.config.seed, K=m.K, F=m.F)

    def _artifact_meta(self) -> dict:
        return {"config_hash": self.config_hash}

    def _config_echo(self) -> dict:
        return {"config_hash": self.config_hash, **ConfigManager.to_dict(self.config)}

    # -- synth -------------------------------------------------------------

    def synth(self) -> Path:
        s = self.config.synth
        samples = synth_dataset(self._synth_spec(), s.count, self.stage_rng("synth"), s.templates)
        return self.dataset.write(samples, self.config)

    # -- training ----------------------------------------------------------

    def _write_history(self, path: Path, history: List[Dict[str, float]], append: bool) -> Path:
        if not history and append:
            return path
        fields = list(history[0]) if history else ["iteration", "lr", "total"]
        append = append and path.exists()
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "a" if append else "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=fields)
            if not append:
                writer.writeheader()
            for record in history:
                writer.writerow({k: repr(float(v)) if k != "iteration" else int(v) for k, v in record.items()})
        self._write_history_meta(path, history, fields, append)
        return path

    def _write_history_meta(self, path: Path, history: List[Dict[str, float]], fields: List[str],
                            append: bool) -> Path:
        """Sidecar naming the config each run of iterations in the CSV was trained with."""
        meta_path = path.with_suffix(HISTORY_META_SUFFIX)
        segments = []
        if append and meta_path.exists():
            segments = json.loads(meta_path.read_text()).get("segments", [])
        if history:
            segments.append({"config_hash": self.config_hash, "first": int(history[0]["iteration"]),
                             "last": int(history[-1]["iteration"])})
        meta = {"config_hash": self.config_hash, "columns": fields, "segments": segments}
        meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        return meta_path

    def _training_data(self):
        samples = self.dataset.load(self.config.model.K)
        return training_arrays(samples, self.config.model)

    def train_extractor(self, resume: bool = False,
                        on_step: Optional[StepCallback] = None) -> ExtractorTraining:
        vectors, M_v, _ = self._training_data()
        ckpt = self.checkpoints / EXTRACTOR_CKPT
        model = ExtractorModel.load(ckpt) if resume else None
        if model is not None:
            self.logger.info(f"Resuming extractor from {ckpt} at iteration {model.params.step}")
        ex = self.config.extractor
        result = train_extractor(vectors, M_v.reshape(len(M_v), -1), ex, self.config.model,
                                 self.stage_rng("extract"), resume=model, on_step=on_step)
        result.model.save(ckpt, self._artifact_meta(), self._config_echo())
        save_hypergraph(self.checkpoints / HYPERGRAPH_CKPT, result.hypergraph, result.vectors, ex.knn,
                        self._artifact_meta())
        self._write_history(self.checkpoints / EXTRACTOR_LOSS, result.history, append=resume)
        self.logger.info(f"Saved extractor to {ckpt}")
        return result

    def train_denoiser(self, resume: bool = False,
                       on_step: Optional[StepCallback] = None) -> DenoiserTraining:
        _, M_v, M_e = self._training_data()
        ckpt = self.checkpoints / DENOISER_CKPT
        model = Denoiser.load(ckpt) if resume else None
        if model is not None:
            self.logger.info(f"Resuming denoiser from {ckpt} at iteration {model.params.step}")
        result = train_denoiser(M_v, M_e, self.config.diffusion, self.config.model,
                                self.stage_rng("diffuse"), resume=model, on_step=on_step)
        result.model.save(ckpt, self._artifact_meta(), self._config_echo())
        self._write_history(self.checkpoints / DENOISER_LOSS, result.history, append=resume)
        self.logger.info(f"Saved denoiser to {ckpt}")
        return result

    # -- generation --------------------------------------------------------

    def untrained_denoiser(self) -> Denoiser:
        """The initial weights training would start from."""
        d, m = self.config.diffusion, self.config.model
        arch = DenoiserArch(K=m.K, F=m.F, hidden=d.hidden, time_embed_dim=d.time_embed_dim)
        return Denoiser.init(self.stage_rng("diffuse").derive("init"), arch)

    def _stage(self, name: str, index: int, fn, *args):
        self.logger.debug(f"sample {index}: stage '{name}'")
        try:
            return fn(*args)
        except StageError:
            raise
        except Exception as e:
            self.logger.error(f"Stage '{name}' failed for sample {index}: {e}")
            raise StageError(name, index, e) from e

    def generate(self, prompt: str, count: int = 1, urdf: bool = False, untrained: bool = False,
                 cloud_path: Optional[str] = None, out_dir=None) -> List[GenerationResult]:
        """Generate ``count`` objects for a template label or a text prompt."""
        if count < 1:
            raise ValueError(f"count must be at least 1, got {count}")
        parsed = parse_prompt(prompt)
        out_dir = Path(out_dir or self.config.paths.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

        extractor = ExtractorModel.load(self.checkpoints / EXTRACTOR_CKPT)
        hg, vectors, hg_meta = load_hypergraph(self.checkpoints / HYPERGRAPH_CKPT)
        denoiser = self.untrained_denoiser() if untrained else Denoiser.load(self.checkpoints / DENOISER_CKPT)
        d = self.config.diffusion
        schedule = make_schedule(d.T, d.beta_start, d.beta_end, d.sigma_rule).strided(d.sample_stride)
        given = load_cloud(cloud_path) if cloud_path else None
        self.logger.info(f"Generating {count} '{parsed.label}' objects (variant {parsed.variant}, "
                         f"{parsed.regime} prompt, {schedule.T} sampling steps)")

        rng = self.stage_rng("generate").derive(parsed.variant)
        results = []
        for i in range(count):
            sub = rng.derive(i)
            cloud = given if given is not None else self._stage("ingest", i, self._prompt_cloud, parsed, sub)
            m = self.config.model
            query = self._stage("encode", i, pattern_encode, cloud, m.encoder_seed, m.fps_points, m.pattern_dim)
            M_v = self._stage("extract", i, lambda: quantize_vertices(
                extractor.extract_vertices(query, vectors, hg, hg_meta.get("knn", self.config.extractor.knn))))
            M_e = self._stage("sample", i, sample_edges, M_v, denoiser, schedule, sub.derive("edges"),
                              extractor.arch.dims)
            g = self._stage("decode", i, to_tree, M_v, M_e, Thresholds(), extractor.arch.dims,
                            parsed.label)
            result = GenerationResult(i, parsed.label, g, M_v, M_e, violations=validate(g))
            if result.valid:
                self._stage("export", i, self._export, result, out_dir, urdf)
            else:
                self.logger.warning(f"Sample {i} is not a valid tree: {'; '.join(result.violations)}")
            results.append(result)

        self._write_generation_manifest(out_dir, parsed, results, untrained)
        return results

    def _prompt_cloud(self, prompt: Prompt, rng: Rng) -> PointCloud:
        spec = self._synth_spec(prompt.label)
        g = synth_graph(prompt.label, spec, rng.derive("graph"))
        return object_cloud(g, spec.n_points, rng.derive("points"))

    def _export(self, result: GenerationResult, out_dir: Path, urdf: bool) -> None:
        stem = f"{result.label}_{result.index:03d}"
        result.json_path = out_dir / f"{stem}.json"
        result.json_path.write_text(export_json(result.graph))
        if urdf:
            result.urdf_path = out_dir / f"{stem}.urdf"
            result.urdf_path.write_text(export_urdf(result.graph, stem))

    def _write_generation_manifest(self, out_dir: Path, prompt: Prompt, results: Sequence[GenerationResult],
                                   untrained: bool) -> Path:
        manifest = {
            "config_hash": self.config_hash,
            "prompt": prompt.text,
            "label": prompt.label,
            "variant": prompt.variant,
            "regime": prompt.regime,
            "untrained_denoiser": untrained,
            "samples": [{"index": r.index, "valid": r.valid, "parts": r.graph.part_count,
                         "edges": len(r.graph.edges), "violations": r.violations,
                         "json": r.json_path.name if r.json_path else None,
                         "urdf": r.urdf_path.name if r.urdf_path else None} for r in results],
        }
        path = out_dir / GENERATION_MANIFEST
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return path

    # -- evaluation and export --------------------------------------------

    def evaluate(self, gen_dir, ref_dir, regime: Optional[str] = None, out_dir=None) -> dict:
        gen = load_graph_dir(gen_dir)
        ref = load_graph_dir(ref_dir)
        out_dir = Path(out_dir or self.config.paths.output_dir)
        report = eval_report(gen, ref, self.config.eval, out_dir=out_dir, regime=regime,
                             config_echo=self._config_echo())
        report["path"] = str(write_report(out_dir / EVAL_REPORT, report))
        return report

    def export(self, graph_path, fmt: str = "urdf", out_path=None) -> Path:
        """Re-export a graph JSON file as URDF or canonical JSON."""
        graph_path = Path(graph_path)
        if not graph_path.exists():
            raise FileNotFoundError(f"Graph file not found: {graph_path}")
        g = import_json(graph_path.read_text())
        if fmt == "urdf":
            text = export_urdf(g, graph_path.stem)
        elif fmt == "json":
            text = export_json(g)
        else:
            raise ValueError(f"unknown export format '{fmt}', expected 'urdf' or 'json'")
        out_path = Path(out_path) if out_path else graph_path.with_suffix(f".{fmt}" if fmt == "urdf" else ".out.json")
        out_path.parent.mkdir(parents=True, exist_ok=True)
        out_path.write_text(text)
        self.logger.info(f"Exported {graph_path} to {out_path}")
        return out_path
