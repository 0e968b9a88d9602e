from dataclasses import asdict, dataclass, field, fields, is_dataclass
from typing import Any, Dict, List, Optional, Tuple
import hashlib
import json
import yaml
import os


@dataclass
class PathsConfig:
    dataset_dir: str = "data/dataset"
    checkpoint_dir: str = "checkpoints"
    output_dir: str = "outputs"
    log_dir: str = "logs"


@dataclass
class SynthConfig:
    count: int = 200
    templates: List[str] = field(default_factory=lambda: ["cabinet_door", "drawer_box", "faucet_arm", "laptop_lid"])
    part_range: Tuple[int, int] = (2, 4)
    n_points: int = 2048
    size_range: Tuple[float, float] = (0.5, 0.9)
    random_yaw: bool = False


@dataclass
class ModelConfig:
    K: int = 8
    F: int = 128
    pattern_dim: int = 1024
    encoder_seed: int = 20240611
    fps_points: int = 64


@dataclass
class ExtractorConfig:
    C: int = 64
    knn: int = 4
    hgnn_layers: int = 2
    hidden: int = 256
    use_hypergraph: bool = True
    lambda_matrix: float = 0.4
    lambda_bbox: float = 0.4
    lambda_exist: float = 1.0
    iterations: int = 3000
    batch_size: int = 64
    lr: float = 1e-4
    lr_period: int = 20
    lr_gamma: float = 0.7
    lr_unit: str = "interval"
    lr_interval: int = 100
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    log_every: int = 100


@dataclass
class DiffusionConfig:
    T: int = 1000
    beta_start: float = 1e-4
    beta_end: float = 2e-2
    sigma_rule: str = "beta"
    sample_stride: int = 1
    time_embed_dim: int = 32
    hidden: int = 256
    iterations: int = 3000
    batch_size: int = 64
    lr: float = 1e-4
    lr_period: int = 20
    lr_gamma: float = 0.7
    lr_unit: str = "interval"
    lr_interval: int = 100
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    log_every: int = 100


@dataclass
class EvalConfig:
    poses: int = 4
    surface_points: int = 2048
    seeds: List[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    workers: int = 1


@dataclass
class Config:
    paths: PathsConfig = field(default_factory=PathsConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    extractor: ExtractorConfig = field(default_factory=ExtractorConfig)
    diffusion: DiffusionConfig = field(default_factory=DiffusionConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    seed: int = 0


LR_UNITS = ("interval", "epoch", "iteration")
SIGMA_RULES = ("beta", "posterior")

# flag name on the command line -> (section, key)
ARG_OVERRIDES = {
    "seed": (None, "seed"),
    "dataset": ("paths", "dataset_dir"),
    "checkpoints": ("paths", "checkpoint_dir"),
    "output": ("paths", "output_dir"),
    "count": ("synth", "count"),
    "n_points": ("synth", "n_points"),
    "iterations": (None, "iterations"),
    "batch_size": (None, "batch_size"),
    "lr": (None, "lr"),
    "C": ("extractor", "C"),
    "no_hypergraph": ("extractor", "use_hypergraph"),
    "T": ("diffusion", "T"),
    "sigma_rule": ("diffusion", "sigma_rule"),
    "sample_stride": ("diffusion", "sample_stride"),
    "poses": ("eval", "poses"),
    "surface_points": ("eval", "surface_points"),
    "seeds": ("eval", "seeds"),
    "workers": ("eval", "workers"),
}


def _coerce(value: Any, default: Any) -> Any:
    if isinstance(default, tuple) and isinstance(value, list):
        return tuple(value)
    if isinstance(default, float) and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    return value


def _section_from_dict(cls, data: Optional[Dict[str, Any]], name: str):
    data = data or {}
    known = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ValueError(f"Unknown config key(s) in [{name}]: {', '.join(sorted(unknown))}")
    defaults = cls()
    return cls(**{k: _coerce(v, getattr(defaults, k)) for k, v in data.items()})


class ConfigManager:
    @staticmethod
    def from_dict(data: Dict[str, Any]) -> Config:
        data = dict(data or {})
        sections = {f.name: f.type for f in fields(Config) if f.name != "seed"}
        unknown = set(data) - set(sections) - {"seed"}
        if unknown:
            raise ValueError(f"Unknown config section(s): {', '.join(sorted(unknown))}")
        config = Config(
            paths=_section_from_dict(PathsConfig, data.get("paths"), "paths"),
            synth=_section_from_dict(SynthConfig, data.get("synth"), "synth"),
            model=_section_from_dict(ModelConfig, data.get("model"), "model"),
            extractor=_section_from_dict(ExtractorConfig, data.get("extractor"), "extractor"),
            diffusion=_section_from_dict(DiffusionConfig, data.get("diffusion"), "diffusion"),
            eval=_section_from_dict(EvalConfig, data.get("eval"), "eval"),
            seed=int(data.get("seed", 0)),
        )
        ConfigManager.check(config)
        return config

    @staticmethod
    def load_from_yaml(file_path: str) -> Config:
        """Load configuration from YAML file"""
        if not os.path.exists(file_path):
            raise FileNotFoundError(f"Config file not found: {file_path}")

        with open(file_path, 'r') as f:
            yaml_config = yaml.safe_load(f) or {}

        return ConfigManager.from_dict(yaml_config)

    @staticmethod
    def from_args(args, base: Optional[Config] = None) -> Config:
        """Apply command line overrides on top of a base configuration"""
        config = base or Config()
        if getattr(args, 'config', None):
            config = ConfigManager.load_from_yaml(args.config)
        data = ConfigManager.to_dict(config)
        for flag, (section, key) in ARG_OVERRIDES.items():
            value = getattr(args, flag, None)
            if value is None or value is False:
                continue
            if flag == "no_hypergraph":
                value = False
            if section is None and key != "seed":
                # training flags apply to whichever stage the command trains
                stage = getattr(args, 'stage', None)
                if stage is None:
                    continue
                data[stage][key] = value
            elif section is None:
                data[key] = value
            else:
                data[section][key] = value
        terms = getattr(args, 'loss_terms', None)
        if terms:
            chosen = {t.strip() for t in terms.split(',') if t.strip()}
            unknown = chosen - {"matrix", "bbox", "exist"}
            if unknown:
                raise ValueError(f"Unknown loss term(s): {', '.join(sorted(unknown))}")
            for term in ("matrix", "bbox", "exist"):
                if term not in chosen:
                    data["extractor"][f"lambda_{term}"] = 0.0
        return ConfigManager.from_dict(data)

    @staticmethod
    def to_dict(config: Config) -> Dict[str, Any]:
        def plain(value):
            if is_dataclass(value):
                return {k: plain(v) for k, v in asdict(value).items()}
            if isinstance(value, dict):
                return {k: plain(v) for k, v in value.items()}
            if isinstance(value, (list, tuple)):
                return [plain(v) for v in value]
            return value
        return plain(config)

    @staticmethod
    def config_hash(config: Config) -> str:
        canonical = json.dumps(ConfigManager.to_dict(config), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    @staticmethod
    def check(config: Config) -> None:
        m, ex, df, ev = config.model, config.extractor, config.diffusion, config.eval
        if not 2 <= m.K:
            raise ValueError(f"model.K must be at least 2, got {m.K}")
        if m.F < 1 or m.pattern_dim < 1:
            raise ValueError("model.F and model.pattern_dim must be positive")
        for name, stage in (("extractor", ex), ("diffusion", df)):
            if stage.lr_unit not in LR_UNITS:
                raise ValueError(f"{name}.lr_unit must be one of {LR_UNITS}, got '{stage.lr_unit}'")
            if stage.lr_interval < 1:
                raise ValueError(f"{name}.lr_interval must be at least 1, got {stage.lr_interval}")
            if stage.iterations < 0 or stage.batch_size < 1 or stage.lr <= 0:
                raise ValueError(f"{name}: iterations >= 0, batch_size >= 1 and lr > 0 are required")
        if min(ex.lambda_matrix, ex.lambda_bbox, ex.lambda_exist) < 0:
            raise ValueError("extractor loss weights must be non-negative")
        if ex.lambda_matrix == ex.lambda_bbox == ex.lambda_exist == 0:
            raise ValueError("at least one extractor loss weight must be positive")
        if ex.C < 1 or ex.knn < 1 or ex.hgnn_layers < 1:
            raise ValueError("extractor.C, extractor.knn and extractor.hgnn_layers must be positive")
        if df.T < 1:
            raise ValueError(f"diffusion.T must be at least 1, got {df.T}")
        if not 0 < df.beta_start <= df.beta_end < 1:
            raise ValueError(f"diffusion betas must satisfy 0 < start <= end < 1, got "
                             f"{df.beta_start}, {df.beta_end}")
        if df.sigma_rule not in SIGMA_RULES:
            raise ValueError(f"diffusion.sigma_rule must be one of {SIGMA_RULES}, got '{df.sigma_rule}'")
        if df.sample_stride < 1:
            raise ValueError("diffusion.sample_stride must be at least 1")
        if ev.poses < 1 or ev.surface_points < 16 or not ev.seeds or ev.workers < 1:
            raise ValueError("eval requires poses >= 1, surface_points >= 16, a seed list and workers >= 1")
        if not 2 <= config.synth.part_range[0] <= config.synth.part_range[1] <= m.K:
            raise ValueError(f"synth.part_range {config.synth.part_range} must lie within [2, {m.K}]")
