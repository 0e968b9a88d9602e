import csv
import dataclasses
import json
from pathlib import Path

import numpy as np
import pytest

from ..config import Config, ConfigManager, DiffusionConfig, EvalConfig, ExtractorConfig, ModelConfig, PathsConfig, SynthConfig
from ..core.rng import Rng
from ..geometry.encoder import pattern_encode
from ..geometry.pointcloud import save_binary
from ..geometry.synth import TEMPLATES, SynthSpec, synth_dataset
from ..graph.codec import quantize_vertices
from ..graph.export import import_json
from ..graph.types import ArticulationGraph, NodeAttr
from ..pipeline import DatasetStore, Pipeline, fit_slots, load_graph_dir, parse_prompt, training_arrays
from ..pipeline.prompt import COMPLEX, SIMPLE

REPO_ROOT = Path(__file__).parents[2]


def tiny_config(root: Path, seed: int = 0) -> Config:
    return Config(
        paths=PathsConfig(dataset_dir=str(root / "data"), checkpoint_dir=str(root / "ckpt"),
                          output_dir=str(root / "out"), log_dir=str(root / "logs")),
        synth=SynthConfig(count=6, part_range=(2, 3), n_points=128),
        model=ModelConfig(K=3, F=2, pattern_dim=16, fps_points=32),
        extractor=ExtractorConfig(C=3, knn=2, hgnn_layers=1, hidden=8, iterations=4, batch_size=4, log_every=0),
        diffusion=DiffusionConfig(T=10, hidden=8, time_embed_dim=4, iterations=4, batch_size=4, log_every=0),
        eval=EvalConfig(poses=1, surface_points=32, seeds=[0]),
        seed=seed,
    )


@pytest.fixture
def config(tmp_path):
    return tiny_config(tmp_path)


@pytest.fixture
def trained(config):
    """Pipeline with a dataset and both networks trained"""
    pipeline = Pipeline(config)
    pipeline.synth()
    pipeline.train_extractor()
    pipeline.train_denoiser()
    return pipeline


# -- prompts ---------------------------------------------------------------

def test_template_labels_pass_through():
    prompt = parse_prompt("laptop_lid")
    assert (prompt.label, prompt.variant, prompt.regime) == ("laptop_lid", 0, SIMPLE)


@pytest.mark.parametrize("text,label", [
    ("a laptop", "laptop_lid"),
    ("A Refrigerator", "cabinet_door"),
    ("an oven", "cabinet_door"),
    ("faucets", "faucet_arm"),
])
def test_simple_prompts(text, label):
    prompt = parse_prompt(text)
    assert prompt.label == label and prompt.regime == SIMPLE


def test_complex_prompts_carry_a_variant():
    prompt = parse_prompt("a 3D storage furniture model type 7")
    assert (prompt.label, prompt.variant, prompt.regime) == ("drawer_box", 7, COMPLEX)
    named = parse_prompt("a 3D laptop model type gaming")
    assert named.label == "laptop_lid" and named.variant == parse_prompt("a 3D laptop model type GAMING").variant


def test_unknown_prompts_raise_key_error():
    with pytest.raises(KeyError):
        parse_prompt("a spaceship")
    with pytest.raises(KeyError):
        parse_prompt("   ")


# -- dataset ---------------------------------------------------------------

def test_fit_slots_repacks_parts():
    F = 2
    part = NodeAttr(1.0, np.zeros(6), np.ones(3), np.zeros(F))
    (sample,) = synth_dataset(SynthSpec(template="laptop_lid", K=8, F=F, n_points=16), 1)
    edge = sample.graph.edges[(0, 1)]
    nodes = [part] + [NodeAttr.absent(F)] * 4 + [part] + [NodeAttr.absent(F)] * 2
    sparse = ArticulationGraph(nodes, {(0, 5): edge}, "laptop_lid")
    packed = fit_slots(sparse, 3)
    assert packed.K == 3 and packed.existing() == [0, 1]
    assert list(packed.edges) == [(0, 1)]
    assert fit_slots(packed, 3) is packed
    assert fit_slots(sparse, 1) is None


def test_synth_is_byte_reproducible(config):
    pipeline = Pipeline(config)
    manifest = pipeline.synth()
    root = manifest.parent
    first = {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}
    pipeline.synth()
    second = {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}
    assert first == second
    data = json.loads(manifest.read_text())
    assert data["count"] == 6 and data["config_hash"] == pipeline.config_hash
    assert "timestamp" not in manifest.read_text()


def test_dataset_load_filters_large_objects(tmp_path):
    config = dataclasses.replace(tiny_config(tmp_path), model=ModelConfig(K=4, F=2, pattern_dim=16, fps_points=32),
                                 synth=SynthConfig(count=8, part_range=(2, 4), n_points=64))
    Pipeline(config).synth()
    store = DatasetStore(config.paths.dataset_dir)
    everything = store.load(4)
    pairs = store.load(2)
    expected = sum(1 for e in store.manifest()["entries"] if e["parts"] <= 2)
    assert len(everything) == 8
    assert len(pairs) == expected >= 2
    assert all(s.graph.part_count == 2 and s.graph.K == 2 for s in pairs)


def test_missing_dataset(tmp_path):
    with pytest.raises(FileNotFoundError, match="manifest"):
        DatasetStore(tmp_path / "nowhere").load(8)


def test_training_arrays_shapes(config):
    pipeline = Pipeline(config)
    pipeline.synth()
    vectors, M_v, M_e = training_arrays(pipeline.dataset.load(3), config.model)
    assert vectors.shape == (6, 16)
    assert M_v.shape == (6, 3, 12) and M_e.shape == (6, 3, 11)
    with pytest.raises(ValueError, match="model expects"):
        training_arrays(pipeline.dataset.load(3), ModelConfig(K=8, F=2))


def test_load_graph_dir(config, tmp_path):
    Pipeline(config).synth()
    graphs = load_graph_dir(config.paths.dataset_dir)
    assert len(graphs) == 6
    with pytest.raises(FileNotFoundError):
        load_graph_dir(tmp_path / "missing")
    (tmp_path / "empty").mkdir()
    with pytest.raises(ValueError, match="no graph JSON"):
        load_graph_dir(tmp_path / "empty")


# -- training, generation, evaluation ---------------------------------------

def test_training_writes_checkpoints_and_histories(trained):
    ckpt = trained.checkpoints
    for name in ("extractor.ckpt", "extractor.config.json", "hypergraph.bin", "denoiser.ckpt"):
        assert (ckpt / name).exists()
    with open(ckpt / "extractor_loss.csv") as f:
        rows = list(csv.DictReader(f))
    assert [int(r["iteration"]) for r in rows] == [1, 2, 3, 4]
    assert set(rows[0]) == {"iteration", "lr", "matrix", "bbox", "exist", "total"}
    echo = json.loads((ckpt / "denoiser.config.json").read_text())
    assert echo["config_hash"] == trained.config_hash
    for stage in ("extractor", "denoiser"):
        meta = json.loads((ckpt / f"{stage}_loss.meta.json").read_text())
        assert meta["config_hash"] == trained.config_hash
        assert meta["segments"] == [{"config_hash": trained.config_hash, "first": 1, "last": 4}]


def test_resume_appends_to_history(trained):
    longer = dataclasses.replace(trained.config,
                                 extractor=dataclasses.replace(trained.config.extractor, iterations=6))
    result = Pipeline(longer).train_extractor(resume=True)
    assert [r["iteration"] for r in result.history] == [5, 6]
    with open(trained.checkpoints / "extractor_loss.csv") as f:
        assert [int(r["iteration"]) for r in csv.DictReader(f)] == [1, 2, 3, 4, 5, 6]
    meta = json.loads((trained.checkpoints / "extractor_loss.meta.json").read_text())
    assert [(s["first"], s["last"]) for s in meta["segments"]] == [(1, 4), (5, 6)]
    assert meta["segments"][0]["config_hash"] == trained.config_hash
    assert meta["config_hash"] == ConfigManager.config_hash(longer) != trained.config_hash


def test_generate_writes_reproducible_outputs(trained, tmp_path):
    a = trained.generate("a 3D laptop model type 2", count=3, urdf=True, out_dir=tmp_path / "a")
    b = trained.generate("a 3D laptop model type 2", count=3, urdf=True, out_dir=tmp_path / "b")
    assert [r.label for r in a] == ["laptop_lid"] * 3
    for x, y in zip(a, b):
        assert x.graph == y.graph
        assert x.valid == y.valid
        if x.valid:
            assert x.json_path.name == f"laptop_lid_{x.index:03d}.json"
            assert x.json_path.read_bytes() == y.json_path.read_bytes()
            assert x.urdf_path.exists()
            assert import_json(x.json_path.read_text()) == x.graph
    manifest = json.loads((tmp_path / "a" / "generation.json").read_text())
    assert manifest["variant"] == 2 and manifest["regime"] == COMPLEX
    assert [s["index"] for s in manifest["samples"]] == [0, 1, 2]
    assert (tmp_path / "a" / "generation.json").read_bytes() == (tmp_path / "b" / "generation.json").read_bytes()
    written = [r for r in a if r.valid]
    if written:
        assert load_graph_dir(tmp_path / "a") == [r.graph for r in written]


def test_generated_graphs_are_trees_or_reported(trained, tmp_path):
    for r in trained.generate("drawer_box", count=4, out_dir=tmp_path):
        if r.valid:
            assert len(r.graph.edges) == r.graph.part_count - 1
        else:
            assert r.violations and r.json_path is None


def test_generate_with_untrained_denoiser_and_given_cloud(config, tmp_path):
    pipeline = Pipeline(config)
    pipeline.synth()
    pipeline.train_extractor()
    sample = pipeline.dataset.load(3)[0]
    cloud_path = save_binary(tmp_path / "query.bin", sample.cloud)
    results = pipeline.generate("cabinet", count=2, untrained=True, cloud_path=str(cloud_path),
                                out_dir=tmp_path / "gen")
    assert len(results) == 2
    manifest = json.loads((tmp_path / "gen" / "generation.json").read_text())
    assert manifest["untrained_denoiser"] is True


def test_generate_requires_trained_models(config):
    pipeline = Pipeline(config)
    with pytest.raises(FileNotFoundError, match="Checkpoint not found"):
        pipeline.generate("laptop_lid")
    with pytest.raises(ValueError, match="at least 1"):
        pipeline.generate("laptop_lid", count=0)


def test_evaluate_dataset_against_itself(config):
    pipeline = Pipeline(config)
    pipeline.synth()
    report = pipeline.evaluate(config.paths.dataset_dir, config.paths.dataset_dir, regime="reference")
    assert report["runs"][0]["mmd"] == 0.0
    assert report["runs"][0]["cov"] == 1.0
    saved = json.loads(Path(report["path"]).read_text())
    assert saved["regime"] == "reference"
    assert saved["config"]["config_hash"] == pipeline.config_hash


def test_export_formats(config, tmp_path):
    pipeline = Pipeline(config)
    pipeline.synth()
    graph_path = Path(config.paths.dataset_dir) / "graphs" / "00000.json"
    urdf = pipeline.export(graph_path, "urdf", tmp_path / "obj.urdf")
    assert urdf.read_text().startswith('<?xml version="1.0"?>')
    copy = pipeline.export(graph_path, "json")
    assert copy.name == "00000.out.json"
    assert import_json(copy.read_text()) == import_json(graph_path.read_text())
    with pytest.raises(ValueError, match="unknown export format"):
        pipeline.export(graph_path, "obj")
    with pytest.raises(FileNotFoundError):
        pipeline.export(tmp_path / "missing.json")


def desk_config(root: Path) -> Config:
    config = ConfigManager.load_from_yaml(str(REPO_ROOT / "configs" / "desk.yaml"))
    return dataclasses.replace(config, paths=PathsConfig(
        dataset_dir=str(root / "data"), checkpoint_dir=str(root / "ckpt"),
        output_dir=str(root / "out"), log_dir=str(root / "logs")))


def generate_mix(pipeline: Pipeline, out_dir: Path, untrained: bool = False) -> list:
    """50 objects spread over the four templates"""
    results = []
    for label, count in zip(TEMPLATES, (13, 13, 12, 12)):
        results += pipeline.generate(label, count=count, untrained=untrained, out_dir=out_dir)
    return results


@pytest.mark.slow
def test_desk_preset_quality(tmp_path):
    """Held-out part counts, tree validity and the gain over an untrained denoiser"""
    config = desk_config(tmp_path)
    pipeline = Pipeline(config)
    pipeline.synth()
    extraction = pipeline.train_extractor()
    pipeline.train_denoiser()

    m, s = config.model, config.synth
    spec = SynthSpec(part_range=tuple(s.part_range), size_range=tuple(s.size_range), n_points=s.n_points,
                     seed=config.seed, K=m.K, F=m.F)
    held_out = synth_dataset(spec, 50, Rng(config.seed).derive("held-out"), s.templates)
    hits = 0
    for sample in held_out:
        query = pattern_encode(sample.cloud, m.encoder_seed, m.fps_points, m.pattern_dim)
        M_v = quantize_vertices(extraction.model.extract_vertices(
            query, extraction.vectors, extraction.hypergraph, config.extractor.knn))
        hits += int(np.count_nonzero(M_v[:, 0])) == sample.graph.part_count
    assert hits / len(held_out) >= 0.9

    results = generate_mix(pipeline, tmp_path / "trained")
    assert len(results) == 50
    valid = [r for r in results if r.valid]
    assert len(valid) >= 40
    for r in valid:
        assert len(r.graph.edges) == r.graph.part_count - 1
        if r.label == "laptop_lid":
            assert r.graph.part_count == 2
        else:
            assert 2 <= r.graph.part_count <= 4
    dataset_counts = {e["parts"] for e in pipeline.dataset.manifest()["entries"]}
    assert {r.graph.part_count for r in valid} <= dataset_counts

    generate_mix(pipeline, tmp_path / "untrained", untrained=True)
    trained = pipeline.evaluate(tmp_path / "trained", config.paths.dataset_dir, out_dir=tmp_path / "eval_trained")
    baseline = pipeline.evaluate(tmp_path / "untrained", config.paths.dataset_dir,
                                 out_dir=tmp_path / "eval_untrained")
    assert trained["seeds"] == [0, 1, 2, 3, 4]
    assert trained["summary"]["mmd"]["mean"] <= 0.8 * baseline["summary"]["mmd"]["mean"]


# -- configuration ---------------------------------------------------------

def test_default_yaml_matches_built_in_defaults():
    assert ConfigManager.load_from_yaml(str(REPO_ROOT / "configs" / "default.yaml")) == Config()


def test_desk_preset_loads():
    config = ConfigManager.load_from_yaml(str(REPO_ROOT / "configs" / "desk.yaml"))
    assert config.diffusion.T == 200 and config.model.pattern_dim == 256
    assert config.model.K == 8 and config.paths.log_dir == "logs"


def test_config_rejects_unknown_keys_and_bad_values():
    with pytest.raises(ValueError, match="Unknown config key"):
        ConfigManager.from_dict({"model": {"k": 8}})
    with pytest.raises(ValueError, match="Unknown config section"):
        ConfigManager.from_dict({"training": {}})
    with pytest.raises(ValueError, match="lr_unit"):
        ConfigManager.from_dict({"diffusion": {"lr_unit": "batch"}})
    with pytest.raises(ValueError, match="lr_interval"):
        ConfigManager.from_dict({"extractor": {"lr_interval": 0}})
    with pytest.raises(FileNotFoundError):
        ConfigManager.load_from_yaml("no/such/config.yaml")


def test_config_hash_tracks_content(tmp_path):
    a, b = tiny_config(tmp_path), tiny_config(tmp_path)
    assert ConfigManager.config_hash(a) == ConfigManager.config_hash(b)
    assert ConfigManager.config_hash(a) != ConfigManager.config_hash(tiny_config(tmp_path, seed=1))
