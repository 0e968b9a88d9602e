import dataclasses
import math

import numpy as np
import pytest

from ..config import ExtractorConfig, ModelConfig
from ..core.gradcheck import check_gradients
from ..core.optim import ParamSet
from ..core.rng import Rng
from ..core.tensor import NumericalError, ShapeError, reduce_sum, square
from ..graph.types import GraphDims
from ..hypernet.hypergraph import (
    Hypergraph, attach_query, build_hypergraph, hgnn_layer, load_hypergraph, save_hypergraph,
)
from ..hypernet.kmeans import kmeans
from ..hypernet.losses import LossWeights, loss_hg
from ..hypernet.model import ExtractorArch, ExtractorModel
from ..hypernet.trainer import batch_rows, scheduled_lr, train_extractor

SMALL = ModelConfig(K=2, F=2, pattern_dim=8)


@pytest.fixture
def rng():
    return Rng(0).derive("hypernet")


@pytest.fixture
def blobs(rng):
    a = rng.normal((20, 2), scale=0.1)
    b = rng.normal((20, 2), scale=0.1) + 10.0
    return np.vstack([a, b])


@pytest.fixture
def extractor_config():
    return ExtractorConfig(C=3, knn=2, hidden=12, iterations=40, batch_size=8, lr=1e-2, log_every=0)


@pytest.fixture
def dataset(rng):
    vectors = rng.normal((16, SMALL.pattern_dim))
    vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
    dims = GraphDims(SMALL.K, SMALL.F)
    targets = rng.normal((16, dims.K * dims.d_v), scale=0.3)
    return vectors, targets


def test_kmeans_separates_blobs(blobs, rng):
    result = kmeans(blobs, 2, rng)
    assert len(set(result.assignments[:20])) == 1
    assert len(set(result.assignments[20:])) == 1
    assert result.assignments[0] != result.assignments[20]
    history = result.inertia_history
    assert all(later <= earlier + 1e-9 for earlier, later in zip(history, history[1:]))


def test_kmeans_is_deterministic_per_stream(blobs):
    a = kmeans(blobs, 3, Rng(4))
    b = kmeans(blobs, 3, Rng(4))
    np.testing.assert_array_equal(a.centroids, b.centroids)


def test_kmeans_needs_enough_vectors(blobs, rng):
    with pytest.raises(ValueError, match="at least C"):
        kmeans(blobs[:2], 3, rng)


def test_kmeans_handles_duplicate_vectors(rng):
    X = np.ones((5, 3))
    result = kmeans(X, 2, rng)
    assert result.inertia == 0.0


def test_build_hypergraph_memberships(blobs):
    centroids = np.array([[0.0, 0.0], [10.0, 10.0], [50.0, 50.0]])
    hg = build_hypergraph(blobs, centroids, knn=1)
    assert hg.n_edges == 2
    np.testing.assert_array_equal(hg.H.sum(axis=1), np.ones(40))
    np.testing.assert_array_equal(hg.edge_degrees, [20, 20])

    wide = build_hypergraph(blobs, centroids, knn=2)
    np.testing.assert_array_equal(wide.H.sum(axis=1), np.full(40, 2.0))


def test_identical_vectors_share_one_hyperedge():
    hg = build_hypergraph(np.ones((4, 3)), np.ones((2, 3)), knn=2)
    assert hg.n_edges == 1
    np.testing.assert_allclose(hg.operator, np.full((4, 4), 0.25))


def test_operator_is_symmetric_with_known_eigenvector(rng):
    H = (rng.random((10, 4)) < 0.5).astype(float)
    H[:, 0] = 1.0
    hg = Hypergraph(H, rng.uniform(0.5, 2.0, 4), np.zeros((4, 2)))
    S = hg.operator
    np.testing.assert_allclose(S, S.T, atol=1e-12)
    u = np.sqrt(hg.vertex_degrees)
    np.testing.assert_allclose(S @ u, u, atol=1e-12)
    assert np.max(np.abs(np.linalg.eigvalsh(S))) <= 1.0 + 1e-9


def test_identity_incidence_gives_identity_operator():
    hg = Hypergraph(np.eye(5), np.ones(5), np.zeros((5, 1)))
    np.testing.assert_array_equal(hg.operator, np.eye(5))


def test_hypergraph_rejects_isolated_vertices():
    with pytest.raises(ValueError, match="non-positive degree"):
        Hypergraph(np.array([[1.0], [0.0]]), np.ones(1), np.zeros((1, 2)))
    with pytest.raises(ShapeError):
        Hypergraph(np.eye(2), np.ones(3), np.zeros((2, 1)))


def test_attach_query_appends_one_vertex(blobs):
    hg = build_hypergraph(blobs, np.array([[0.0, 0.0], [10.0, 10.0]]), knn=1)
    augmented = attach_query(hg, np.array([9.5, 9.8]), knn=1)
    assert augmented.n_vertices == 41
    np.testing.assert_array_equal(augmented.H[-1], [0.0, 1.0])


def test_hgnn_layer_gradient(rng):
    hg = Hypergraph(np.array([[1, 0], [1, 1], [0, 1]], dtype=float), np.ones(2), np.zeros((2, 1)))
    X = rng.normal((3, 4))
    params = ParamSet({"theta": rng.normal((4, 2))})
    assert check_gradients(lambda p: reduce_sum(square(hgnn_layer(X, hg.operator, p["theta"]))), params) <= 1e-5
    with pytest.raises(ShapeError):
        hgnn_layer(X, np.eye(2), params["theta"])


def test_loss_hg_components():
    dims = GraphDims(K=2, F=1)
    gt = np.zeros((1, 2 * dims.d_v))
    gt[0, 0] = 1.0
    gt[0, 1:dims.d_v] = 0.5
    pred = gt.copy()
    pred[0, dims.d_v + 1:] = 5.0  # absent slot, flag still 0
    total, parts = loss_hg(pred, gt, LossWeights(), dims)
    assert parts["exist"] == 0.0
    assert parts["bbox"] == pytest.approx(25.0)
    assert parts["matrix"] == pytest.approx(250.0 / 22.0)
    assert total.item() == pytest.approx(0.4 * 250.0 / 22.0 + 0.4 * 25.0)

    zero, parts = loss_hg(gt, gt, LossWeights(), dims)
    assert zero.item() == 0.0


def test_loss_weight_subsets():
    assert LossWeights.from_terms(["exist"]) == LossWeights(0.0, 0.0, 1.0)
    with pytest.raises(ValueError, match="unknown loss terms"):
        LossWeights.from_terms(["matrix", "colour"])
    dims = GraphDims(K=2, F=1)
    with pytest.raises(ValueError, match="all loss weights are zero"):
        loss_hg(np.zeros((1, 22)), np.zeros((1, 22)), LossWeights(0.0, 0.0, 0.0), dims)


def test_loss_hg_gradient(rng):
    dims = GraphDims(K=2, F=1)
    gt = rng.normal((3, 2 * dims.d_v))
    gt[:, ::dims.d_v] = [[1, 0], [1, 1], [0, 1]]
    params = ParamSet({"pred": rng.normal(gt.shape)})
    assert check_gradients(lambda p: loss_hg(p["pred"], gt, LossWeights(), dims)[0], params) <= 1e-5


@pytest.mark.parametrize("use_hypergraph", [True, False])
def test_extractor_output_shapes(rng, dataset, use_hypergraph):
    vectors, _ = dataset
    arch = ExtractorArch(pattern_dim=8, hidden=6, layers=2, K=2, F=2, use_hypergraph=use_hypergraph)
    model = ExtractorModel.init(rng, arch)
    hg = build_hypergraph(vectors, vectors[:3], knn=2)
    out = model.forward(model.params, vectors, hg.operator, rows=np.array([0, 5]))
    assert out.shape == (2, arch.dims.K * arch.dims.d_v)
    M_v = model.extract_vertices(vectors[0], vectors, hg, knn=2)
    assert M_v.shape == (2, arch.dims.d_v)
    with pytest.raises(ValueError, match="expected 8"):
        model.extract_vertices(np.ones(5), vectors, hg)


def test_lr_units_count_scheduler_steps():
    assert scheduled_lr(39, 1.0, 20, 0.5, "epoch", 2) == 1.0
    assert scheduled_lr(40, 1.0, 20, 0.5, "epoch", 2) == 0.5
    assert scheduled_lr(40, 1.0, 20, 0.5, "iteration", 2) == 0.25
    assert scheduled_lr(1999, 1.0, 20, 0.5, "interval", 2, interval=100) == 1.0
    assert scheduled_lr(2000, 1.0, 20, 0.5, "interval", 2, interval=100) == 0.5


def test_default_schedule_keeps_a_usable_rate():
    ex = ExtractorConfig()
    last = scheduled_lr(ex.iterations - 1, ex.lr, ex.lr_period, ex.lr_gamma, ex.lr_unit,
                        math.ceil(200 / ex.batch_size), ex.lr_interval)
    assert last == pytest.approx(ex.lr * ex.lr_gamma)


def test_batch_rows_depend_only_on_iteration(rng):
    np.testing.assert_array_equal(batch_rows(rng, 7, 16, 4), batch_rows(rng, 7, 16, 4))
    assert len(set(batch_rows(rng, 3, 16, 16).tolist())) == 16


def test_training_reduces_loss(rng, dataset, extractor_config):
    vectors, targets = dataset
    result = train_extractor(vectors, targets, extractor_config, SMALL, rng)
    totals = [r["total"] for r in result.history]
    assert len(totals) == 40
    assert np.mean(totals[-5:]) < np.mean(totals[:5])
    assert result.model.params.step == 40


def test_resumed_training_matches_uninterrupted(tmp_path, rng, dataset, extractor_config):
    vectors, targets = dataset
    straight = train_extractor(vectors, targets, extractor_config, SMALL, rng)

    half = dataclasses.replace(extractor_config, iterations=20)
    first = train_extractor(vectors, targets, half, SMALL, rng)
    path = first.model.save(tmp_path / "extractor.ckpt", {"note": "half"})
    resumed = train_extractor(vectors, targets, extractor_config, SMALL, rng, resume=ExtractorModel.load(path))

    assert [r["iteration"] for r in resumed.history] == list(range(21, 41))
    for name in straight.model.params:
        np.testing.assert_array_equal(resumed.model.params[name].data, straight.model.params[name].data)


def test_training_divergence_names_the_iteration(rng, dataset, extractor_config):
    vectors, targets = dataset
    with pytest.raises(NumericalError, match="iteration 1"):
        train_extractor(vectors, targets * 1e200, extractor_config, SMALL, rng)


def test_model_and_hypergraph_files(tmp_path, rng, dataset):
    vectors, _ = dataset
    arch = ExtractorArch(pattern_dim=8, hidden=6, K=2, F=2)
    model = ExtractorModel.init(rng, arch)
    loaded = ExtractorModel.load(model.save(tmp_path / "m.ckpt", {"config_hash": "abc"}))
    assert loaded.arch == arch
    assert loaded.meta["config_hash"] == "abc"

    hg = build_hypergraph(vectors, vectors[:3], knn=2)
    save_hypergraph(tmp_path / "hg.bin", hg, vectors, knn=2)
    hg2, vectors2, meta = load_hypergraph(tmp_path / "hg.bin")
    np.testing.assert_array_equal(hg2.operator, hg.operator)
    np.testing.assert_array_equal(vectors2, vectors)
    assert meta["knn"] == 2
    with pytest.raises(ValueError, match="belongs to module"):
        ExtractorModel.load(tmp_path / "hg.bin")
