import numpy as np
import pytest

from ..core.rng import Rng
from ..core.tensor import ShapeError
from ..geometry.encoder import color_occupancy, pattern_encode, shape_latent
from ..geometry.pointcloud import (
    PointCloud, chamfer, fps, load_binary, load_cloud, load_text, loss_pc, loss_pc_op, save_binary, save_text,
)
from ..geometry.synth import (
    TEMPLATES, SynthSpec, box_face_areas, sample_box_surface, sample_part_points, synth_dataset,
)
from ..graph.codec import decode_matrices, encode_graph
from ..graph.types import NodeAttr
from ..graph.validate import validate


@pytest.fixture
def rng():
    return Rng(0).derive("geometry")


@pytest.fixture
def cloud(rng):
    return PointCloud.from_parts(rng.uniform(-0.5, 0.5, (300, 3)), rng.random((300, 3)))


def test_point_cloud_rejects_bad_input():
    with pytest.raises(ShapeError):
        PointCloud(np.zeros((4, 3)))
    with pytest.raises(ValueError):
        PointCloud(np.zeros((0, 6)))
    with pytest.raises(ValueError, match="colors"):
        PointCloud(np.array([[0, 0, 0, 1.5, 0, 0]]))


def test_fps_full_selection_is_a_permutation(cloud, rng):
    idx = fps(cloud, len(cloud), rng)
    assert sorted(idx.tolist()) == list(range(len(cloud)))


def test_fps_square_corners_picks_diagonal(rng):
    xyz = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], dtype=float)
    assert fps(xyz, 2, rng, start=0).tolist() == [0, 3]


def test_fps_greedy_max_min_property(rng):
    xyz = rng.normal((50, 3))
    idx = fps(xyz, 10, rng)
    assert len(set(idx.tolist())) == 10
    for k in range(1, 10):
        chosen = xyz[idx[:k]]
        min_dist = [np.min(np.sum((chosen - p) ** 2, axis=1)) for p in xyz]
        candidates = [i for i in range(50) if i not in idx[:k]]
        assert min_dist[idx[k]] == pytest.approx(max(min_dist[i] for i in candidates))


def test_fps_rejects_oversampling(cloud, rng):
    with pytest.raises(ValueError):
        fps(cloud, len(cloud) + 1, rng)


def test_chamfer_examples(cloud, rng):
    assert chamfer(cloud, cloud) == 0.0
    assert chamfer(np.array([[0.0, 0, 0]]), np.array([[1.0, 0, 0]])) == pytest.approx(2.0)
    shuffled = cloud.points[rng.permutation(len(cloud))]
    other = rng.normal((40, 3))
    assert chamfer(shuffled, other) == pytest.approx(chamfer(cloud, other), abs=1e-12)
    with pytest.raises(ValueError):
        chamfer(np.zeros((0, 3)), other)


def test_chamfer_matches_double_loop(rng):
    a, b = rng.normal((30, 3)), rng.normal((20, 3))
    ab = np.mean([min(np.sum((p - q) ** 2) for q in b) for p in a])
    ba = np.mean([min(np.sum((q - p) ** 2) for p in a) for q in b])
    assert chamfer(a, b) == pytest.approx(ab + ba, abs=1e-12)


def test_loss_pc_examples(cloud, rng):
    assert loss_pc(cloud, cloud) == 0.0
    p = PointCloud(np.array([[0, 0, 0, 0.5, 0.5, 0.5]]))
    q = PointCloud(np.array([[1, 0, 0, 0.5, 0.5, 0.5]]))
    assert loss_pc(p, q) == pytest.approx(1.0 / 3.0)

    other = PointCloud.from_parts(rng.normal((300, 3)), rng.random((300, 3)))
    expected = 0.0
    for x, y in zip(cloud.points, other.points):
        expected += sum((x[:3] - y[:3]) ** 2) / 3 + sum((x[3:] - y[3:]) ** 2) / 3
    assert loss_pc(cloud, other) == pytest.approx(expected, abs=1e-12)
    assert loss_pc_op(cloud.points, other.points).item() == pytest.approx(expected, abs=1e-12)
    with pytest.raises(ShapeError):
        loss_pc(cloud, cloud.subset(np.arange(10)))


def test_point_cloud_files(tmp_path, cloud):
    save_text(tmp_path / "c.txt", cloud)
    save_binary(tmp_path / "c.bin", cloud)
    np.testing.assert_array_equal(load_text(tmp_path / "c.txt").points, cloud.points)
    np.testing.assert_array_equal(load_binary(tmp_path / "c.bin").points, cloud.points)
    np.testing.assert_array_equal(load_cloud(tmp_path / "c.bin").points, cloud.points)
    with pytest.raises(FileNotFoundError):
        load_cloud(tmp_path / "missing.bin")


def test_pattern_encode_is_deterministic_unit_and_pose_sensitive(cloud):
    v = pattern_encode(cloud)
    assert v.shape == (1024,)
    np.testing.assert_array_equal(v, pattern_encode(cloud))
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-9)
    quarter = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    turned = PointCloud.from_parts(cloud.xyz @ quarter.T, cloud.rgb)
    assert not np.allclose(pattern_encode(turned), v)


def test_color_occupancy_counts_part_colors():
    assert color_occupancy(np.array([[0.0, 0.0, 0.0], [0.1, 0.2, 0.1], [1.0, 1.0, 1.0]])).tolist().count(1.0) == 2
    for s in synth_dataset(SynthSpec(seed=6), 12):
        assert color_occupancy(s.cloud.rgb).sum() == s.graph.part_count


def test_pattern_encode_separates_part_counts():
    samples = synth_dataset(SynthSpec(template="cabinet_door", seed=3), 30)
    vectors = np.array([pattern_encode(s.cloud) for s in samples])
    counts = np.array([s.graph.part_count for s in samples])
    assert len(set(counts.tolist())) > 1
    d = np.linalg.norm(vectors[:, None] - vectors[None, :], axis=-1)
    np.fill_diagonal(d, np.inf)
    nearest = d.argmin(axis=1)
    assert np.mean(counts[nearest] == counts) >= 0.9


def test_pattern_encode_needs_enough_points(cloud):
    with pytest.raises(ValueError, match="too small"):
        pattern_encode(cloud.subset(np.arange(10)))


def test_shape_latent_is_bounded():
    f = shape_latent([0.2, 0.3, 0.4], F=16)
    assert f.shape == (16,)
    assert np.all(np.abs(f) < 1.0)
    with pytest.raises(ValueError):
        shape_latent([0.2, 0.0, 0.4])


def test_box_surface_points_lie_on_faces(rng):
    b = np.array([1.0, 2.0, 3.0])
    pts, faces = sample_box_surface(b, 100000, rng)
    assert np.all(np.abs(pts) <= b / 2 + 1e-9)
    on_face = np.abs(np.abs(pts) - b / 2) <= 1e-9
    assert np.all(on_face.any(axis=1))
    counts = np.bincount(faces, minlength=6)
    expected = 100000 * box_face_areas(b) / box_face_areas(b).sum()
    np.testing.assert_allclose(counts, expected, rtol=0.05)


def test_unit_box_points_at_identity():
    node = NodeAttr(1.0, np.zeros(6), np.ones(3), np.zeros(4))
    pts = sample_part_points(node, 500, Rng(3))
    assert np.all(np.abs(pts) <= 0.5 + 1e-12)
    assert np.all(np.isclose(np.abs(pts), 0.5, atol=1e-9).any(axis=1))
    with pytest.raises(ValueError):
        sample_part_points(NodeAttr.absent(4), 10, Rng(3))


def test_laptop_template():
    (sample,) = synth_dataset(SynthSpec(template="laptop_lid", seed=4), 1)
    g = sample.graph
    assert g.part_count == 2 and len(g.edges) == 1
    edge = g.edges[(0, 1)]
    assert edge.joint_kind() == "revolute"
    assert 0.0 <= edge.range[1][0] <= edge.range[1][1] <= np.pi


def test_drawer_with_three_parts_has_two_prismatic_joints():
    (sample,) = synth_dataset(SynthSpec(template="drawer_box", part_count=3, seed=1), 1)
    g = sample.graph
    assert [e.joint_kind() for e in g.edges.values()] == ["prismatic", "prismatic"]
    assert decode_matrices(*encode_graph(g), dims=g.dims, label=g.label) == g


@pytest.mark.parametrize("random_yaw", [False, True])
def test_synth_dataset_samples_are_valid_trees(random_yaw):
    samples = synth_dataset(SynthSpec(seed=2, random_yaw=random_yaw, n_points=256), 24)
    assert {s.label for s in samples} == set(TEMPLATES)
    for s in samples:
        assert validate(s.graph) == []
        assert len(s.graph.edges) == s.graph.part_count - 1
        assert len(s.cloud) == 256
        assert decode_matrices(*encode_graph(s.graph), dims=s.graph.dims, label=s.label) == s.graph


def test_synth_dataset_is_deterministic_per_seed():
    a = synth_dataset(SynthSpec(seed=9, n_points=128), 4)
    b = synth_dataset(SynthSpec(seed=9, n_points=128), 4)
    for x, y in zip(a, b):
        assert x.graph == y.graph
        np.testing.assert_array_equal(x.cloud.points, y.cloud.points)


def test_part_colors_are_shared_within_a_part():
    (sample,) = synth_dataset(SynthSpec(template="cabinet_door", part_count=3, seed=5, n_points=600), 1)
    colors = np.unique(sample.cloud.rgb, axis=0)
    assert len(colors) == 3
