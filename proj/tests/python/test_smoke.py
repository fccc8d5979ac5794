import math

import numpy as np
import pytest

import topocolor


def box_view(seed=0):
    rng = np.random.default_rng(seed)
    xs, ys = np.meshgrid(np.linspace(0, 0.2, 41), np.linspace(0, 0.1, 21))
    top = np.column_stack([xs.ravel(), ys.ravel(), np.full(xs.size, 0.05)])
    xs, zs = np.meshgrid(np.linspace(0, 0.2, 41), np.linspace(0, 0.05, 11))
    side = np.column_stack([xs.ravel(), np.zeros(xs.size), zs.ravel()])
    points = np.vstack([top, side]) + rng.normal(0, 1e-4, (top.shape[0] + side.shape[0], 3))
    colors = np.tile(np.array([[200, 30, 30]], dtype=np.uint8), (points.shape[0], 1))
    colors[: top.shape[0]] = [30, 30, 200]
    return points, colors


def rotation(a, b):
    ca, sa, cb, sb = math.cos(a), math.sin(a), math.cos(b), math.sin(b)
    rz = np.array([[ca, -sa, 0], [sa, ca, 0], [0, 0, 1]])
    rx = np.array([[1, 0, 0], [0, cb, -sb], [0, sb, cb]])
    return rz @ rx


@pytest.fixture(scope="module")
def network():
    return topocolor.ColorNetwork.build(grid_step=17)


def test_white_and_hyab():
    lab = topocolor.srgb_to_lab(255, 255, 255)
    assert lab[0] == pytest.approx(100.0, abs=1e-4)
    assert abs(lab[1]) < 1e-4 and abs(lab[2]) < 1e-4
    assert topocolor.hyab((50, 0, 0), (60, 3, 4)) == 15.0


def test_h0_pairs_follow_the_elder_rule():
    pts = np.array([[0.0, 0, 0], [0.1, 0, 0], [0.5, 0, 0]])
    assert topocolor.h0_persistence(pts, 0.2, 1.0) == [(0.0, 1.0), (0.1, 0.1), (0.5, 1.0)]


def test_network_properties(network, tmp_path):
    n = len(network)
    assert n > 0
    delta = network.similarity
    assert delta.shape == (n, n)
    assert np.allclose(delta, delta.T)
    assert np.all(np.diag(delta) == 1.0)
    assert len(network.node_colors) == n
    path = tmp_path / "net.txt"
    network.save(path)
    again = topocolor.ColorNetwork.load(path)
    assert np.array_equal(again.similarity, delta)


def test_descriptor_lengths_and_rigid_invariance(network):
    points, colors = box_view()
    p0, c0 = topocolor.view_normalize(2.5 * points, colors)
    tops = topocolor.tops(p0, c0)
    tops2 = topocolor.tops2(p0, c0, network)
    assert tops.shape == (12 * 256,)
    assert tops2.shape == (12 * (256 + 16 * len(network)),)
    assert tops.sum() > 0

    moved = points @ rotation(0.7, 0.3).T + np.array([1.0, -2.0, 0.5])
    p1, c1 = topocolor.view_normalize(2.5 * moved, colors)
    assert np.abs(topocolor.tops(p1, c1) - tops).max() <= 1e-3
    assert np.abs(topocolor.tops2(p1, c1, network) - tops2).max() <= 1e-3


def test_prepared_cloud_sits_in_the_first_octant():
    points, colors = box_view()
    p, c = topocolor.prepare_cloud(points, colors)
    assert 0 < p.shape[0] <= points.shape[0]
    assert c.shape == p.shape
    assert np.abs(p.min(axis=0)).max() < 1e-12
    extents = p.max(axis=0)
    assert extents[0] >= extents[1] >= extents[2]


def test_recolor_changes_only_tops2(network):
    points, colors = box_view()
    p, c = topocolor.prepare_cloud(points, colors)
    other = c.copy()
    other[:, :] = [20, 200, 20]
    assert np.array_equal(topocolor.tops(p, c), topocolor.tops(p, other))
    assert not np.array_equal(topocolor.tops2(p, c, network), topocolor.tops2(p, other, network))


def test_errors(tmp_path):
    with pytest.raises(ValueError):
        topocolor.tops(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.uint8))
    with pytest.raises(ValueError):
        topocolor.tops(np.zeros((4, 2)), np.zeros((4, 3), dtype=np.uint8))
    with pytest.raises(topocolor.DataError):
        topocolor.ColorNetwork.load(tmp_path / "missing.txt")
    bad = tmp_path / "bad.json"
    bad.write_text('{"sigma_s": "big"}')
    with pytest.raises(topocolor.DataError):
        topocolor.PipelineConfig.load(bad)
    assert issubclass(topocolor.VersionMismatch, topocolor.DataError)
    assert issubclass(topocolor.DataError, topocolor.Error)
