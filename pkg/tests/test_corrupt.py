import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.spatial.distance import pdist

from topocloud.corrupt import (KINDS, SEVERITIES, SEVERITY_TABLE, CorruptionSpec, apply_corruption,
                               bbox_diagonal, output_size, rotate, rotation_matrix)
from topocloud.pc_io import PointCloud


@pytest.fixture
def cloud(rng):
    return PointCloud(rng.normal(size=(2048, 3)), label="x")


def test_downsample_high_size(cloud):
    out = apply_corruption(cloud, CorruptionSpec("uniform_downsample", "high", seed=3))
    assert len(out.points) == 1434
    assert len(apply_corruption(cloud, CorruptionSpec("uniform_downsample", "low")).points) == 1843


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("severity", SEVERITIES)
def test_output_size_contract(cloud, kind, severity):
    spec = CorruptionSpec(kind, severity, seed=1)
    out = apply_corruption(cloud, spec)
    assert len(out.points) == output_size(len(cloud.points), spec)
    assert out.label == "x"
    np.testing.assert_array_equal(out.points, apply_corruption(cloud, spec).points)


def test_sizes_table():
    n = 1000
    assert output_size(n, CorruptionSpec("upsample", "low")) == 1100
    assert output_size(n, CorruptionSpec("upsample", "high")) == 1500
    for kind in ("gaussian_noise", "uniform_noise", "rotation", "shear", "impulse"):
        assert output_size(n, CorruptionSpec(kind, "high")) == n


def test_seeds_differ(cloud):
    a = apply_corruption(cloud, CorruptionSpec("gaussian_noise", seed=1)).points
    b = apply_corruption(cloud, CorruptionSpec("gaussian_noise", seed=2)).points
    assert not np.array_equal(a, b)


def test_zero_rotation_is_identity(cloud):
    np.testing.assert_array_equal(rotate(cloud, (0, 0, 1), 0.0).points, cloud.points)


@given(seed=st.integers(0, 10_000), severity=st.sampled_from(SEVERITIES))
def test_rotation_preserves_distances(seed, severity):
    pts = np.random.default_rng(seed).normal(size=(40, 3))
    out = apply_corruption(PointCloud(pts), CorruptionSpec("rotation", severity, seed=seed)).points
    d0, d1 = pdist(pts), pdist(out)
    assert np.max(np.abs(d1 - d0) / d0) < 1e-9


def test_rotation_matrix_orthonormal():
    r = rotation_matrix((1, 2, 3), 0.7)
    np.testing.assert_allclose(r @ r.T, np.eye(3), atol=1e-14)
    assert math.isclose(np.linalg.det(r), 1.0)
    np.testing.assert_allclose(rotation_matrix((0, 0, 1), math.pi / 2) @ [1, 0, 0], [0, 1, 0], atol=1e-15)


@given(seed=st.integers(0, 10_000), severity=st.sampled_from(SEVERITIES))
def test_downsample_is_submultiset(seed, severity):
    pts = np.random.default_rng(seed).integers(0, 4, size=(60, 3)).astype(float)
    out = apply_corruption(PointCloud(pts), CorruptionSpec("uniform_downsample", severity, seed=seed)).points
    rows, counts = np.unique(pts, axis=0, return_counts=True)
    have = {tuple(r): c for r, c in zip(rows, counts)}
    for r, c in zip(*np.unique(out, axis=0, return_counts=True)):
        assert have[tuple(r)] >= c


def test_uniform_noise_bounded(cloud):
    spec = CorruptionSpec("uniform_noise", "high", seed=0)
    out = apply_corruption(cloud, spec).points
    assert np.max(np.abs(out - cloud.points)) <= spec.parameter * bbox_diagonal(cloud.points)


def test_impulse_moves_exact_count(cloud):
    spec = CorruptionSpec("impulse", "low", seed=0)
    out = apply_corruption(cloud, spec).points
    moved = np.any(out != cloud.points, axis=1).sum()
    assert moved == round(0.01 * 2048)


def test_upsample_keeps_originals(cloud):
    out = apply_corruption(cloud, CorruptionSpec("upsample", "high", seed=0)).points
    np.testing.assert_array_equal(out[:2048], cloud.points)


def test_aliases_and_validation():
    assert CorruptionSpec("UniformDownsample").kind == "uniform_downsample"
    assert CorruptionSpec("rotate", "HIGH").parameter == SEVERITY_TABLE["rotation"][1]
    with pytest.raises(ValueError):
        CorruptionSpec("ffd")
    with pytest.raises(ValueError):
        CorruptionSpec("shear", "medium")
