"""
Tests for the PointCloud and KnnGraph types.
"""

import numpy as np
import pytest

from src.errors import DataError
from src.pointcloud.base import KnnGraph, PointCloud, as_points, random_rotation


class TestPointCloud:
    """Validation and immutable transforms of PointCloud."""

    def test_rejects_non_unit_normals(self):
        with pytest.raises(DataError, match="unit length"):
            PointCloud(np.zeros((2, 3)), np.array([[0.0, 0.0, 2.0], [0.0, 0.0, 1.0]]))

    def test_rejects_mismatched_normals(self):
        with pytest.raises(DataError, match="does not match"):
            PointCloud(np.zeros((2, 3)), np.array([[0.0, 0.0, 1.0]]))

    def test_rejects_bad_shape(self):
        with pytest.raises(DataError):
            as_points(np.zeros((4, 2)))

    def test_transform_moves_everything(self):
        rotation = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        cloud = PointCloud([[1.0, 0.0, 0.0]], [[1.0, 0.0, 0.0]], viewpoint=[0.0, 0.0, 1.0])
        moved = cloud.transform(rotation, np.array([0.0, 0.0, 1.0]))
        np.testing.assert_allclose(moved.points, [[0.0, 1.0, 1.0]])
        np.testing.assert_allclose(moved.normals, [[0.0, 1.0, 0.0]])
        np.testing.assert_allclose(moved.viewpoint, [0.0, 0.0, 2.0])
        np.testing.assert_allclose(cloud.points, [[1.0, 0.0, 0.0]])

    def test_subset_keeps_order(self):
        cloud = PointCloud(np.arange(12, dtype=float).reshape(4, 3))
        np.testing.assert_array_equal(cloud.subset([2, 0]).points, [[6, 7, 8], [0, 1, 2]])

    def test_empty(self):
        assert len(PointCloud.empty()) == 0


class TestKnnGraph:
    def test_with_self_prepends_index(self):
        graph = KnnGraph(k=1, neighbors=np.array([[1], [0], [1]]))
        np.testing.assert_array_equal(graph.with_self(), [[0, 1], [1, 0], [2, 1]])


class TestRandomRotation:
    """Uniform rotations from normalized quaternions."""

    def test_is_rotation(self, rng):
        for _ in range(20):
            r = random_rotation(rng)
            np.testing.assert_allclose(r.T @ r, np.eye(3), atol=1e-12)
            assert np.linalg.det(r) == pytest.approx(1.0, abs=1e-12)

    def test_mean_is_zero(self):
        """The mean of uniform rotation matrices vanishes; each entry has variance 1/3."""
        rng = np.random.default_rng(0)
        samples = np.stack([random_rotation(rng) for _ in range(10000)])
        bound = 4.0 * np.sqrt(1.0 / 3.0 / len(samples))
        assert np.all(np.abs(samples.mean(axis=0)) < bound)
