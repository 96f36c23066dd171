"""
Tests for PLY and CSV point cloud files.
"""

import numpy as np
import pytest

from src.errors import DataError
from src.pointcloud.base import PointCloud
from src.pointcloud.io import read_cloud, read_csv, read_ply, write_ply
from tests.helpers import sphere_cloud


class TestPly:
    def test_write_read_keeps_everything(self, tmp_path):
        cloud = sphere_cloud(n=20, viewpoint=[0.1, 0.2, 0.3])
        path = tmp_path / "cloud.ply"
        write_ply(cloud, path)
        loaded = read_ply(path)
        np.testing.assert_array_equal(loaded.points, cloud.points)
        np.testing.assert_allclose(loaded.normals, cloud.normals, atol=1e-15)
        np.testing.assert_array_equal(loaded.viewpoint, cloud.viewpoint)

    def test_points_only(self, tmp_path):
        path = tmp_path / "points.ply"
        write_ply(PointCloud([[1.0, 2.0, 3.0]]), path)
        loaded = read_cloud(path)
        assert not loaded.has_normals
        assert loaded.viewpoint is None

    def test_binary_rejected(self, tmp_path):
        path = tmp_path / "binary.ply"
        path.write_text("ply\nformat binary_little_endian 1.0\nelement vertex 0\nend_header\n")
        with pytest.raises(DataError, match="ASCII"):
            read_ply(path)

    def test_truncated(self, tmp_path):
        path = tmp_path / "short.ply"
        path.write_text(
            "ply\nformat ascii 1.0\nelement vertex 2\nproperty double x\nproperty double y\n"
            "property double z\nend_header\n0 0 0\n"
        )
        with pytest.raises(DataError, match="expected 2 vertices"):
            read_ply(path)


class TestCsv:
    def test_with_header_and_normals(self, tmp_path):
        path = tmp_path / "cloud.csv"
        path.write_text("x,y,z,nx,ny,nz\n0,0,0,0,0,2\n1,0,0,0,0,1\n")
        cloud = read_csv(path)
        np.testing.assert_allclose(cloud.normals, [[0, 0, 1], [0, 0, 1]])

    def test_points_only(self, tmp_path):
        path = tmp_path / "cloud.csv"
        path.write_text("0,0,0\n1,2,3\n")
        assert len(read_cloud(path)) == 2

    def test_bad_columns(self, tmp_path):
        path = tmp_path / "cloud.csv"
        path.write_text("0,0\n1,2\n")
        with pytest.raises(DataError):
            read_csv(path)

    def test_unknown_suffix(self, tmp_path):
        with pytest.raises(DataError, match="unsupported"):
            read_cloud(tmp_path / "cloud.obj")
