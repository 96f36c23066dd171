"""
PCA surface normals over k-nearest neighborhoods.
"""

import logging

import numpy as np

from src.errors import DataError
from src.pointcloud.base import PointCloud
from src.pointcloud.filters import voxel_downsample
from src.pointcloud.neighbors import knn_graph

logger = logging.getLogger(__name__)


def estimate_normals(cloud: PointCloud, k: int = 16) -> PointCloud:
    """
    Estimate a unit normal per point.

    The normal at p_i is the eigenvector of the smallest eigenvalue of the
    covariance of its neighborhood N(i) plus p_i itself. With a viewpoint the
    sign is chosen so that the normal faces the camera.

    Args:
        cloud: Input cloud
        k: Neighborhood size, clamped to n - 1 for small clouds

    Returns:
        A new PointCloud carrying the estimated normals.

    Raises:
        DataError: If the cloud has fewer than three points.
    """
    n = len(cloud)
    if n < 3:
        raise DataError("too few points for normal estimation")
    if k + 1 > n:
        logger.debug(f"Clamping normal neighborhood from {k} to {n - 1} for {n} points")
        k = n - 1

    graph = knn_graph(cloud.points, k)
    neighborhoods = cloud.points[graph.with_self()]
    centered = neighborhoods - neighborhoods.mean(axis=1, keepdims=True)
    covariances = np.einsum("nki,nkj->nij", centered, centered) / neighborhoods.shape[1]
    _, eigenvectors = np.linalg.eigh(covariances)
    normals = eigenvectors[:, :, 0]

    if cloud.viewpoint is not None:
        facing = np.einsum("ij,ij->i", normals, cloud.viewpoint - cloud.points)
        normals = np.where((facing < 0)[:, None], -normals, normals)

    normals = normals / np.linalg.norm(normals, axis=1, keepdims=True)
    return cloud.with_normals(normals)


def orient_normals(cloud: PointCloud, reference: np.ndarray) -> PointCloud:
    """Flip each normal of the cloud that points away from its reference normal."""
    normals = cloud.normals
    agree = np.einsum("ij,ij->i", normals, reference) >= 0
    return cloud.with_normals(np.where(agree[:, None], normals, -normals))


def prepare_cloud(cloud: PointCloud, voxel_size: float, normal_k: int = 16, normals_first: bool = False) -> PointCloud:
    """
    Downsample and estimate normals, in that order unless normals_first is set.

    Normals already present are kept when normals_first is set; otherwise
    they are recomputed on the downsampled cloud. Recomputed normals face the
    viewpoint when there is one, else they take the sign of the voxel-averaged
    input normals.
    """
    if normals_first:
        with_normals = cloud if cloud.has_normals else estimate_normals(cloud, normal_k)
        return voxel_downsample(with_normals, voxel_size)
    downsampled = voxel_downsample(cloud, voxel_size)
    estimated = estimate_normals(downsampled, normal_k)
    if cloud.viewpoint is None and downsampled.has_normals:
        estimated = orient_normals(estimated, downsampled.normals)
    return estimated
