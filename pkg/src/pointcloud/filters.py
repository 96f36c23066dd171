"""
Cloud-to-cloud filters: voxel downsampling, sensor noise, workspace crop.
"""

import logging
from typing import Optional

import numpy as np

from src.errors import DataError
from src.pointcloud.base import PointCloud

logger = logging.getLogger(__name__)


def voxel_downsample(cloud: PointCloud, voxel_size: float) -> PointCloud:
    """
    Replace the points of every occupied voxel by their centroid.

    Voxel keys are floor(p / voxel_size); output is ordered by ascending key
    with z most significant, then y, then x. Normals become the normalized mean
    of member normals.

    Raises:
        DataError: If voxel_size is not positive.
    """
    if voxel_size <= 0:
        raise DataError(f"voxel_size must be positive, got {voxel_size}")
    if len(cloud) == 0:
        return PointCloud(cloud.points, cloud.normals, cloud.viewpoint)

    keys = np.floor(cloud.points / voxel_size).astype(np.int64)
    order = np.lexsort((keys[:, 0], keys[:, 1], keys[:, 2]))
    sorted_keys = keys[order]
    boundaries = np.flatnonzero(np.any(np.diff(sorted_keys, axis=0) != 0, axis=1)) + 1
    starts = np.concatenate([[0], boundaries])
    counts = np.diff(np.concatenate([starts, [len(order)]]))

    points = np.add.reduceat(cloud.points[order], starts, axis=0) / counts[:, None]

    normals = None
    if cloud.normals is not None:
        summed = np.add.reduceat(cloud.normals[order], starts, axis=0)
        lengths = np.linalg.norm(summed, axis=1)
        # Opposing normals can cancel; fall back to the first member's normal
        degenerate = lengths < 1e-12
        summed[degenerate] = cloud.normals[order][starts[degenerate]]
        lengths[degenerate] = 1.0
        normals = summed / lengths[:, None]

    logger.debug(f"Voxel downsample {len(cloud)} -> {len(points)} points at {voxel_size} m")
    return PointCloud(points, normals, cloud.viewpoint)


def add_noise(cloud: PointCloud, sigma: float, rng: np.random.Generator) -> PointCloud:
    """
    Displace every point by N(0, sigma^2) along its camera ray.

    The ray runs from the viewpoint to the point, or along +z without a
    viewpoint. Normals are left unchanged.
    """
    if sigma < 0:
        raise DataError(f"sigma must be non-negative, got {sigma}")
    if sigma == 0 or len(cloud) == 0:
        return PointCloud(cloud.points.copy(), cloud.normals, cloud.viewpoint)

    if cloud.viewpoint is None:
        directions = np.tile(np.array([0.0, 0.0, 1.0]), (len(cloud), 1))
    else:
        directions = ray_directions(cloud)

    offsets = rng.normal(0.0, sigma, size=len(cloud))
    return PointCloud(cloud.points + offsets[:, None] * directions, cloud.normals, cloud.viewpoint)


def filter_workspace(cloud: PointCloud, lower: np.ndarray, upper: np.ndarray) -> PointCloud:
    """Keep points inside the axis-aligned box [lower, upper]."""
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    inside = np.all((cloud.points >= lower) & (cloud.points <= upper), axis=1)
    return cloud.subset(np.flatnonzero(inside))


def ray_directions(cloud: PointCloud, viewpoint: Optional[np.ndarray] = None) -> np.ndarray:
    """Unit vectors from the viewpoint to each point."""
    origin = cloud.viewpoint if viewpoint is None else np.asarray(viewpoint, dtype=np.float64)
    if origin is None:
        raise DataError("cloud has no viewpoint")
    rays = cloud.points - origin
    return rays / np.linalg.norm(rays, axis=1, keepdims=True)
