"""
Neighborhood queries: exact KNN graphs, ball crops and farthest point sampling.

Ties are broken by ascending index everywhere so results are reproducible
across platforms.
"""

import logging
from typing import Union

import numpy as np
from scipy.spatial import cKDTree

from src.errors import DataError
from src.pointcloud.base import KnnGraph, PointCloud, as_points

logger = logging.getLogger(__name__)

# Extra neighbors requested from the tree so that ties at the k-th distance can be resolved by index
TIE_SLACK = 4


def _brute_force_row(points: np.ndarray, i: int, k: int) -> np.ndarray:
    distances = np.linalg.norm(points - points[i], axis=1)
    distances[i] = np.inf
    order = np.lexsort((np.arange(points.shape[0]), distances))
    return order[:k]


def knn_graph(points: Union[PointCloud, np.ndarray], k: int) -> KnnGraph:
    """
    Build the exact KNN graph of a point set.

    Args:
        points: (n, 3) positions or a PointCloud
        k: Requested neighbor count; each list has min(k, n-1) entries

    Returns:
        KnnGraph with neighbor lists sorted by distance, then index.

    Raises:
        DataError: If fewer than two points are given or k < 1.
    """
    points = as_points(points)
    n = points.shape[0]
    if n < 2:
        raise DataError(f"knn_graph needs at least 2 points, got {n}")
    if k < 1:
        raise DataError(f"k must be positive, got {k}")

    k_eff = min(k, n - 1)
    k_query = min(n, k_eff + 1 + TIE_SLACK)

    tree = cKDTree(points)
    distances, indices = tree.query(points, k=k_query)
    distances = np.asarray(distances, dtype=np.float64).reshape(n, k_query)
    indices = np.asarray(indices, dtype=np.int64).reshape(n, k_query)

    # Exact distances recomputed from coordinates so that sorting does not depend on tree internals
    distances = np.linalg.norm(points[indices] - points[:, None, :], axis=2)
    distances[indices == np.arange(n)[:, None]] = np.inf

    order = np.lexsort((indices, distances), axis=-1)
    indices = np.take_along_axis(indices, order, axis=1)
    distances = np.take_along_axis(distances, order, axis=1)
    neighbors = indices[:, :k_eff].copy()

    if k_query < n:
        # A row is ambiguous when the k-th distance equals the largest distance the tree returned
        kth = distances[:, k_eff - 1]
        last = np.where(np.isinf(distances), -np.inf, distances).max(axis=1)
        for i in np.flatnonzero(kth >= last):
            neighbors[i] = _brute_force_row(points, int(i), k_eff)

    return KnnGraph(k=k, neighbors=neighbors)


def radius_crop(points: Union[PointCloud, np.ndarray], center: np.ndarray, radius: float) -> np.ndarray:
    """
    Indices of all points within `radius` of `center` (inclusive), ascending.

    Raises:
        DataError: If radius is negative.
    """
    if radius < 0:
        raise DataError(f"radius must be non-negative, got {radius}")
    points = as_points(points)
    center = np.asarray(center, dtype=np.float64).reshape(3)
    distances = np.linalg.norm(points - center, axis=1)
    return np.flatnonzero(distances <= radius)


def farthest_point_sampling(points: Union[PointCloud, np.ndarray], m: int, seed_index: int) -> np.ndarray:
    """
    Greedy max-min subset selection starting from `seed_index`.

    Each next index maximizes the distance to the already selected set; ties
    go to the lower index.

    Raises:
        DataError: If m is outside [1, n] or seed_index is out of range.
    """
    points = as_points(points)
    n = points.shape[0]
    if m < 1 or m > n:
        raise DataError(f"cannot sample {m} points from {n}")
    if not 0 <= seed_index < n:
        raise DataError(f"seed index {seed_index} out of range for {n} points")

    selected = np.empty(m, dtype=np.int64)
    selected[0] = seed_index
    min_distance = np.linalg.norm(points - points[seed_index], axis=1)
    min_distance[seed_index] = -1.0

    for step in range(1, m):
        farthest = int(np.argmax(min_distance))
        selected[step] = farthest
        distance = np.linalg.norm(points - points[farthest], axis=1)
        min_distance = np.minimum(min_distance, distance)
        min_distance[farthest] = -1.0

    return selected
