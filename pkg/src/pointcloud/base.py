"""
Core point-cloud types.

PointCloud holds positions, optional unit normals and an optional camera
viewpoint; KnnGraph holds exact k-nearest-neighbor lists. Both are immutable:
every operation returns a new object.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.spatial.transform import Rotation

from src.errors import DataError

NORMAL_TOLERANCE = 1e-6


def as_points(points: Union["PointCloud", np.ndarray, Sequence[Sequence[float]]]) -> np.ndarray:
    """Return an (n, 3) float64 array from a cloud or array-like."""
    if isinstance(points, PointCloud):
        return points.points
    array = np.asarray(points, dtype=np.float64)
    if array.ndim == 1 and array.size == 0:
        return array.reshape(0, 3)
    if array.ndim != 2 or array.shape[1] != 3:
        raise DataError(f"expected an (n, 3) array of points, got shape {array.shape}")
    return array


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Observed point cloud in meters."""

    points: np.ndarray
    normals: Optional[np.ndarray] = None
    viewpoint: Optional[np.ndarray] = None

    def __post_init__(self):
        points = as_points(self.points)
        object.__setattr__(self, "points", points)

        if self.normals is not None:
            normals = np.asarray(self.normals, dtype=np.float64).reshape(-1, 3)
            if normals.shape[0] != points.shape[0]:
                raise DataError(
                    f"normals count {normals.shape[0]} does not match points count {points.shape[0]}"
                )
            lengths = np.linalg.norm(normals, axis=1)
            if lengths.size and np.max(np.abs(lengths - 1.0)) > NORMAL_TOLERANCE:
                raise DataError("normals must have unit length")
            object.__setattr__(self, "normals", normals)

        if self.viewpoint is not None:
            viewpoint = np.asarray(self.viewpoint, dtype=np.float64).reshape(3)
            object.__setattr__(self, "viewpoint", viewpoint)

    def __len__(self) -> int:
        return int(self.points.shape[0])

    def __repr__(self) -> str:
        return f"PointCloud(n={len(self)}, normals={self.has_normals}, viewpoint={self.viewpoint is not None})"

    @property
    def has_normals(self) -> bool:
        return self.normals is not None

    def with_normals(self, normals: Optional[np.ndarray]) -> "PointCloud":
        return PointCloud(self.points, normals, self.viewpoint)

    def subset(self, indices: np.ndarray) -> "PointCloud":
        """Cloud restricted to the given indices, in the given order."""
        indices = np.asarray(indices, dtype=np.int64)
        normals = None if self.normals is None else self.normals[indices]
        return PointCloud(self.points[indices], normals, self.viewpoint)

    def transform(self, rotation: np.ndarray, translation: Optional[np.ndarray] = None) -> "PointCloud":
        """Apply the rigid motion p -> R p + t to points, normals and viewpoint."""
        rotation = np.asarray(rotation, dtype=np.float64)
        translation = np.zeros(3) if translation is None else np.asarray(translation, dtype=np.float64)
        points = self.points @ rotation.T + translation
        normals = None if self.normals is None else self.normals @ rotation.T
        viewpoint = None if self.viewpoint is None else rotation @ self.viewpoint + translation
        return PointCloud(points, normals, viewpoint)

    @classmethod
    def empty(cls, viewpoint: Optional[np.ndarray] = None) -> "PointCloud":
        return cls(np.zeros((0, 3)), np.zeros((0, 3)), viewpoint)


@dataclass(frozen=True, eq=False)
class KnnGraph:
    """
    Exact k-nearest-neighbor lists.

    neighbors[i] holds min(k, n-1) indices j != i sorted by ascending distance
    to point i, ties broken by ascending index.
    """

    k: int
    neighbors: np.ndarray

    def __len__(self) -> int:
        return int(self.neighbors.shape[0])

    def with_self(self) -> np.ndarray:
        """(n, k+1) index array whose first column is i itself."""
        own = np.arange(len(self), dtype=np.int64)[:, None]
        return np.concatenate([own, self.neighbors], axis=1)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform random rotation matrix from a normalized quaternion of four standard normals."""
    quat = rng.standard_normal(4)
    return Rotation.from_quat(quat / np.linalg.norm(quat)).as_matrix()
