"""
Analytic primitives: spheres, boxes and cylinders with a rigid pose.

Every primitive answers ray intersection (entry distance and outward normal),
signed distance and support queries in world coordinates. Local frames have
the primitive's axis along z.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from src.errors import DataError

ShapeName = Literal["sphere", "box", "cylinder"]

# Direction components below this are treated as parallel to a slab or cap
PARALLEL_EPS = 1e-15


def _identity() -> np.ndarray:
    return np.eye(3)


class PrimitiveRecord(BaseModel):
    shape: ShapeName
    size: List[float] = Field(description="sphere: [r]; box: half extents [hx, hy, hz]; cylinder: [r, half_height]")
    center: List[float] = Field(min_length=3, max_length=3)
    rotation: List[List[float]]


@dataclass(frozen=True, eq=False)
class Primitive(ABC):
    center: np.ndarray
    rotation: np.ndarray = field(default_factory=_identity)

    shape: str = field(init=False, default="")

    # Local-frame queries, implemented per shape

    @abstractmethod
    def _local_ray(self, origins: np.ndarray, directions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Entry distances (inf on miss) and outward local normals."""

    @abstractmethod
    def _local_signed_distance(self, points: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def _local_support(self, direction: np.ndarray) -> np.ndarray: ...

    @property
    @abstractmethod
    def bounding_radius(self) -> float: ...

    @property
    @abstractmethod
    def size(self) -> List[float]: ...

    # World-frame API

    def to_local(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=np.float64).reshape(-1, 3) - self.center) @ self.rotation

    def ray_intersect(self, origins: np.ndarray, directions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        First entry along each ray.

        Args:
            origins: (n, 3) ray origins
            directions: (n, 3) unit directions

        Returns:
            (distances, normals): (n,) entry distances, inf where the ray
            misses or starts inside; (n, 3) outward world normals at the hits.
        """
        origins = np.asarray(origins, dtype=np.float64).reshape(-1, 3)
        directions = np.asarray(directions, dtype=np.float64).reshape(-1, 3)
        t, normals = self._local_ray(self.to_local(origins), directions @ self.rotation)
        return t, normals @ self.rotation.T

    def signed_distance(self, points: np.ndarray) -> np.ndarray:
        return self._local_signed_distance(self.to_local(points))

    def support(self, direction: np.ndarray) -> np.ndarray:
        local = self._local_support(self.rotation.T @ np.asarray(direction, dtype=np.float64))
        return self.center + self.rotation @ local

    def lowest_z(self) -> float:
        return float(self.support(np.array([0.0, 0.0, -1.0]))[2])

    def highest_z(self) -> float:
        return float(self.support(np.array([0.0, 0.0, 1.0]))[2])

    def moved(self, center: np.ndarray, rotation: Optional[np.ndarray] = None) -> "Primitive":
        return replace(self, center=np.asarray(center, dtype=np.float64), rotation=self.rotation if rotation is None else rotation)

    def transform(self, rotation: np.ndarray, translation: np.ndarray) -> "Primitive":
        return replace(self, center=rotation @ self.center + translation, rotation=rotation @ self.rotation)

    def to_record(self) -> PrimitiveRecord:
        return PrimitiveRecord(
            shape=self.shape,
            size=[float(v) for v in self.size],
            center=[float(v) for v in self.center],
            rotation=[[float(v) for v in row] for row in self.rotation],
        )


@dataclass(frozen=True, eq=False)
class Sphere(Primitive):
    radius: float = 0.03
    shape: str = field(init=False, default="sphere")

    @property
    def bounding_radius(self) -> float:
        return self.radius

    @property
    def size(self) -> List[float]:
        return [self.radius]

    def _local_ray(self, origins, directions):
        b = np.einsum("ij,ij->i", origins, directions)
        c = np.einsum("ij,ij->i", origins, origins) - self.radius**2
        disc = b * b - c
        with np.errstate(invalid="ignore"):
            t = -b - np.sqrt(disc)
        hit = (disc >= 0) & (t >= 0)
        t = np.where(hit, t, np.inf)
        points = origins + np.where(hit, t, 0.0)[:, None] * directions
        return t, points / self.radius

    def _local_signed_distance(self, points):
        return np.linalg.norm(points, axis=1) - self.radius

    def _local_support(self, direction):
        norm = np.linalg.norm(direction)
        return np.zeros(3) if norm == 0 else self.radius * direction / norm


@dataclass(frozen=True, eq=False)
class Box(Primitive):
    half_extents: np.ndarray = field(default_factory=lambda: np.full(3, 0.02))
    shape: str = field(init=False, default="box")

    @property
    def bounding_radius(self) -> float:
        return float(np.linalg.norm(self.half_extents))

    @property
    def size(self) -> List[float]:
        return [float(v) for v in self.half_extents]

    def _local_ray(self, origins, directions):
        h = self.half_extents
        parallel = np.abs(directions) < PARALLEL_EPS
        safe = np.where(parallel, 1.0, directions)
        t1 = (-h - origins) / safe
        t2 = (h - origins) / safe
        t_low = np.minimum(t1, t2)
        t_high = np.maximum(t1, t2)
        inside_slab = np.abs(origins) <= h
        t_low = np.where(parallel, np.where(inside_slab, -np.inf, np.inf), t_low)
        t_high = np.where(parallel, np.where(inside_slab, np.inf, -np.inf), t_high)

        near = t_low.max(axis=1)
        far = t_high.min(axis=1)
        hit = (near <= far) & (near >= 0)
        t = np.where(hit, near, np.inf)

        axis = t_low.argmax(axis=1)
        normals = np.zeros_like(origins)
        rows = np.arange(len(origins))
        normals[rows, axis] = -np.sign(directions[rows, axis])
        return t, normals

    def _local_signed_distance(self, points):
        q = np.abs(points) - self.half_extents
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
        inside = np.minimum(q.max(axis=1), 0.0)
        return outside + inside

    def _local_support(self, direction):
        return np.where(direction >= 0, 1.0, -1.0) * self.half_extents


@dataclass(frozen=True, eq=False)
class Cylinder(Primitive):
    radius: float = 0.02
    half_height: float = 0.04
    shape: str = field(init=False, default="cylinder")

    @property
    def bounding_radius(self) -> float:
        return float(np.hypot(self.radius, self.half_height))

    @property
    def size(self) -> List[float]:
        return [self.radius, self.half_height]

    def _local_ray(self, origins, directions):
        n = len(origins)
        ox, oy, oz = origins.T
        dx, dy, dz = directions.T

        # Side surface
        a = dx * dx + dy * dy
        b = ox * dx + oy * dy
        c = ox * ox + oy * oy - self.radius**2
        disc = b * b - a * c
        with np.errstate(invalid="ignore", divide="ignore"):
            t_side = (-b - np.sqrt(disc)) / a
        side_ok = (a > PARALLEL_EPS) & (disc >= 0) & (t_side >= 0)
        side_ok &= np.abs(oz + np.where(side_ok, t_side, 0.0) * dz) <= self.half_height
        t_side = np.where(side_ok, t_side, np.inf)

        # Cap facing the ray
        cap_z = np.where(dz < 0, self.half_height, -self.half_height)
        safe_dz = np.where(np.abs(dz) < PARALLEL_EPS, 1.0, dz)
        t_cap = (cap_z - oz) / safe_dz
        cap_x, cap_y = ox + t_cap * dx, oy + t_cap * dy
        cap_ok = (np.abs(dz) >= PARALLEL_EPS) & (t_cap >= 0) & (cap_x**2 + cap_y**2 <= self.radius**2)
        t_cap = np.where(cap_ok, t_cap, np.inf)

        t = np.minimum(t_side, t_cap)
        normals = np.zeros((n, 3))
        use_side = np.isfinite(t_side) & (t_side <= t_cap)
        hit_side = origins[use_side] + t_side[use_side, None] * directions[use_side]
        normals[use_side, :2] = hit_side[:, :2] / self.radius
        use_cap = np.isfinite(t_cap) & ~use_side
        normals[use_cap, 2] = np.sign(cap_z[use_cap])
        return t, normals

    def _local_signed_distance(self, points):
        d = np.column_stack([np.linalg.norm(points[:, :2], axis=1) - self.radius, np.abs(points[:, 2]) - self.half_height])
        return np.minimum(d.max(axis=1), 0.0) + np.linalg.norm(np.maximum(d, 0.0), axis=1)

    def _local_support(self, direction):
        radial = np.array([direction[0], direction[1], 0.0])
        norm = np.linalg.norm(radial)
        radial = np.zeros(3) if norm == 0 else self.radius * radial / norm
        return radial + np.array([0.0, 0.0, self.half_height if direction[2] >= 0 else -self.half_height])


AnyPrimitive = Union[Sphere, Box, Cylinder]


def primitive_from_record(record: Union[PrimitiveRecord, Dict[str, Any]]) -> AnyPrimitive:
    if not isinstance(record, PrimitiveRecord):
        record = PrimitiveRecord.model_validate(record)
    center = np.asarray(record.center, dtype=np.float64)
    rotation = np.asarray(record.rotation, dtype=np.float64)
    if record.shape == "sphere":
        return Sphere(center=center, rotation=rotation, radius=record.size[0])
    if record.shape == "box":
        return Box(center=center, rotation=rotation, half_extents=np.asarray(record.size, dtype=np.float64))
    if record.shape == "cylinder":
        return Cylinder(center=center, rotation=rotation, radius=record.size[0], half_height=record.size[1])
    raise DataError(f"unknown primitive shape {record.shape!r}")
