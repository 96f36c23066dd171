"""
Tabletop scenes of analytic primitives and their random generation.

Packed scenes stand objects upright on the table without overlap (rejection
sampling); pile scenes drop randomly oriented objects one at a time to the
lowest height where they touch nothing.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import List, Literal, Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy.spatial.transform import Rotation
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from src.errors import DataError, PlacementError
from src.pointcloud.base import random_rotation
from src.scene.collision import intersects_any
from src.scene.primitives import AnyPrimitive, Box, Cylinder, PrimitiveRecord, Sphere, primitive_from_record

logger = logging.getLogger(__name__)

SceneKind = Literal["packed", "pile"]

MAX_PLACEMENT_ATTEMPTS = 1000
# Objects are kept this far from the workspace walls (meters)
WALL_MARGIN = 0.04
# Resting heights are resolved to this tolerance (meters)
DROP_TOLERANCE = 1e-5
UP = np.array([0.0, 0.0, 1.0])


class SceneDescription(BaseModel):
    kind: str
    table_point: List[float]
    table_normal: List[float]
    workspace_lower: List[float]
    workspace_upper: List[float]
    object_mass: float
    primitives: List[PrimitiveRecord] = Field(default_factory=list)


@dataclass(frozen=True, eq=False)
class Scene:
    """
    Primitives resting on a table plane inside an axis-aligned workspace.

    The table is the plane through table_point with upward normal
    table_normal; both move with the scene under rigid transforms.
    """

    primitives: Tuple[AnyPrimitive, ...]
    table_point: np.ndarray = field(default_factory=lambda: np.zeros(3))
    table_normal: np.ndarray = field(default_factory=lambda: UP.copy())
    workspace_lower: np.ndarray = field(default_factory=lambda: np.zeros(3))
    workspace_upper: np.ndarray = field(default_factory=lambda: np.full(3, 0.30))
    kind: str = "packed"
    object_mass: float = 0.5

    def __len__(self) -> int:
        return len(self.primitives)

    @property
    def table_z(self) -> float:
        return float(self.table_point[2])

    @property
    def workspace_center(self) -> np.ndarray:
        return 0.5 * (self.workspace_lower + self.workspace_upper)

    def ray_cast(self, origins: np.ndarray, directions: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Nearest primitive hit per ray.

        Returns:
            (distances, normals, owners): inf distance and owner -1 on a miss.
        """
        origins = np.asarray(origins, dtype=np.float64).reshape(-1, 3)
        n = len(origins)
        best = np.full(n, np.inf)
        normals = np.zeros((n, 3))
        owners = np.full(n, -1, dtype=np.int64)
        for index, primitive in enumerate(self.primitives):
            t, hit_normals = primitive.ray_intersect(origins, directions)
            closer = t < best
            best = np.where(closer, t, best)
            normals[closer] = hit_normals[closer]
            owners[closer] = index
        return best, normals, owners

    def signed_distance(self, points: np.ndarray) -> np.ndarray:
        """Signed distance to the union of primitives."""
        if not self.primitives:
            return np.full(len(np.asarray(points).reshape(-1, 3)), np.inf)
        return np.min([p.signed_distance(points) for p in self.primitives], axis=0)

    def owning_primitive(self, point: np.ndarray) -> int:
        """Index of the primitive whose surface is closest to `point`."""
        if not self.primitives:
            raise DataError("scene has no primitives")
        distances = [abs(float(p.signed_distance(point)[0])) for p in self.primitives]
        return int(np.argmin(distances))

    def remove_primitive(self, index: int) -> "Scene":
        if not 0 <= index < len(self.primitives):
            raise DataError(f"no primitive {index} in a scene of {len(self.primitives)}")
        return replace(self, primitives=self.primitives[:index] + self.primitives[index + 1 :])

    def transform(self, rotation: np.ndarray, translation: np.ndarray) -> "Scene":
        """
        The scene moved rigidly; the workspace box is carried along as its
        transformed corners' bounds.
        """
        corners = rotation @ np.stack([self.workspace_lower, self.workspace_upper]).T
        corners = corners.T + translation
        return replace(
            self,
            primitives=tuple(p.transform(rotation, translation) for p in self.primitives),
            table_point=rotation @ self.table_point + translation,
            table_normal=rotation @ self.table_normal,
            workspace_lower=corners.min(axis=0),
            workspace_upper=corners.max(axis=0),
        )

    def to_record(self) -> SceneDescription:
        return SceneDescription(
            kind=self.kind,
            table_point=[float(v) for v in self.table_point],
            table_normal=[float(v) for v in self.table_normal],
            workspace_lower=[float(v) for v in self.workspace_lower],
            workspace_upper=[float(v) for v in self.workspace_upper],
            object_mass=self.object_mass,
            primitives=[p.to_record() for p in self.primitives],
        )

    @classmethod
    def from_record(cls, record: SceneDescription) -> "Scene":
        return cls(
            primitives=tuple(primitive_from_record(p) for p in record.primitives),
            table_point=np.asarray(record.table_point, dtype=np.float64),
            table_normal=np.asarray(record.table_normal, dtype=np.float64),
            workspace_lower=np.asarray(record.workspace_lower, dtype=np.float64),
            workspace_upper=np.asarray(record.workspace_upper, dtype=np.float64),
            kind=record.kind,
            object_mass=record.object_mass,
        )


def sample_primitive(rng: np.random.Generator) -> AnyPrimitive:
    """A random sphere, box or cylinder at the origin with identity pose; sizes fit a 0.08 m gripper."""
    shape = int(rng.integers(3))
    origin = np.zeros(3)
    if shape == 0:
        return Sphere(center=origin, radius=float(rng.uniform(0.015, 0.035)))
    if shape == 1:
        half = np.array([rng.uniform(0.01, 0.035), rng.uniform(0.01, 0.035), rng.uniform(0.015, 0.05)])
        return Box(center=origin, half_extents=half)
    return Cylinder(center=origin, radius=float(rng.uniform(0.012, 0.03)), half_height=float(rng.uniform(0.02, 0.06)))


def rest_on_table(primitive: AnyPrimitive, xy: np.ndarray, rotation: np.ndarray, table_z: float) -> AnyPrimitive:
    """Pose the primitive at (x, y) with its lowest point on the table."""
    posed = primitive.moved(np.array([xy[0], xy[1], 0.0]), rotation)
    return posed.moved(posed.center + np.array([0.0, 0.0, table_z - posed.lowest_z()]))


def _place_packed(
    rng: np.random.Generator, placed: List[AnyPrimitive], lower: np.ndarray, upper: np.ndarray, table_z: float
) -> AnyPrimitive:
    primitive = sample_primitive(rng)
    yaw = Rotation.from_euler("z", rng.uniform(0.0, 2.0 * np.pi)).as_matrix()
    xy = rng.uniform(lower[:2] + WALL_MARGIN, upper[:2] - WALL_MARGIN)
    candidate = rest_on_table(primitive, xy, yaw, table_z)
    if intersects_any(candidate, placed):
        raise PlacementError("overlaps a placed object")
    return candidate


def drop_height(candidate: AnyPrimitive, placed: List[AnyPrimitive], table_z: float) -> float:
    """
    Lowest center height at which `candidate` (same x, y and orientation) touches
    neither the table nor any placed primitive, resolved by bisection.
    """
    resting = candidate.center[2] + table_z - candidate.lowest_z()

    def at(z: float) -> AnyPrimitive:
        return candidate.moved(np.array([candidate.center[0], candidate.center[1], z]))

    if not intersects_any(at(resting), placed):
        return resting

    top = max(p.highest_z() for p in placed) + 2.0 * candidate.bounding_radius
    low, high = resting, top
    while high - low > DROP_TOLERANCE:
        middle = 0.5 * (low + high)
        if intersects_any(at(middle), placed):
            low = middle
        else:
            high = middle
    return high


def _place_pile(
    rng: np.random.Generator, placed: List[AnyPrimitive], lower: np.ndarray, upper: np.ndarray, table_z: float
) -> AnyPrimitive:
    primitive = sample_primitive(rng)
    rotation = random_rotation(rng)
    center_xy = 0.5 * (lower[:2] + upper[:2])
    spread = (upper[:2] - lower[:2]) / 6.0
    xy = rng.uniform(center_xy - spread, center_xy + spread)
    candidate = primitive.moved(np.array([xy[0], xy[1], 0.0]), rotation)
    z = drop_height(candidate, placed, table_z)
    candidate = candidate.moved(np.array([xy[0], xy[1], z]))
    if candidate.highest_z() > upper[2]:
        raise PlacementError("pile exceeds the workspace height")
    return candidate


def generate_scene(
    kind: SceneKind,
    object_count: int,
    rng: np.random.Generator,
    table_z: float = 0.0,
    workspace_size: float = 0.30,
    object_mass: float = 0.5,
) -> Scene:
    """
    Generate a packed or pile scene.

    Raises:
        DataError: If object_count < 1 or the kind is unknown.
        PlacementError: If an object cannot be placed within MAX_PLACEMENT_ATTEMPTS tries.
    """
    if object_count < 1:
        raise DataError(f"object_count must be at least 1, got {object_count}")
    if kind == "packed":
        place = _place_packed
    elif kind == "pile":
        place = _place_pile
    else:
        raise DataError(f"unknown scene kind {kind!r}")

    lower = np.array([0.0, 0.0, table_z])
    upper = lower + workspace_size
    placed: List[AnyPrimitive] = []
    for _ in range(object_count):
        retrying = Retrying(
            stop=stop_after_attempt(MAX_PLACEMENT_ATTEMPTS),
            retry=retry_if_exception_type(PlacementError),
            reraise=True,
        )
        placed.append(retrying(place, rng, placed, lower, upper, table_z))

    logger.debug(f"Generated {kind} scene with {len(placed)} objects")
    return Scene(
        primitives=tuple(placed),
        table_point=np.array([0.0, 0.0, table_z]),
        workspace_lower=lower,
        workspace_upper=upper,
        kind=kind,
        object_mass=object_mass,
    )


def scene_kind_for(index: int, kind: str) -> SceneKind:
    """Scene kind for the index-th scene; "mixed" alternates packed and pile."""
    if kind == "mixed":
        return "packed" if index % 2 == 0 else "pile"
    return kind  # type: ignore[return-value]
