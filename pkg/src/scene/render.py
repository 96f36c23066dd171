"""
Single-view depth rendering of scenes by analytic ray casting.

The camera is a pinhole with square pixels; its frame has x to the right, y
down and z along the viewing direction.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from src.config import RunConfig
from src.errors import DataError
from src.pointcloud.base import PointCloud
from src.pointcloud.filters import add_noise
from src.pointcloud.normals import prepare_cloud
from src.scene.scene import Scene

logger = logging.getLogger(__name__)

MAX_RENDER_ATTEMPTS = 10


@dataclass(frozen=True, eq=False)
class Camera:
    position: np.ndarray
    rotation: np.ndarray
    resolution: int = 120
    fov_deg: float = 60.0

    def rays(self) -> np.ndarray:
        """Unit world directions through the pixel centers, row-major, (resolution^2, 3)."""
        half = np.tan(np.radians(self.fov_deg) / 2.0)
        ticks = (np.arange(self.resolution) + 0.5) / self.resolution * 2.0 - 1.0
        v, u = np.meshgrid(ticks * half, ticks * half, indexing="ij")
        local = np.column_stack([u.ravel(), v.ravel(), np.ones(u.size)])
        local /= np.linalg.norm(local, axis=1, keepdims=True)
        return local @ self.rotation.T


def look_at(position: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Camera rotation (columns right, down, forward) looking from position to target."""
    forward = np.asarray(target, dtype=np.float64) - np.asarray(position, dtype=np.float64)
    forward /= np.linalg.norm(forward)
    up = np.array([0.0, 0.0, 1.0])
    if np.linalg.norm(np.cross(forward, up)) < 1e-9:
        up = np.array([0.0, 1.0, 0.0])
    right = np.cross(forward, up)
    right /= np.linalg.norm(right)
    down = np.cross(forward, right)
    return np.column_stack([right, down, forward])


def random_camera(
    rng: np.random.Generator,
    target: np.ndarray,
    distance_range=(0.5, 0.8),
    elevation_range_deg=(20.0, 80.0),
    resolution: int = 120,
    fov_deg: float = 60.0,
) -> Camera:
    """Camera on a random point of the viewing shell above `target`, looking at it."""
    distance = rng.uniform(*distance_range)
    elevation = np.radians(rng.uniform(*elevation_range_deg))
    azimuth = rng.uniform(0.0, 2.0 * np.pi)
    offset = distance * np.array(
        [np.cos(elevation) * np.cos(azimuth), np.cos(elevation) * np.sin(azimuth), np.sin(elevation)]
    )
    position = np.asarray(target, dtype=np.float64) + offset
    return Camera(position=position, rotation=look_at(position, target), resolution=resolution, fov_deg=fov_deg)


def render_view(
    scene: Scene,
    camera: Camera,
    noise_sigma: float = 0.0,
    rng: Optional[np.random.Generator] = None,
    include_table: bool = False,
) -> PointCloud:
    """
    Ray-cast the scene into a point cloud with analytic normals facing the camera.

    Args:
        scene: Scene to render
        camera: Pinhole camera
        noise_sigma: Depth noise along each viewing ray (meters)
        rng: Random generator for the noise
        include_table: Also return hits on the table plane

    Raises:
        DataError: "empty view" when no ray hits anything.
    """
    directions = camera.rays()
    origins = np.broadcast_to(camera.position, directions.shape)
    distances, normals, owners = scene.ray_cast(origins, directions)

    if include_table:
        denominator = directions @ scene.table_normal
        with np.errstate(divide="ignore", invalid="ignore"):
            t_table = ((scene.table_point - camera.position) @ scene.table_normal) / denominator
        table_hit = (denominator < 0) & (t_table >= 0) & (t_table < distances)
        distances = np.where(table_hit, t_table, distances)
        normals[table_hit] = scene.table_normal

    hit = np.isfinite(distances)
    if not hit.any():
        raise DataError("empty view")

    points = camera.position + distances[hit, None] * directions[hit]
    normals = normals[hit]
    facing = np.einsum("ij,ij->i", normals, directions[hit]) > 0
    normals[facing] = -normals[facing]
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)

    cloud = PointCloud(points=points, normals=normals, viewpoint=np.asarray(camera.position, dtype=np.float64).copy())
    if noise_sigma > 0:
        if rng is None:
            raise ValueError("render_view needs an rng for noise")
        cloud = add_noise(cloud, noise_sigma, rng)
    logger.debug(f"Rendered {len(cloud)} points from {int(hit.sum())} hits")
    return cloud


def observe(scene: Scene, config: RunConfig, rng: np.random.Generator) -> PointCloud:
    """
    Render the scene from a random camera and prepare the cloud for grasp detection.

    Empty views are re-rendered from a fresh random camera up to
    MAX_RENDER_ATTEMPTS times.
    """

    def attempt() -> PointCloud:
        camera = random_camera(
            rng,
            target=np.array([scene.workspace_center[0], scene.workspace_center[1], scene.table_z]),
            distance_range=(config.camera_distance_min, config.camera_distance_max),
            elevation_range_deg=(config.camera_elevation_min_deg, config.camera_elevation_max_deg),
            resolution=config.camera_resolution,
            fov_deg=config.camera_fov_deg,
        )
        return render_view(scene, camera, config.noise_sigma, rng)

    retrying = Retrying(
        stop=stop_after_attempt(MAX_RENDER_ATTEMPTS),
        retry=retry_if_exception_type(DataError),
        reraise=True,
    )
    cloud = retrying(attempt)
    return prepare_cloud(cloud, config.voxel_size, config.normal_k, config.normals_first)
