"""
Approach point sampling, local regions, grasp batches and final selection.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Literal, Optional, Sequence

import numpy as np

from src.config import GripperSpec
from src.errors import DataError, GraspRejected
from src.grasp.geometry import EdgeGrasp, compute_edge_frame, edge_frames
from src.grasp.serialize import GraspScorePose
from src.pointcloud.base import PointCloud
from src.pointcloud.neighbors import farthest_point_sampling, radius_crop

logger = logging.getLogger(__name__)

MIN_REGION_POINTS = 4

ApproachStrategy = Literal["fps", "uniform"]
SelectionPolicy = Literal["highest_z", "top_k"]


@dataclass(frozen=True)
class LocalRegion:
    """
    Ball of radius G_w/2 around an approach point, translated so p_a is the origin.

    Local index 0 is the approach point itself.
    """

    approach_index: int
    point_indices: np.ndarray
    centered_points: np.ndarray
    normals: np.ndarray
    contact_candidates: np.ndarray

    def __len__(self) -> int:
        return len(self.point_indices)

    def with_geometry(self, centered_points: np.ndarray, normals: np.ndarray) -> "LocalRegion":
        """Same region and candidates with replaced (e.g. rotated) geometry."""
        return LocalRegion(
            approach_index=self.approach_index,
            point_indices=self.point_indices,
            centered_points=centered_points,
            normals=normals,
            contact_candidates=self.contact_candidates,
        )


@dataclass(frozen=True)
class GraspBatch:
    """Regions of one scene plus the flattened (region id, contact local index) edge list."""

    regions: List[LocalRegion]
    edges: np.ndarray = field(default_factory=lambda: np.empty((0, 2), dtype=np.int64))

    def __len__(self) -> int:
        return len(self.edges)

    def contacts_for(self, region_id: int) -> np.ndarray:
        return self.edges[self.edges[:, 0] == region_id, 1]


def sample_approach_points(
    cloud: PointCloud,
    m: int,
    strategy: ApproachStrategy,
    rng: np.random.Generator,
    mask: Optional[np.ndarray] = None,
    seed_index: Optional[int] = None,
) -> np.ndarray:
    """
    Choose m distinct approach point indices.

    Args:
        cloud: Observed cloud
        m: Number of approach points
        strategy: "uniform" (without replacement) or "fps"
        rng: Random generator
        mask: Optional boolean mask or index list restricting the candidates
        seed_index: FPS start (position among candidates); drawn from rng when None

    Raises:
        DataError: If m exceeds the number of candidate points.
    """
    candidates = np.arange(len(cloud))
    if mask is not None:
        mask = np.asarray(mask)
        candidates = np.flatnonzero(mask) if mask.dtype == bool else np.unique(mask.astype(np.int64))
    if m > len(candidates):
        raise DataError(f"cannot sample {m} approach points from {len(candidates)} candidates")

    if strategy == "uniform":
        return candidates[rng.choice(len(candidates), size=m, replace=False)]
    if strategy == "fps":
        if seed_index is None:
            seed_index = int(rng.integers(len(candidates)))
        return candidates[farthest_point_sampling(cloud.points[candidates], m, seed_index)]
    raise DataError(f"unknown approach strategy {strategy!r}")


def build_region(
    cloud: PointCloud,
    approach_index: int,
    gripper: GripperSpec,
    check_delta: bool = True,
) -> LocalRegion:
    """
    Crop the ball of radius G_w/2 around an approach point and find its contact candidates.

    Raises:
        GraspRejected: With reason "insufficient_geometry" when fewer than four points fall in the ball.
        DataError: If the cloud has no normals.
    """
    if not cloud.has_normals:
        raise DataError("build_region needs a cloud with normals")
    p_a = cloud.points[approach_index]
    inside = radius_crop(cloud.points, p_a, gripper.half_width)
    if len(inside) < MIN_REGION_POINTS:
        raise GraspRejected("insufficient_geometry", f"approach {approach_index}: {len(inside)} points in ball")

    point_indices = np.concatenate([[approach_index], inside[inside != approach_index]]).astype(np.int64)
    centered = cloud.points[point_indices] - p_a
    centered[0] = 0.0
    normals = cloud.normals[point_indices]

    frames = edge_frames(np.zeros(3), centered[1:], normals[1:], gripper, check_delta)
    contact_candidates = np.flatnonzero(frames.valid) + 1
    return LocalRegion(
        approach_index=int(approach_index),
        point_indices=point_indices,
        centered_points=centered,
        normals=normals,
        contact_candidates=contact_candidates.astype(np.int64),
    )


def build_regions(
    cloud: PointCloud,
    approach_indices: Sequence[int],
    gripper: GripperSpec,
    check_delta: bool = True,
    workers: int = 1,
) -> List[LocalRegion]:
    """Buildable regions in approach index order; rejected approach points are skipped."""

    def attempt(index: int) -> Optional[LocalRegion]:
        try:
            return build_region(cloud, int(index), gripper, check_delta)
        except GraspRejected as e:
            logger.debug(f"Approach point {index} rejected: {e}")
            return None

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            built = list(pool.map(attempt, approach_indices))
    else:
        built = [attempt(index) for index in approach_indices]
    return [region for region in built if region is not None]


def build_batch(
    cloud: PointCloud,
    approach_indices: Sequence[int],
    max_edges: int,
    rng: np.random.Generator,
    gripper: GripperSpec,
    check_delta: bool = True,
    workers: int = 1,
) -> GraspBatch:
    """
    Build the regions of one scene and the capped edge list over them.

    When more than max_edges candidate edges exist, max_edges are drawn
    uniformly without replacement; the kept edges stay in region order.

    Raises:
        DataError: If every approach point is rejected.
    """
    regions = build_regions(cloud, approach_indices, gripper, check_delta, workers)
    if not regions:
        raise DataError("no valid approach points")

    edges = np.concatenate(
        [np.column_stack([np.full(len(r.contact_candidates), i), r.contact_candidates]) for i, r in enumerate(regions)]
    ).astype(np.int64).reshape(-1, 2)
    if len(edges) > max_edges:
        keep = np.sort(rng.choice(len(edges), size=max_edges, replace=False))
        edges = edges[keep]
    logger.debug(f"Batch: {len(regions)} regions, {len(edges)} edges")
    return GraspBatch(regions=regions, edges=edges)


def batch_grasps(cloud: PointCloud, batch: GraspBatch, gripper: GripperSpec) -> List[EdgeGrasp]:
    """
    Posed grasps for every edge of a batch, in edge order.

    Frames are computed in region coordinates, the same ones contact candidacy
    was decided in, and then moved back to the cloud frame.
    """
    identity = np.eye(3)
    grasps = []
    for region_id, local in batch.edges:
        region = batch.regions[region_id]
        grasp = compute_edge_frame(
            region.centered_points[0],
            region.centered_points[local],
            region.normals[local],
            gripper,
            approach_index=region.approach_index,
            contact_index=int(region.point_indices[local]),
        )
        grasps.append(grasp.transform(identity, cloud.points[region.approach_index]))
    return grasps


def select_grasps(
    scored: Sequence[GraspScorePose],
    threshold: float,
    policy: SelectionPolicy = "highest_z",
    k: int = 1,
) -> List[GraspScorePose]:
    """
    Keep grasps scoring at least `threshold` and pick by policy.

    highest_z returns the single grasp with the largest center z (ties: higher
    score, then lower (approach_index, contact_index)); top_k returns the k
    best scores (ties: lower (approach_index, contact_index)). Equal index
    pairs fall back to list position. An empty list means nothing passed the
    threshold.
    """
    passing = [(i, s) for i, s in enumerate(scored) if s.score >= threshold]
    if not passing:
        return []

    def index_key(item):
        position, pose = item
        return (pose.grasp.approach_index, pose.grasp.contact_index, position)

    if policy == "highest_z":
        ranked = sorted(passing, key=lambda item: (-item[1].grasp.center[2], -item[1].score, index_key(item)))
        return [ranked[0][1]]
    if policy == "top_k":
        ranked = sorted(passing, key=lambda item: (-item[1].score, index_key(item)))
        return [s for _, s in ranked[:k]]
    raise DataError(f"unknown selection policy {policy!r}")
