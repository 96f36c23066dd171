"""
Edge grasps: pose construction, gripper filters, sampling and records.

Components:
- geometry: EdgeGrasp frames, flip about the approach axis, gripper boxes and filters
- sampler: approach points, local regions, capped edge batches, grasp selection
- serialize: GraspScorePose and the JSON-lines grasp file
"""

from src.grasp.geometry import (
    EdgeGrasp,
    OrientedBox,
    approach_direction_filter,
    cloud_collision_filter,
    compute_edge_frame,
    edge_frames,
    flip_normal_grasp,
    gripper_boxes,
    table_collision_filter,
)
from src.grasp.sampler import (
    GraspBatch,
    LocalRegion,
    batch_grasps,
    build_batch,
    build_region,
    build_regions,
    sample_approach_points,
    select_grasps,
)
from src.grasp.serialize import (
    GraspRecord,
    GraspScorePose,
    deserialize_grasp,
    read_grasps,
    serialize_grasp,
    write_grasps,
)

__all__ = [
    "EdgeGrasp",
    "OrientedBox",
    "approach_direction_filter",
    "cloud_collision_filter",
    "compute_edge_frame",
    "edge_frames",
    "flip_normal_grasp",
    "gripper_boxes",
    "table_collision_filter",
    "GraspBatch",
    "LocalRegion",
    "batch_grasps",
    "build_batch",
    "build_region",
    "build_regions",
    "sample_approach_points",
    "select_grasps",
    "GraspRecord",
    "GraspScorePose",
    "deserialize_grasp",
    "read_grasps",
    "serialize_grasp",
    "write_grasps",
]
