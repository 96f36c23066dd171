"""
Synthetic tabletop scenes, rendering and the analytic grasp oracle.

Components:
- primitives: spheres, boxes and cylinders with ray, distance and support queries
- collision: GJK intersection on support functions
- scene: packed and pile scene generation
- render: pinhole ray casting into point clouds
- oracle: swept-gripper collision and friction-cone labels
- dataset: labeled JSON-lines datasets built from generated scenes
"""

from src.scene.collision import below_plane, intersects, intersects_any, may_intersect
from src.scene.dataset import (
    DatasetHeader,
    LabeledDataset,
    LabeledRegion,
    RegionLabels,
    SceneRecord,
    build_dataset,
    scene_rng,
    split_scenes,
)
from src.scene.oracle import GraspLabel, label_grasp, label_grasps
from src.scene.primitives import Box, Cylinder, Primitive, PrimitiveRecord, Sphere, primitive_from_record
from src.scene.render import Camera, look_at, observe, random_camera, render_view
from src.scene.scene import Scene, SceneDescription, generate_scene, scene_kind_for

__all__ = [
    "below_plane",
    "intersects",
    "intersects_any",
    "may_intersect",
    "DatasetHeader",
    "LabeledDataset",
    "LabeledRegion",
    "RegionLabels",
    "SceneRecord",
    "build_dataset",
    "scene_rng",
    "split_scenes",
    "GraspLabel",
    "label_grasp",
    "label_grasps",
    "Box",
    "Cylinder",
    "Primitive",
    "PrimitiveRecord",
    "Sphere",
    "primitive_from_record",
    "Camera",
    "look_at",
    "observe",
    "random_camera",
    "render_view",
    "Scene",
    "SceneDescription",
    "generate_scene",
    "scene_kind_for",
]
