"""
Analytic grasp oracle.

A grasp succeeds when:
1. the open gripper (two fingers and the palm), swept from the pregrasp pose
   retracted along the approach axis to the grasp pose, touches no primitive
   and stays above the table;
2. two fingers closing from +-G_w/2 along the closing line through p_c first
   meet the same target primitive (the one owning p_c) on both sides;
3. both contact normals lie within the friction cone arctan(mu) of the
   closing line.
"""

import logging
from dataclasses import dataclass
from typing import List, Literal, Optional, Sequence

import numpy as np

from src.config import GripperSpec
from src.grasp.geometry import EdgeGrasp, gripper_boxes
from src.scene.collision import below_plane, intersects_any
from src.scene.scene import Scene

logger = logging.getLogger(__name__)

FailureReason = Literal["none", "collision", "friction_cone", "aperture", "unreachable"]

# Tolerance on |p_a - p_c| <= G_w/2 (meters)
APERTURE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class GraspLabel:
    edge_id: int
    success: bool
    failure_reason: FailureReason = "none"

    def __post_init__(self):
        if self.success and self.failure_reason != "none":
            raise ValueError("a successful label cannot carry a failure reason")


@dataclass(frozen=True, eq=False)
class ClosingContacts:
    """First contacts of the two fingers along the closing line."""

    points: np.ndarray
    normals: np.ndarray
    owners: np.ndarray
    travel: np.ndarray


def sweep_collides(scene: Scene, grasp: EdgeGrasp, gripper: GripperSpec, retraction: float) -> bool:
    """True if any gripper body hits a primitive or the table on its way from pregrasp to grasp."""
    for box in gripper_boxes(grasp, gripper):
        swept = box.swept(grasp.approach_axis, retraction)
        if below_plane(swept, scene.table_point, scene.table_normal):
            return True
        if intersects_any(swept, scene.primitives):
            return True
    return False


def close_fingers(scene: Scene, grasp: EdgeGrasp, gripper: GripperSpec) -> ClosingContacts:
    """
    Cast both fingers along the closing line through p_c.

    The finger starting at +G_w/2 moves along -x and the other along +x;
    each travels at most G_w.
    """
    x = grasp.closing_axis
    offset = (grasp.p_c - grasp.center) @ x
    on_line = grasp.p_c - offset * x
    origins = np.stack([on_line + gripper.half_width * x, on_line - gripper.half_width * x])
    directions = np.stack([-x, x])
    travel, normals, owners = scene.ray_cast(origins, directions)
    points = origins + np.where(np.isfinite(travel), travel, 0.0)[:, None] * directions
    return ClosingContacts(points=points, normals=normals, owners=owners, travel=travel)


def within_friction_cone(normals: np.ndarray, axis: np.ndarray, friction_mu: float) -> bool:
    """Every normal makes an angle of at most arctan(mu) with the line along `axis`."""
    cosines = np.clip(np.abs(normals @ axis), 0.0, 1.0)
    angles = np.arccos(cosines)
    return bool(np.all(angles <= np.arctan(friction_mu)))


def label_grasp(
    scene: Scene,
    grasp: EdgeGrasp,
    gripper: GripperSpec,
    friction_mu: float = 0.75,
    retraction: Optional[float] = None,
    edge_id: int = -1,
) -> GraspLabel:
    """
    Label one grasp against the ground-truth scene.

    Args:
        scene: Ground-truth scene
        grasp: Posed grasp
        gripper: Gripper dimensions
        friction_mu: Friction coefficient
        retraction: Pregrasp retraction along -a_ac, G_d when None
        edge_id: Identifier copied into the label
    """
    retraction = gripper.depth if retraction is None else retraction

    if np.linalg.norm(grasp.p_a - grasp.p_c) > gripper.half_width + APERTURE_TOLERANCE:
        return GraspLabel(edge_id, False, "aperture")
    if not scene.primitives:
        return GraspLabel(edge_id, False, "unreachable")
    if sweep_collides(scene, grasp, gripper, retraction):
        return GraspLabel(edge_id, False, "collision")

    contacts = close_fingers(scene, grasp, gripper)
    if not np.all(np.isfinite(contacts.travel)) or contacts.travel.sum() > gripper.width:
        return GraspLabel(edge_id, False, "unreachable")
    target = scene.owning_primitive(grasp.p_c)
    if np.any(contacts.owners != target):
        return GraspLabel(edge_id, False, "collision")
    if not within_friction_cone(contacts.normals, grasp.closing_axis, friction_mu):
        return GraspLabel(edge_id, False, "friction_cone")
    return GraspLabel(edge_id, True)


def label_grasps(
    scene: Scene,
    grasps: Sequence[EdgeGrasp],
    gripper: GripperSpec,
    friction_mu: float = 0.75,
    retraction: Optional[float] = None,
) -> List[GraspLabel]:
    return [label_grasp(scene, g, gripper, friction_mu, retraction, edge_id=i) for i, g in enumerate(grasps)]
