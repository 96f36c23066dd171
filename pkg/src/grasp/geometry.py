"""
Edge grasp frames and gripper geometry.

An edge grasp is an (approach point, contact point) pair plus the contact
normal n_c. The gripper closes along x = n_c, approaches along
z = a_ac = normalize(n_c x (n_c x (p_a - p_c))), and y = z x x. The gripper
center (palm) C = p_a - delta * a_ac with delta = G_d + (p_a - p_c) . a_ac, so
p_a sits between the fingers at depth delta and p_c at fingertip depth G_d.
"""

import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np

from src.config import GripperSpec
from src.errors import GraspRejected
from src.pointcloud.base import PointCloud

logger = logging.getLogger(__name__)

# Below this |n_c x (p_a - p_c)| the approach direction is undefined
DEGENERACY_THRESHOLD = 1e-8

# Rotation by pi about the approach axis, applied on the right
FLIP_ABOUT_APPROACH = np.diag([-1.0, -1.0, 1.0])

REJECT_DEGENERATE = "degenerate"
REJECT_APERTURE = "aperture"
REJECT_DELTA = "delta_range"


@dataclass(frozen=True, eq=False)
class EdgeGrasp:
    """A posed edge grasp; rotation columns are (closing, lateral, approach)."""

    approach_index: int
    contact_index: int
    p_a: np.ndarray
    p_c: np.ndarray
    n_c: np.ndarray
    a_ac: np.ndarray
    delta: float
    center: np.ndarray
    rotation: np.ndarray

    @property
    def closing_axis(self) -> np.ndarray:
        return self.rotation[:, 0]

    @property
    def lateral_axis(self) -> np.ndarray:
        return self.rotation[:, 1]

    @property
    def approach_axis(self) -> np.ndarray:
        return self.rotation[:, 2]

    def transform(self, rotation: np.ndarray, translation: np.ndarray) -> "EdgeGrasp":
        """Grasp moved rigidly with its scene."""
        return replace(
            self,
            p_a=rotation @ self.p_a + translation,
            p_c=rotation @ self.p_c + translation,
            n_c=rotation @ self.n_c,
            a_ac=rotation @ self.a_ac,
            center=rotation @ self.center + translation,
            rotation=rotation @ self.rotation,
        )


@dataclass(frozen=True, eq=False)
class EdgeFrames:
    """Vectorized frames for many edges sharing one approach point."""

    a_ac: np.ndarray
    delta: np.ndarray
    center: np.ndarray
    rotation: np.ndarray
    valid: np.ndarray
    reasons: np.ndarray


def edge_frames(
    p_a: np.ndarray,
    p_c: np.ndarray,
    n_c: np.ndarray,
    gripper: GripperSpec,
    check_delta: bool = False,
) -> EdgeFrames:
    """
    Compute grasp frames for contacts p_c (m, 3) with normals n_c (m, 3).

    Invalid rows keep NaN-free placeholder values; use `valid` and `reasons`.
    """
    p_a = np.asarray(p_a, dtype=np.float64).reshape(3)
    p_c = np.asarray(p_c, dtype=np.float64).reshape(-1, 3)
    n_c = np.asarray(n_c, dtype=np.float64).reshape(-1, 3)
    n_c = n_c / np.linalg.norm(n_c, axis=1, keepdims=True)

    offset = p_a - p_c
    cross = np.cross(n_c, offset)
    cross_norm = np.linalg.norm(cross, axis=1)
    degenerate = cross_norm < DEGENERACY_THRESHOLD
    too_wide = np.linalg.norm(offset, axis=1) > gripper.half_width

    safe_norm = np.where(degenerate, 1.0, cross_norm)
    a_ac = np.cross(n_c, cross) / safe_norm[:, None]
    a_ac = a_ac / np.where(degenerate, 1.0, np.linalg.norm(a_ac, axis=1))[:, None]
    a_ac[degenerate] = 0.0

    delta = gripper.depth + np.einsum("ij,ij->i", offset, a_ac)
    center = p_a - delta[:, None] * a_ac
    lateral = np.cross(a_ac, n_c)
    rotation = np.stack([n_c, lateral, a_ac], axis=2)

    out_of_range = (delta < 0) | (delta > gripper.depth) if check_delta else np.zeros_like(degenerate)
    reasons = np.full(len(p_c), "", dtype=object)
    reasons[out_of_range] = REJECT_DELTA
    reasons[too_wide] = REJECT_APERTURE
    reasons[degenerate] = REJECT_DEGENERATE
    valid = ~(degenerate | too_wide | out_of_range)
    return EdgeFrames(a_ac, delta, center, rotation, valid, reasons)


def compute_edge_frame(
    p_a: np.ndarray,
    p_c: np.ndarray,
    n_c: np.ndarray,
    gripper: GripperSpec,
    approach_index: int = -1,
    contact_index: int = -1,
    check_delta: bool = False,
) -> EdgeGrasp:
    """
    Build the SE(3) gripper pose of one edge grasp.

    Raises:
        GraspRejected: With reason "degenerate" when p_a - p_c is parallel to
            n_c, "aperture" when |p_a - p_c| > G_w / 2, and "delta_range" when
            check_delta is set and delta falls outside [0, G_d].
    """
    n_c = np.asarray(n_c, dtype=np.float64).reshape(3)
    frames = edge_frames(p_a, np.asarray(p_c)[None], n_c[None], gripper, check_delta)
    if not frames.valid[0]:
        raise GraspRejected(str(frames.reasons[0]), f"approach {approach_index}, contact {contact_index}")
    return EdgeGrasp(
        approach_index=int(approach_index),
        contact_index=int(contact_index),
        p_a=np.asarray(p_a, dtype=np.float64).reshape(3),
        p_c=np.asarray(p_c, dtype=np.float64).reshape(3),
        n_c=n_c / np.linalg.norm(n_c),
        a_ac=frames.a_ac[0],
        delta=float(frames.delta[0]),
        center=frames.center[0],
        rotation=frames.rotation[0],
    )


def flip_normal_grasp(grasp: EdgeGrasp) -> EdgeGrasp:
    """
    The grasp built from -n_c: same center and approach, rotated by pi about the approach axis.
    """
    return replace(grasp, n_c=-grasp.n_c, rotation=grasp.rotation @ FLIP_ABOUT_APPROACH)


@dataclass(frozen=True, eq=False)
class OrientedBox:
    """Box with center, rotation (columns are local axes) and half extents."""

    center: np.ndarray
    rotation: np.ndarray
    half_extents: np.ndarray

    @property
    def bounding_radius(self) -> float:
        return float(np.linalg.norm(self.half_extents))

    def corners(self) -> np.ndarray:
        signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], dtype=np.float64)
        return self.center + (signs * self.half_extents) @ self.rotation.T

    def contains(self, points: np.ndarray) -> np.ndarray:
        local = (np.asarray(points, dtype=np.float64).reshape(-1, 3) - self.center) @ self.rotation
        return np.all(np.abs(local) <= self.half_extents, axis=1)

    def support(self, direction: np.ndarray) -> np.ndarray:
        local = self.rotation.T @ direction
        return self.center + self.rotation @ (np.where(local >= 0, 1.0, -1.0) * self.half_extents)

    def swept(self, axis: np.ndarray, distance: float) -> "OrientedBox":
        """
        Volume swept when translating by -distance along one of the box's own axes.

        `axis` must be a column of `rotation`.
        """
        local_axis = int(np.argmax(np.abs(self.rotation.T @ axis)))
        half_extents = self.half_extents.copy()
        half_extents[local_axis] += 0.5 * distance
        return OrientedBox(self.center - 0.5 * distance * axis, self.rotation, half_extents)


def gripper_boxes(grasp: EdgeGrasp, gripper: GripperSpec, opening: Optional[float] = None) -> List[OrientedBox]:
    """
    Finger and palm boxes of the open gripper at the grasp pose.

    Fingers span depth [0, G_d] from C along the approach axis and sit just
    outside +-opening/2 along the closing axis; the palm spans
    +-palm_halfwidth at depth [-finger_thickness, 0].
    """
    opening = gripper.width if opening is None else opening
    x, z = grasp.closing_axis, grasp.approach_axis
    t = gripper.finger_thickness
    finger_half = np.array([0.5 * t, t, 0.5 * gripper.depth])
    finger_offset = 0.5 * opening + 0.5 * t

    boxes = [
        OrientedBox(grasp.center + sign * finger_offset * x + 0.5 * gripper.depth * z, grasp.rotation, finger_half)
        for sign in (1.0, -1.0)
    ]
    palm_half = np.array([gripper.palm_halfwidth, t, 0.5 * t])
    boxes.append(OrientedBox(grasp.center - 0.5 * t * z, grasp.rotation, palm_half))
    return boxes


def table_collision_filter(grasp: EdgeGrasp, gripper: GripperSpec, table_z: float) -> bool:
    """True (keep) iff every corner of every gripper box lies strictly above the table."""
    lowest = min(box.corners()[:, 2].min() for box in gripper_boxes(grasp, gripper))
    return bool(lowest > table_z)


def cloud_collision_filter(grasp: EdgeGrasp, cloud: PointCloud, gripper: GripperSpec) -> bool:
    """True (keep) iff no observed point lies inside a finger or the palm."""
    return not any(box.contains(cloud.points).any() for box in gripper_boxes(grasp, gripper))


def approach_direction_filter(grasp: EdgeGrasp, preferred: Sequence[float], max_angle_deg: float) -> bool:
    """True (keep) iff the approach direction is within max_angle_deg of `preferred`."""
    preferred = np.asarray(preferred, dtype=np.float64)
    preferred = preferred / np.linalg.norm(preferred)
    cosine = float(np.clip(grasp.a_ac @ preferred, -1.0, 1.0))
    return bool(np.degrees(np.arccos(cosine)) <= max_angle_deg)
