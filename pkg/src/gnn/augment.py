"""
Rotation augmentation for the scalar model.
"""

from typing import Optional

import numpy as np

from src.grasp.sampler import LocalRegion
from src.pointcloud.base import random_rotation


def augment_rotation(
    region: LocalRegion,
    rng: Optional[np.random.Generator] = None,
    rotation: Optional[np.ndarray] = None,
) -> LocalRegion:
    """
    Rotate a centered region about its approach point.

    Uses `rotation` when given, otherwise draws a uniform one from `rng`.
    Labels, indices and contact candidates are unchanged.
    """
    if rotation is None:
        if rng is None:
            raise ValueError("augment_rotation needs an rng or a rotation")
        rotation = random_rotation(rng)
    return region.with_geometry(region.centered_points @ rotation.T, region.normals @ rotation.T)
