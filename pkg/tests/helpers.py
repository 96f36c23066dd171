"""
Builders shared by the test suite.
"""

from typing import Sequence

import numpy as np

from src.config import GripperSpec, NetworkConfig, RunConfig
from src.grasp.sampler import LocalRegion, build_region
from src.pointcloud.base import PointCloud


def sphere_cloud(
    n: int = 400,
    radius: float = 0.03,
    center: Sequence[float] = (0.0, 0.0, 0.0),
    seed: int = 0,
    viewpoint=None,
) -> PointCloud:
    """Points on a sphere with exact outward normals."""
    rng = np.random.default_rng(seed)
    directions = rng.standard_normal((n, 3))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    return PointCloud(np.asarray(center) + radius * directions, directions, viewpoint)


def random_region(n: int = 10, seed: int = 0, scale: float = 0.03) -> LocalRegion:
    """A centered region of n random points with random unit normals; every other point is a contact."""
    rng = np.random.default_rng(seed)
    points = rng.uniform(-scale, scale, size=(n, 3))
    points[0] = 0.0
    normals = rng.standard_normal((n, 3))
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    return LocalRegion(
        approach_index=0,
        point_indices=np.arange(n, dtype=np.int64),
        centered_points=points,
        normals=normals,
        contact_candidates=np.arange(1, n, dtype=np.int64),
    )


def sphere_region(seed: int = 0, gripper: GripperSpec = None) -> LocalRegion:
    cloud = sphere_cloud(n=300, seed=seed)
    return build_region(cloud, 0, gripper or GripperSpec(), check_delta=False)


def small_network() -> NetworkConfig:
    return NetworkConfig(
        psi_widths=[[8, 8], [8, 8], [8, 8]],
        omega_widths=[8, 8],
        classifier_widths=[8, 8, 8],
        vn_psi_widths=[[4, 4], [4, 4], [4, 4]],
        vn_omega_widths=[4, 4],
        vn_tnet_width=4,
    )


def tiny_config(**overrides) -> RunConfig:
    """Fast end-to-end settings: few small scenes, low resolution, a small network."""
    values = dict(
        seed=3,
        scenes=4,
        scene_kind="mixed",
        min_objects=1,
        max_objects=2,
        object_count=2,
        approach_points=8,
        max_edges=200,
        detect_approach_points=16,
        detect_max_edges=400,
        camera_resolution=48,
        voxel_size=0.005,
        noise_sigma=0.0,
        epochs=2,
        batch_size=8,
        rounds=1,
        network=small_network(),
    )
    values.update(overrides)
    return RunConfig(**values)


def random_rotation_matrix(rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q @ np.diag(np.sign(np.diag(r)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def synthetic_dataset(scenes: int = 4, regions: int = 4, contacts: int = 12, seed: int = 0, val_scenes: int = 1):
    """
    A small labeled dataset over sphere clouds without rendering or the oracle.

    An edge is labeled positive when its contact lies farther than 25 mm from
    the approach point, a rotation invariant rule the networks can fit.
    """
    from src.scene.dataset import DatasetHeader, LabeledDataset, RegionLabels, SceneRecord
    from src.scene.primitives import Sphere
    from src.scene.scene import Scene

    gripper = GripperSpec()
    rng = np.random.default_rng(seed)
    records = []
    for index in range(scenes):
        center = np.array([0.15, 0.15, 0.05]) + rng.uniform(-0.02, 0.02, size=3)
        cloud = sphere_cloud(n=150, radius=0.03, center=center, seed=seed * 100 + index)
        labeled = []
        for approach in rng.choice(len(cloud), size=regions, replace=False):
            region = build_region(cloud, int(approach), gripper)
            chosen = np.sort(rng.choice(region.contact_candidates, size=min(contacts, len(region.contact_candidates)), replace=False))
            distance = np.linalg.norm(region.centered_points[chosen], axis=1)
            labels = (distance > 0.025).astype(int)
            labeled.append(
                RegionLabels(
                    approach_index=int(approach),
                    contacts=[int(c) for c in chosen],
                    labels=[int(v) for v in labels],
                    reasons=["none" if v else "friction_cone" for v in labels],
                )
            )
        scene = Scene(primitives=(Sphere(center=center, radius=0.03),))
        records.append(
            SceneRecord(
                scene_index=index,
                split="val" if index >= scenes - val_scenes else "train",
                scene=scene.to_record(),
                points=cloud.points.tolist(),
                normals=cloud.normals.tolist(),
                regions=labeled,
            )
        )
    header = DatasetHeader(gripper=gripper, voxel_size=0.004, friction_mu=0.75, object_mass=0.5, scenes=scenes)
    return LabeledDataset(header=header, records=records)
