"""
Labeled edge-grasp datasets generated from synthetic scenes.

A dataset file is JSON lines: a DatasetHeader, then one SceneRecord per
scene holding the ground-truth scene, the prepared cloud and every labeled
region. Regions are stored by approach index; their geometry is rebuilt from
the stored cloud on load, so local contact indices stay valid.
"""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from src import FORMAT_VERSION
from src.config import GripperSpec, RunConfig
from src.errors import DataError
from src.grasp.geometry import table_collision_filter
from src.grasp.sampler import LocalRegion, batch_grasps, build_batch, build_region, sample_approach_points
from src.pointcloud.base import PointCloud
from src.scene.oracle import label_grasp
from src.scene.render import observe
from src.scene.scene import Scene, SceneDescription, generate_scene, scene_kind_for

logger = logging.getLogger(__name__)

Split = Literal["train", "val"]

# Independent random streams derived from the master seed
STREAM_SCENE = 0
STREAM_SPLIT = 1
STREAM_EVAL = 2
STREAM_DETECT = 3
STREAM_TRAIN = 4


def scene_rng(seed: int, stream: int, index: int = 0) -> np.random.Generator:
    """Generator for one (stream, index) pair, independent of every other pair."""
    return np.random.default_rng(np.random.SeedSequence([seed, stream, index]))


class DatasetHeader(BaseModel):
    format_version: int = FORMAT_VERSION
    kind: str = "dataset"
    gripper: GripperSpec
    voxel_size: float
    friction_mu: float
    object_mass: float
    delta_check: bool = True
    scenes: int
    config: Dict[str, Any] = Field(default_factory=dict)


class RegionLabels(BaseModel):
    approach_index: int
    contacts: List[int] = Field(description="Local contact indices within the region")
    labels: List[int]
    reasons: List[str]


class SceneRecord(BaseModel):
    scene_index: int
    split: Split
    scene: SceneDescription
    viewpoint: Optional[List[float]] = None
    points: List[List[float]]
    normals: List[List[float]]
    regions: List[RegionLabels] = Field(default_factory=list)

    def cloud(self) -> PointCloud:
        return PointCloud(
            points=np.asarray(self.points, dtype=np.float64).reshape(-1, 3),
            normals=np.asarray(self.normals, dtype=np.float64).reshape(-1, 3),
            viewpoint=None if self.viewpoint is None else np.asarray(self.viewpoint, dtype=np.float64),
        )


@dataclass(frozen=True, eq=False)
class LabeledRegion:
    """One region with its labeled edges, ready for collation."""

    scene_index: int
    split: Split
    region: LocalRegion
    contacts: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return len(self.contacts)


@dataclass
class LabeledDataset:
    header: DatasetHeader
    records: List[SceneRecord]

    def __len__(self) -> int:
        return len(self.records)

    @property
    def edge_count(self) -> int:
        return sum(len(r.labels) for record in self.records for r in record.regions)

    @property
    def positive_count(self) -> int:
        return sum(sum(r.labels) for record in self.records for r in record.regions)

    @property
    def positive_rate(self) -> float:
        edges = self.edge_count
        return self.positive_count / edges if edges else 0.0

    def examples(self, split: Optional[Split] = None) -> List[LabeledRegion]:
        """
        Rebuild the labeled regions of every scene (optionally of one split).

        Raises:
            DataError: If a stored contact is not a candidate of its rebuilt region.
        """
        examples = []
        for record in self.records:
            if split is not None and record.split != split:
                continue
            cloud = record.cloud()
            for labeled in record.regions:
                region = build_region(cloud, labeled.approach_index, self.header.gripper, self.header.delta_check)
                contacts = np.asarray(labeled.contacts, dtype=np.int64)
                if not np.isin(contacts, region.contact_candidates).all():
                    raise DataError(
                        f"scene {record.scene_index}: stored contacts of approach point "
                        f"{labeled.approach_index} are not candidates of the rebuilt region"
                    )
                examples.append(
                    LabeledRegion(
                        scene_index=record.scene_index,
                        split=record.split,
                        region=region,
                        contacts=contacts,
                        labels=np.asarray(labeled.labels, dtype=np.int64),
                    )
                )
        return examples

    def write(self, path: Union[str, Path]) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as handle:
            handle.write(json.dumps(self.header.model_dump(mode="json"), sort_keys=True) + "\n")
            for record in self.records:
                handle.write(json.dumps(record.model_dump(mode="json"), sort_keys=True) + "\n")
        logger.info(f"Wrote {len(self.records)} scenes, {self.edge_count} edges to {path}")

    @classmethod
    def read(cls, path: Union[str, Path]) -> "LabeledDataset":
        """
        Raises:
            DataError: If the file is missing, empty, of another kind or version, or malformed.
        """
        path = Path(path)
        try:
            lines = [line for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
        except OSError as e:
            raise DataError(f"cannot read dataset {path}: {e}") from e
        if not lines:
            raise DataError(f"dataset {path} is empty")
        try:
            header = DatasetHeader.model_validate_json(lines[0])
            records = [SceneRecord.model_validate_json(line) for line in lines[1:]]
        except ValidationError as e:
            raise DataError(f"malformed dataset {path}: {e}") from e
        if header.kind != "dataset":
            raise DataError(f"{path} holds a {header.kind!r} file, not a dataset")
        if header.format_version != FORMAT_VERSION:
            raise DataError(f"unsupported dataset format version {header.format_version}")
        return cls(header=header, records=records)


def split_scenes(count: int, val_fraction: float, rng: np.random.Generator) -> List[Split]:
    """
    Split tags per scene index; round(count * val_fraction) scenes go to validation,
    at least one when val_fraction > 0 and count > 1.
    """
    val_count = int(round(count * val_fraction))
    if val_fraction > 0 and count > 1:
        val_count = max(val_count, 1)
    val_count = min(val_count, count - 1) if count > 1 else 0
    tags: List[Split] = ["train"] * count
    for index in rng.permutation(count)[:val_count]:
        tags[int(index)] = "val"
    return tags


def label_scene(
    scene: Scene, cloud: PointCloud, config: RunConfig, rng: np.random.Generator
) -> List[RegionLabels]:
    """Sample, table-filter and label the edges of one observed scene."""
    gripper = config.gripper
    m = min(config.approach_points, len(cloud))
    approach_indices = sample_approach_points(cloud, m, config.approach_strategy, rng)
    batch = build_batch(cloud, approach_indices, config.max_edges, rng, gripper, config.delta_check)
    grasps = batch_grasps(cloud, batch, gripper)

    per_region: Dict[int, RegionLabels] = {}
    for (region_id, local), grasp in zip(batch.edges, grasps):
        if not table_collision_filter(grasp, gripper, scene.table_z):
            continue
        label = label_grasp(scene, grasp, gripper, config.friction_mu, config.retraction)
        region = batch.regions[int(region_id)]
        entry = per_region.setdefault(
            int(region_id), RegionLabels(approach_index=region.approach_index, contacts=[], labels=[], reasons=[])
        )
        entry.contacts.append(int(local))
        entry.labels.append(int(label.success))
        entry.reasons.append(label.failure_reason)
    return [per_region[key] for key in sorted(per_region)]


def generate_record(config: RunConfig, index: int, split: Split) -> SceneRecord:
    """Generate, observe and label scene `index` from its own random stream."""
    rng = scene_rng(config.seed, STREAM_SCENE, index)
    kind = scene_kind_for(index, config.scene_kind)
    object_count = int(rng.integers(config.min_objects, config.max_objects + 1))
    scene = generate_scene(kind, object_count, rng, config.table_z, config.workspace_size, config.object_mass)
    cloud = observe(scene, config, rng)
    try:
        regions = label_scene(scene, cloud, config, rng)
    except DataError as e:
        logger.warning(f"Scene {index}: no labeled edges ({e})")
        regions = []
    return SceneRecord(
        scene_index=index,
        split=split,
        scene=scene.to_record(),
        viewpoint=None if cloud.viewpoint is None else [float(v) for v in cloud.viewpoint],
        points=cloud.points.tolist(),
        normals=cloud.normals.tolist(),
        regions=regions,
    )


def build_dataset(config: RunConfig) -> LabeledDataset:
    """
    Generate config.scenes labeled scenes.

    Scenes are independent (each draws from its own stream), so the worker
    count never changes the result.
    """
    splits = split_scenes(config.scenes, config.val_fraction, scene_rng(config.seed, STREAM_SPLIT))

    def task(item: Tuple[int, Split]) -> SceneRecord:
        return generate_record(config, item[0], item[1])

    items = list(enumerate(splits))
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(task, items))
    else:
        records = [task(item) for item in items]

    header = DatasetHeader(
        gripper=config.gripper,
        voxel_size=config.voxel_size,
        friction_mu=config.friction_mu,
        object_mass=config.object_mass,
        delta_check=config.delta_check,
        scenes=config.scenes,
        config=config.echo(),
    )
    dataset = LabeledDataset(header=header, records=records)
    logger.info(
        f"Built dataset: {len(dataset)} scenes, {dataset.edge_count} edges, "
        f"positive rate {dataset.positive_rate:.3f}"
    )
    return dataset
