"""
Grasp detection on an observed point cloud.

The pipeline prepares the cloud (downsample, normals), samples approach points,
builds the capped edge batch, drops grasps rejected by the table, cloud and
approach-direction filters, scores what is left with a Scorer and selects the
final grasps.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Protocol

import numpy as np
import torch
from torch import nn

from src.config import GripperSpec, RunConfig
from src.errors import DataError
from src.gnn.batching import collate
from src.gnn.checkpoint import Checkpoint, model_from_checkpoint
from src.grasp.geometry import EdgeGrasp, approach_direction_filter, cloud_collision_filter, table_collision_filter
from src.grasp.sampler import GraspBatch, batch_grasps, build_batch, sample_approach_points, select_grasps
from src.grasp.serialize import GraspScorePose
from src.pointcloud.base import PointCloud
from src.pointcloud.cache import GraphCache
from src.pointcloud.normals import prepare_cloud
from src.scene.oracle import label_grasp
from src.scene.scene import Scene

logger = logging.getLogger(__name__)


class Scorer(Protocol):
    name: str

    def score(self, batch: GraspBatch, edge_ids: np.ndarray, grasps: List[EdgeGrasp]) -> np.ndarray:
        """Scores in [0, 1] for the edges batch.edges[edge_ids], whose poses are `grasps`."""
        ...


class ModelScorer:
    """Scores edges with a trained network."""

    name = "model"

    def __init__(self, model: nn.Module, k: int, self_loops: bool = True, batch_size: int = 64):
        torch.use_deterministic_algorithms(True)
        self.model = model
        self.k = k
        self.self_loops = self_loops
        self.batch_size = batch_size
        self.cache = GraphCache(maxsize=1024)

    @classmethod
    def from_checkpoint(cls, checkpoint: Checkpoint, batch_size: int = 64) -> "ModelScorer":
        return cls(model_from_checkpoint(checkpoint), checkpoint.k, checkpoint.self_loops, batch_size)

    def score(self, batch: GraspBatch, edge_ids: np.ndarray, grasps: List[EdgeGrasp]) -> np.ndarray:
        edges = batch.edges[edge_ids]
        if len(edges) == 0:
            return np.empty(0)
        # Edges are grouped by region in ascending order, so concatenated per-region scores keep edge order
        region_ids = np.unique(edges[:, 0])
        items = [(batch.regions[r], edges[edges[:, 0] == r, 1]) for r in region_ids]

        self.model.eval()
        scores = []
        with torch.no_grad():
            for start in range(0, len(items), self.batch_size):
                packed = collate(items[start : start + self.batch_size], self.k, self.self_loops, self.cache)
                scores.append(self.model(packed).numpy())
        return np.concatenate(scores)


class RandomEdgeScorer:
    """Edge-sample baseline: one uniformly chosen edge scores 1, every other edge 0."""

    name = "random"

    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def score(self, batch: GraspBatch, edge_ids: np.ndarray, grasps: List[EdgeGrasp]) -> np.ndarray:
        scores = np.zeros(len(edge_ids))
        if len(edge_ids):
            scores[int(self.rng.integers(len(edge_ids)))] = 1.0
        return scores


class OracleScorer:
    """Ground-truth labels as scores; an upper bound for any learned scorer."""

    name = "oracle"

    def __init__(self, scene: Scene, gripper: GripperSpec, friction_mu: float = 0.75, retraction: Optional[float] = None):
        self.scene = scene
        self.gripper = gripper
        self.friction_mu = friction_mu
        self.retraction = retraction

    def score(self, batch: GraspBatch, edge_ids: np.ndarray, grasps: List[EdgeGrasp]) -> np.ndarray:
        return np.array(
            [float(label_grasp(self.scene, g, self.gripper, self.friction_mu, self.retraction).success) for g in grasps]
        )


@dataclass
class Detection:
    """Everything the pipeline produced for one cloud."""

    cloud: PointCloud
    batch: Optional[GraspBatch]
    grasps: List[EdgeGrasp] = field(default_factory=list)
    scores: np.ndarray = field(default_factory=lambda: np.empty(0))
    selected: List[GraspScorePose] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def scored(self) -> List[GraspScorePose]:
        return [GraspScorePose(g, float(s)) for g, s in zip(self.grasps, self.scores)]


def preprocess(cloud: PointCloud, config: RunConfig) -> PointCloud:
    """
    Raises:
        DataError: If the cloud has neither normals nor a viewpoint to orient estimated ones.
    """
    if not cloud.has_normals and cloud.viewpoint is None:
        raise DataError("cloud has no normals and no viewpoint to orient them")
    return prepare_cloud(cloud, config.voxel_size, config.normal_k, config.normals_first)


def keep_mask(grasps: List[EdgeGrasp], cloud: PointCloud, config: RunConfig) -> np.ndarray:
    """Grasps surviving the table filter and the optional cloud and approach filters."""
    gripper = config.gripper
    keep = np.array([table_collision_filter(g, gripper, config.table_z) for g in grasps], dtype=bool)
    if config.cloud_collision_check:
        keep &= np.array([cloud_collision_filter(g, cloud, gripper) for g in grasps], dtype=bool)
    if config.approach_max_angle_deg is not None:
        keep &= np.array(
            [approach_direction_filter(g, config.preferred_approach, config.approach_max_angle_deg) for g in grasps],
            dtype=bool,
        )
    return keep


def detect(
    cloud: PointCloud,
    scorer: Scorer,
    config: RunConfig,
    rng: np.random.Generator,
    prepared: bool = False,
) -> Detection:
    """
    Detect grasps on a cloud.

    Args:
        cloud: Observed cloud (raw, or already prepared when `prepared` is set)
        scorer: Edge scoring back-end
        config: Sampling sizes, filters, threshold and policy
        rng: Random generator for approach points and the edge cap
        prepared: Skip downsampling and normal estimation

    Returns:
        Detection: selected is empty when nothing scores above the threshold or
        no approach point yields a region.
    """
    timings: Dict[str, float] = {}
    started = time.perf_counter()
    if not prepared:
        cloud = preprocess(cloud, config)
    timings["preprocess"] = time.perf_counter() - started

    started = time.perf_counter()
    m = min(config.detect_approach_points, len(cloud))
    approach_indices = sample_approach_points(cloud, m, config.detect_strategy, rng)
    try:
        batch = build_batch(
            cloud, approach_indices, config.detect_max_edges, rng, config.gripper, config.delta_check, config.workers
        )
    except DataError as e:
        logger.warning(f"No grasp candidates: {e}")
        return Detection(cloud=cloud, batch=None, timings=timings)
    grasps = batch_grasps(cloud, batch, config.gripper)
    keep = keep_mask(grasps, cloud, config)
    edge_ids = np.flatnonzero(keep)
    kept = [grasps[i] for i in edge_ids]
    timings["sample"] = time.perf_counter() - started

    started = time.perf_counter()
    scores = np.clip(np.asarray(scorer.score(batch, edge_ids, kept), dtype=np.float64), 0.0, 1.0)
    timings["score"] = time.perf_counter() - started

    detection = Detection(cloud=cloud, batch=batch, grasps=kept, scores=scores, timings=timings)
    detection.selected = select_grasps(detection.scored, config.threshold, config.policy, config.top_k)
    logger.debug(
        f"{scorer.name}: {len(grasps)} edges, {len(kept)} after filters, {len(detection.selected)} selected"
    )
    if not detection.selected:
        logger.warning(f"No grasp scored at least {config.threshold}")
    return detection
