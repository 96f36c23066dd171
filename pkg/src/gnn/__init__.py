"""
Scalar edge grasp network and its training machinery.

Components:
- batching: packing local regions into tensors, segment pooling
- layers: MLP and PointNetConv
- model: EdgeGraspNet (psi, omega, edge features, classifier)
- loss / optim: balanced BCE, Adam and the plateau schedule
- augment: rotation augmentation of centered regions
- checkpoint: JSON checkpoints for both model kinds
- train: the epoch loop with validation, resume and history
"""

from src.gnn.augment import augment_rotation
from src.gnn.batching import RegionBatch, collate, region_neighbors, segment_max, segment_mean
from src.gnn.checkpoint import Checkpoint, build_model, load_checkpoint, model_from_checkpoint, save_checkpoint
from src.gnn.layers import MLP, PointNetConv
from src.gnn.loss import accuracy, balanced_bce_loss
from src.gnn.model import EdgeGraspNet, parameter_count
from src.gnn.optim import backward, build_optimizer, build_scheduler
from src.gnn.train import TrainingResult, train

__all__ = [
    "augment_rotation",
    "RegionBatch",
    "collate",
    "region_neighbors",
    "segment_max",
    "segment_mean",
    "Checkpoint",
    "build_model",
    "load_checkpoint",
    "model_from_checkpoint",
    "save_checkpoint",
    "MLP",
    "PointNetConv",
    "accuracy",
    "balanced_bce_loss",
    "EdgeGraspNet",
    "parameter_count",
    "backward",
    "build_optimizer",
    "build_scheduler",
    "TrainingResult",
    "train",
]
