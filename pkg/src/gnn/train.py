"""
Minibatch training of edge grasp networks on labeled datasets.

Each epoch shuffles the training regions with a generator derived from
(seed, epoch), so a resumed run draws the same batches and rotations as an
uninterrupted one. The checkpoint keeps the best-validation weights plus the
latest weights, optimizer and scheduler state.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import torch
from torch import nn

from src.config import RunConfig
from src.errors import DataError, NumericError
from src.gnn.augment import augment_rotation
from src.gnn.batching import collate, region_neighbors
from src.gnn.checkpoint import (
    Checkpoint,
    TrainingState,
    build_model,
    decode_state,
    encode_state,
    encode_weights,
    load_weights,
    optimizer_state,
    restore_optimizer,
    save_checkpoint,
)
from src.gnn.loss import accuracy, balanced_bce_loss
from src.gnn.optim import build_optimizer, build_scheduler, current_lr
from src.pointcloud.base import random_rotation
from src.pointcloud.cache import GraphCache
from src.scene.dataset import STREAM_TRAIN, LabeledDataset, LabeledRegion, scene_rng

logger = logging.getLogger(__name__)

HISTORY_COLUMNS = ["epoch", "train_loss", "val_loss", "train_accuracy", "val_accuracy", "lr"]


@dataclass
class TrainingResult:
    checkpoint: Checkpoint
    history: pd.DataFrame


def make_generator(seed: int) -> torch.Generator:
    generator = torch.Generator()
    generator.manual_seed(seed)
    return generator


def check_labels(examples: Sequence[LabeledRegion]) -> None:
    if not examples:
        raise DataError("empty dataset: no training regions")
    labels = np.concatenate([e.labels for e in examples])
    if labels.size == 0:
        raise DataError("empty dataset: no labeled edges")
    if labels.min() == labels.max():
        raise DataError("training needs both positive and negative labels")


def score_examples(
    model: nn.Module,
    examples: Sequence[LabeledRegion],
    graphs: Sequence[np.ndarray],
    batch_size: int,
    k: int = 16,
) -> torch.Tensor:
    """Scores of every edge of `examples`, in order, without gradients."""
    if not examples:
        return torch.empty(0, dtype=torch.float64)
    model.eval()
    scores = []
    with torch.no_grad():
        for start in range(0, len(examples), batch_size):
            chunk = examples[start : start + batch_size]
            batch = collate(
                [(e.region, e.contacts) for e in chunk], k=k, graphs=graphs[start : start + batch_size]
            )
            scores.append(model(batch))
    return torch.cat(scores)


def evaluate(
    model: nn.Module, examples: Sequence[LabeledRegion], graphs: Sequence[np.ndarray], batch_size: int, k: int = 16
) -> Tuple[float, float]:
    """(balanced BCE, accuracy) over all edges of `examples`."""
    scores = score_examples(model, examples, graphs, batch_size, k)
    labels = torch.from_numpy(np.concatenate([e.labels for e in examples])).to(torch.float64)
    return float(balanced_bce_loss(scores, labels).item()), accuracy(scores, labels)


def epoch_rotations(
    examples: Sequence[LabeledRegion], mode: str, rng: np.random.Generator
) -> List[Optional[np.ndarray]]:
    """Rotation per example for one epoch: shared per scene, per region, or none."""
    if mode == "none":
        return [None] * len(examples)
    if mode == "region":
        return [random_rotation(rng) for _ in examples]
    per_scene: Dict[int, np.ndarray] = {}
    for scene_index in sorted({e.scene_index for e in examples}):
        per_scene[scene_index] = random_rotation(rng)
    return [per_scene[e.scene_index] for e in examples]


def train_epoch(
    model: nn.Module,
    optimizer: torch.optim.Optimizer,
    examples: Sequence[LabeledRegion],
    graphs: Sequence[np.ndarray],
    config: RunConfig,
    rng: np.random.Generator,
    augment: str,
) -> Tuple[float, float]:
    """One pass over the training regions; returns edge-weighted mean loss and accuracy."""
    model.train()
    order = rng.permutation(len(examples))
    rotations = epoch_rotations(examples, augment, rng)

    total_loss, total_correct, total_edges = 0.0, 0.0, 0
    for start in range(0, len(order), config.batch_size):
        chosen = order[start : start + config.batch_size]
        items = []
        for i in chosen:
            region = examples[i].region
            if rotations[i] is not None:
                region = augment_rotation(region, rotation=rotations[i])
            items.append((region, examples[i].contacts))
        batch = collate(items, k=config.k, graphs=[graphs[i] for i in chosen])
        labels = torch.from_numpy(np.concatenate([examples[i].labels for i in chosen])).to(torch.float64)
        if labels.numel() == 0:
            continue

        scores = model(batch)
        loss = balanced_bce_loss(scores, labels)
        if not torch.isfinite(loss):
            raise NumericError(f"non-finite training loss {loss.item()}")
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()

        edges = labels.numel()
        total_loss += float(loss.item()) * edges
        total_correct += accuracy(scores.detach(), labels) * edges
        total_edges += edges
    if total_edges == 0:
        raise DataError("no labeled edges in the training split")
    return total_loss / total_edges, total_correct / total_edges


def train(
    dataset: LabeledDataset,
    config: RunConfig,
    resume: Optional[Checkpoint] = None,
    checkpoint_path: Optional[Union[str, Path]] = None,
) -> TrainingResult:
    """
    Train the configured model kind on the dataset's train split.

    Args:
        dataset: Labeled dataset (val split used for model selection and the LR schedule)
        config: Run configuration
        resume: Checkpoint to continue from; its epoch counter, optimizer and scheduler carry on
        checkpoint_path: Written after every epoch when given

    Returns:
        TrainingResult: Final checkpoint (best-validation weights) and the per-epoch history.

    Raises:
        DataError: If the train split is empty or holds a single label.
        NumericError: If a loss or activation becomes NaN or infinite.
    """
    torch.use_deterministic_algorithms(True)
    train_examples = dataset.examples("train")
    val_examples = dataset.examples("val")
    check_labels(train_examples)
    if not val_examples:
        logger.warning("Dataset has no validation scenes; using training loss for model selection")

    model_kind = resume.model_kind if resume is not None else config.model
    network = resume.network if resume is not None else config.network
    self_loops = network.self_loops
    model = build_model(model_kind, network, make_generator(config.seed))
    optimizer = build_optimizer(model, config.lr)
    scheduler = build_scheduler(optimizer, config.plateau_factor, config.plateau_patience, config.min_delta)
    # Centered regions make translation augmentation a no-op for the VN model
    augment = config.augment if model_kind == "scalar" else "none"

    start_epoch = 1
    best_val_loss = math.inf
    best_epoch = 0
    best_weights = encode_weights(model)
    if resume is not None:
        if resume.training is None:
            raise DataError("checkpoint has no training state to resume from")
        load_weights(model, resume.training.weights)
        restore_optimizer(optimizer, resume.training.optimizer)
        scheduler.load_state_dict(decode_state(resume.training.scheduler))
        start_epoch = resume.epoch + 1
        best_val_loss = math.inf if resume.best_val_loss is None else resume.best_val_loss
        best_epoch = resume.training.best_epoch
        best_weights = resume.weights
        logger.info(f"Resuming {model_kind} training at epoch {start_epoch}")

    cache = GraphCache()
    train_graphs = [region_neighbors(e.region, config.k, self_loops, cache) for e in train_examples]
    val_graphs = [region_neighbors(e.region, config.k, self_loops, cache) for e in val_examples]

    rows = []
    checkpoint = None
    for epoch in range(start_epoch, config.epochs + 1):
        rng = scene_rng(config.seed, STREAM_TRAIN, epoch)
        train_loss, train_acc = train_epoch(model, optimizer, train_examples, train_graphs, config, rng, augment)
        if val_examples:
            val_loss, val_acc = evaluate(model, val_examples, val_graphs, config.batch_size, config.k)
        else:
            val_loss, val_acc = train_loss, train_acc
        if not math.isfinite(val_loss):
            raise NumericError(f"non-finite validation loss at epoch {epoch}")

        scheduler.step(val_loss)
        if val_loss < best_val_loss:
            best_val_loss, best_epoch = val_loss, epoch
            best_weights = encode_weights(model)

        lr = current_lr(optimizer)
        rows.append([epoch, train_loss, val_loss, train_acc, val_acc, lr])
        logger.info(
            f"Epoch {epoch}/{config.epochs}: train {train_loss:.5f} ({train_acc:.3f}), "
            f"val {val_loss:.5f} ({val_acc:.3f}), lr {lr:.2e}"
        )

        checkpoint = Checkpoint(
            model_kind=model_kind,
            network=network,
            k=config.k,
            self_loops=self_loops,
            seed=config.seed,
            epoch=epoch,
            best_val_loss=best_val_loss,
            lr=lr,
            config=config.echo(),
            weights=best_weights,
            training=TrainingState(
                weights=encode_weights(model),
                optimizer=optimizer_state(optimizer),
                scheduler=encode_state(scheduler.state_dict()),
                best_epoch=best_epoch,
                bad_epochs=int(scheduler.num_bad_epochs),
            ),
        )
        if checkpoint_path is not None:
            save_checkpoint(checkpoint, checkpoint_path)

    if checkpoint is None:
        if resume is None:
            raise DataError(f"nothing to train: epochs={config.epochs}")
        logger.warning(f"Checkpoint already at epoch {resume.epoch}; no epochs left to train")
        checkpoint = resume

    logger.info(f"Training finished: best val loss {best_val_loss:.5f} at epoch {best_epoch}")
    return TrainingResult(checkpoint=checkpoint, history=pd.DataFrame(rows, columns=HISTORY_COLUMNS))
