"""
Command implementations behind the CLI.

Each cmd_* function takes a validated RunConfig plus paths, does the work,
writes its artifact (with the config echo and format version) and returns
a result the CLI prints.
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from src.config import RunConfig
from src.detection import Detection, ModelScorer, OracleScorer, RandomEdgeScorer, detect
from src.evaluation import evaluate_methods, summarize, write_report
from src.gnn.checkpoint import load_checkpoint
from src.gnn.train import TrainingResult, train
from src.grasp.serialize import write_grasps
from src.pointcloud.io import read_cloud
from src.scene.dataset import STREAM_DETECT, STREAM_EVAL, LabeledDataset, build_dataset, scene_rng
from src.scene.render import observe
from src.scene.scene import generate_scene, scene_kind_for

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

BENCHMARK_APPROACH_POINTS = (16, 32, 64)
BENCHMARK_EDGES = (500, 1000, 2000)


def cmd_gen_scenes(config: RunConfig, output: PathLike) -> Dict[str, Any]:
    """Generate and write a labeled dataset; returns its scene, edge and positive counts."""
    dataset = build_dataset(config)
    dataset.write(output)
    return {
        "scenes": len(dataset),
        "edges": dataset.edge_count,
        "positives": dataset.positive_count,
        "positive_rate": dataset.positive_rate,
    }


def history_path_for(checkpoint_path: PathLike) -> Path:
    return Path(checkpoint_path).with_suffix(".history.csv")


def cmd_train(
    config: RunConfig,
    dataset_path: PathLike,
    output: PathLike,
    resume: Optional[PathLike] = None,
) -> TrainingResult:
    """
    Train on a dataset file and write the checkpoint plus the per-epoch history CSV.

    When resuming, new epochs are appended to the existing history.
    """
    dataset = LabeledDataset.read(dataset_path)
    resume_checkpoint = load_checkpoint(resume) if resume is not None else None
    result = train(dataset, config, resume=resume_checkpoint, checkpoint_path=output)

    history_path = history_path_for(output)
    history = result.history
    if resume is not None:
        previous = history_path_for(resume)
        if previous.exists():
            history = pd.concat([pd.read_csv(previous), history], ignore_index=True)
    history.to_csv(history_path, index=False)
    logger.info(f"Wrote training history ({len(history)} epochs) to {history_path}")
    return result


def cmd_detect(config: RunConfig, cloud_path: PathLike, checkpoint_path: PathLike, output: PathLike) -> Detection:
    """
    Detect grasps on a cloud file and write the selected ones, best score first.

    An empty selection writes a header-only file.
    """
    cloud = read_cloud(cloud_path)
    scorer = ModelScorer.from_checkpoint(load_checkpoint(checkpoint_path))
    detection = detect(cloud, scorer, config, scene_rng(config.seed, STREAM_DETECT))
    # sorted() is stable, so equal scores keep the selection order
    ranked = sorted(detection.selected, key=lambda s: -s.score)
    write_grasps(output, ranked, config.echo())
    return detection


def cmd_eval(
    config: RunConfig,
    checkpoint_path: Optional[PathLike],
    output: PathLike,
    methods: Sequence[str] = ("model", "random"),
) -> pd.DataFrame:
    """
    Declutter evaluation of the requested methods ("model", "random", "oracle").

    Returns:
        The summary table (one row per method).
    """
    factories = {}
    for method in methods:
        if method == "model":
            if checkpoint_path is None:
                raise ValueError("the model method needs a checkpoint")
            scorer = ModelScorer.from_checkpoint(load_checkpoint(checkpoint_path))
            factories["model"] = lambda scene, rng, scorer=scorer: scorer
        elif method == "random":
            factories["random"] = lambda scene, rng: RandomEdgeScorer(rng)
        elif method == "oracle":
            factories["oracle"] = lambda scene, rng: OracleScorer(
                scene, config.gripper, config.friction_mu, config.retraction
            )
        else:
            raise ValueError(f"unknown evaluation method {method!r}")

    rounds = evaluate_methods(factories, config)
    summary = summarize(rounds)
    write_report(rounds, summary, output, config)
    return summary


def cmd_benchmark(
    config: RunConfig, checkpoint_path: PathLike, output: Optional[PathLike] = None, repeats: int = 3
) -> pd.DataFrame:
    """
    Time sampling and scoring over approach-point counts at 2000 edges and
    over edge caps at 32 approach points, on one generated scene.

    Returns:
        One row per setting with median sample and score seconds.
    """
    scorer = ModelScorer.from_checkpoint(load_checkpoint(checkpoint_path))
    rng = scene_rng(config.seed, STREAM_EVAL)
    scene = generate_scene(
        scene_kind_for(0, config.scene_kind),
        config.object_count,
        rng,
        config.table_z,
        config.workspace_size,
        config.object_mass,
    )
    cloud = observe(scene, config, rng)

    settings = [(m, BENCHMARK_EDGES[-1]) for m in BENCHMARK_APPROACH_POINTS]
    settings += [(BENCHMARK_APPROACH_POINTS[1], e) for e in BENCHMARK_EDGES if e != BENCHMARK_EDGES[-1]]
    rows: List[Dict[str, Any]] = []
    for approach_points, max_edges in settings:
        run_config = config.model_copy(
            update={"detect_approach_points": approach_points, "detect_max_edges": max_edges, "threshold": 0.0}
        )
        samples, scores, edges = [], [], []
        for repeat in range(repeats):
            detection = detect(cloud, scorer, run_config, scene_rng(config.seed, STREAM_DETECT, repeat), prepared=True)
            samples.append(detection.timings.get("sample", 0.0))
            scores.append(detection.timings.get("score", 0.0))
            edges.append(len(detection.grasps))
        rows.append(
            {
                "approach_points": approach_points,
                "max_edges": max_edges,
                "edges_scored": int(np.median(edges)),
                "sample_seconds": float(np.median(samples)),
                "score_seconds": float(np.median(scores)),
            }
        )
        logger.info(f"Benchmark m={approach_points} edges<={max_edges}: {rows[-1]['score_seconds']:.4f}s scoring")

    table = pd.DataFrame(rows)
    if output is not None:
        Path(output).parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(output, index=False)
    return table
