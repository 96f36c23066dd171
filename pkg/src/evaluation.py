"""
Declutter evaluation against the analytic oracle.

Each round generates a fresh scene, then repeatedly observes it, detects a
grasp and executes the best one against the oracle. A successful grasp
removes the grasped primitive; the round ends when the scene is empty, after
two consecutive failures, or when nothing is detected. Every scorer sees the
same scenes and the same sampling stream, so results are paired.
"""

import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Sequence, Union

import numpy as np
import pandas as pd

from src import FORMAT_VERSION
from src.config import RunConfig
from src.detection import Scorer, detect
from src.errors import DataError
from src.scene.dataset import STREAM_DETECT, STREAM_EVAL, scene_rng
from src.scene.oracle import label_grasp
from src.scene.render import observe
from src.scene.scene import Scene, generate_scene, scene_kind_for

logger = logging.getLogger(__name__)

MAX_CONSECUTIVE_FAILURES = 2

# Builds the scorer for one attempt from the current ground-truth scene and the round rng
ScorerFactory = Callable[[Scene, np.random.Generator], Scorer]


@dataclass
class RoundResult:
    method: str
    seed: int
    round: int
    kind: str
    objects: int
    attempts: int
    successes: int
    removed: int

    @property
    def success_rate(self) -> float:
        return self.successes / self.attempts if self.attempts else 0.0


def declutter_round(
    scene: Scene, scorer_factory: ScorerFactory, config: RunConfig, rng: np.random.Generator
) -> Dict[str, int]:
    """
    Run one declutter round; returns attempts, successes and removed counts.

    The scorer is rebuilt from the current scene before every attempt.
    """
    attempts = successes = removed = failures = 0
    while len(scene) and failures < MAX_CONSECUTIVE_FAILURES:
        try:
            cloud = observe(scene, config, rng)
        except DataError as e:
            logger.warning(f"Round ended, scene not observable: {e}")
            break
        detection = detect(cloud, scorer_factory(scene, rng), config, rng, prepared=True)
        if not detection.selected:
            break

        grasp = detection.selected[0].grasp
        label = label_grasp(scene, grasp, config.gripper, config.friction_mu, config.retraction)
        attempts += 1
        if label.success:
            scene = scene.remove_primitive(scene.owning_primitive(grasp.p_c))
            successes += 1
            removed += 1
            failures = 0
        else:
            failures += 1
            logger.debug(f"Grasp failed: {label.failure_reason}")
    return {"attempts": attempts, "successes": successes, "removed": removed}


def evaluate_methods(scorers: Dict[str, ScorerFactory], config: RunConfig) -> pd.DataFrame:
    """
    Run config.rounds declutter rounds per seed for every scorer.

    Seeds are config.seed, config.seed + 1, ... (config.eval_seeds of them).

    Returns:
        One row per (method, seed, round).
    """
    rows: List[RoundResult] = []
    for offset in range(config.eval_seeds):
        seed = config.seed + offset
        for round_index in range(config.rounds):
            kind = scene_kind_for(round_index, config.scene_kind)
            scene = generate_scene(
                kind,
                config.object_count,
                scene_rng(seed, STREAM_EVAL, round_index),
                config.table_z,
                config.workspace_size,
                config.object_mass,
            )
            for method, factory in scorers.items():
                rng = scene_rng(seed, STREAM_DETECT, round_index)
                counts = declutter_round(scene, factory, config, rng)
                result = RoundResult(method=method, seed=seed, round=round_index, kind=kind, objects=len(scene), **counts)
                rows.append(result)
                logger.info(
                    f"[{method}] seed {seed} round {round_index}: {result.successes}/{result.attempts} "
                    f"successes, {result.removed}/{result.objects} removed"
                )
    return pd.DataFrame([asdict(r) for r in rows])


def summarize(rounds: pd.DataFrame) -> pd.DataFrame:
    """
    GSR and DR per method as mean and std (population) over seeds.

    Per seed, GSR = successes / attempts (0 without attempts) and
    DR = removed / objects, both pooled over that seed's rounds.
    """
    per_seed = rounds.groupby(["method", "seed"], sort=False)[["attempts", "successes", "removed", "objects"]].sum()
    per_seed["gsr"] = np.where(per_seed["attempts"] > 0, per_seed["successes"] / per_seed["attempts"].clip(lower=1), 0.0)
    per_seed["dr"] = per_seed["removed"] / per_seed["objects"]
    summary = per_seed.groupby(level="method", sort=False).agg(
        gsr_mean=("gsr", "mean"),
        gsr_std=("gsr", lambda s: float(np.std(s))),
        dr_mean=("dr", "mean"),
        dr_std=("dr", lambda s: float(np.std(s))),
        attempts=("attempts", "sum"),
        successes=("successes", "sum"),
    )
    return summary.reset_index()


def write_report(
    rounds: pd.DataFrame, summary: pd.DataFrame, output: Union[str, Path], config: RunConfig
) -> Dict[str, Any]:
    """Write <output>.rounds.csv, <output>.summary.csv and <output>.json; returns the JSON document."""
    output = Path(output)
    output.parent.mkdir(parents=True, exist_ok=True)
    rounds.to_csv(output.with_suffix(".rounds.csv"), index=False)
    summary.to_csv(output.with_suffix(".summary.csv"), index=False)
    document = {
        "format_version": FORMAT_VERSION,
        "kind": "evaluation",
        "config": config.echo(),
        "summary": summary.to_dict(orient="records"),
    }
    output.with_suffix(".json").write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info(f"Wrote evaluation report to {output.with_suffix('.json')}")
    return document


def format_summary(summary: pd.DataFrame, methods: Sequence[str] = ()) -> str:
    """Human-readable GSR/DR lines, in `methods` order when given."""
    table = summary.set_index("method")
    order = list(methods) or list(table.index)
    lines = []
    for method in order:
        row = table.loc[method]
        lines.append(
            f"{method:>8}: GSR {100 * row.gsr_mean:5.1f} +- {100 * row.gsr_std:4.1f}%  "
            f"DR {100 * row.dr_mean:5.1f} +- {100 * row.dr_std:4.1f}%  ({int(row.successes)}/{int(row.attempts)})"
        )
    return "\n".join(lines)
