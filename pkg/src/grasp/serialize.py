"""
Grasp records: scored grasps as JSON lines.

A grasp file starts with a header line {"format_version", "kind": "grasps",
"config"} followed by one GraspRecord per line. Rotations are stored as unit
quaternions [w, x, y, z] with w >= 0; the frame convention is x = closing
direction, z = approach direction.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field
from scipy.spatial.transform import Rotation

from src import FORMAT_VERSION
from src.errors import DataError
from src.grasp.geometry import EdgeGrasp

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GraspScorePose:
    """An edge grasp with its predicted (or oracle) quality score."""

    grasp: EdgeGrasp
    score: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise DataError(f"grasp score must lie in [0, 1], got {self.score}")


class GraspRecord(BaseModel):
    """One line of a grasp file."""

    center: List[float] = Field(min_length=3, max_length=3)
    quat: List[float] = Field(min_length=4, max_length=4, description="[w, x, y, z], w >= 0")
    delta: float
    approach_index: int
    contact_index: int
    score: float = Field(ge=0.0, le=1.0)
    contact: Optional[List[float]] = Field(default=None, min_length=3, max_length=3)


class GraspFileHeader(BaseModel):
    format_version: int = FORMAT_VERSION
    kind: str = "grasps"
    config: Dict[str, Any] = Field(default_factory=dict)


def rotation_to_quaternion(rotation: np.ndarray) -> np.ndarray:
    """Unit quaternion [w, x, y, z] with w >= 0."""
    x, y, z, w = Rotation.from_matrix(rotation).as_quat()
    quat = np.array([w, x, y, z], dtype=np.float64)
    if quat[0] < 0:
        quat = -quat
    return quat


def quaternion_to_rotation(quat: Iterable[float]) -> np.ndarray:
    w, x, y, z = (float(v) for v in quat)
    return Rotation.from_quat([x, y, z, w]).as_matrix()


def serialize_grasp(scored: GraspScorePose) -> GraspRecord:
    grasp = scored.grasp
    return GraspRecord(
        center=[float(v) for v in grasp.center],
        quat=[float(v) for v in rotation_to_quaternion(grasp.rotation)],
        delta=float(grasp.delta),
        approach_index=int(grasp.approach_index),
        contact_index=int(grasp.contact_index),
        score=float(scored.score),
        contact=[float(v) for v in grasp.p_c],
    )


def deserialize_grasp(record: Union[GraspRecord, Dict[str, Any]]) -> GraspScorePose:
    """
    Rebuild a scored grasp from a record.

    n_c and a_ac are read back from the rotation columns and p_a from
    C + delta * a_ac. Records without a stored contact point get p_c = p_a.
    """
    if not isinstance(record, GraspRecord):
        record = GraspRecord.model_validate(record)
    rotation = quaternion_to_rotation(record.quat)
    center = np.asarray(record.center, dtype=np.float64)
    n_c, a_ac = rotation[:, 0], rotation[:, 2]
    p_a = center + record.delta * a_ac
    if record.contact is not None:
        p_c = np.asarray(record.contact, dtype=np.float64)
    else:
        p_c = p_a.copy()
    grasp = EdgeGrasp(
        approach_index=record.approach_index,
        contact_index=record.contact_index,
        p_a=p_a,
        p_c=p_c,
        n_c=n_c,
        a_ac=a_ac,
        delta=record.delta,
        center=center,
        rotation=rotation,
    )
    return GraspScorePose(grasp=grasp, score=record.score)


def write_grasps(path: Union[str, Path], grasps: Iterable[GraspScorePose], config: Optional[Dict[str, Any]] = None) -> int:
    """Write a grasp file; returns the number of grasps written."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", encoding="utf-8") as handle:
        handle.write(GraspFileHeader(config=config or {}).model_dump_json() + "\n")
        for scored in grasps:
            handle.write(serialize_grasp(scored).model_dump_json() + "\n")
            count += 1
    logger.info(f"Wrote {count} grasps to {path}")
    return count


def read_grasps(path: Union[str, Path]) -> Tuple[GraspFileHeader, List[GraspScorePose]]:
    """
    Read a grasp file written by write_grasps.

    Raises:
        DataError: If the header is missing or the file is not a grasp file.
    """
    lines = [line for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]
    if not lines:
        raise DataError(f"{path}: empty grasp file")
    try:
        header = GraspFileHeader.model_validate(json.loads(lines[0]))
    except (json.JSONDecodeError, ValueError) as e:
        raise DataError(f"{path}: invalid grasp file header: {e}") from e
    if header.kind != "grasps":
        raise DataError(f"{path}: expected kind 'grasps', got {header.kind!r}")
    if header.format_version != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported format version {header.format_version}")
    grasps = [deserialize_grasp(json.loads(line)) for line in lines[1:]]
    return header, grasps
