"""
Point-cloud file formats: ASCII PLY (x y z [nx ny nz]) and CSV (x,y,z[,nx,ny,nz]).

The camera viewpoint travels in PLY files as a "comment viewpoint x y z" header
line. Units are meters.
"""

import logging
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import pandas as pd

from src.errors import DataError
from src.pointcloud.base import PointCloud

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _normalized_or_none(values: np.ndarray) -> Optional[np.ndarray]:
    lengths = np.linalg.norm(values, axis=1, keepdims=True)
    if np.any(lengths == 0):
        logger.warning("Dropping normals: file contains zero-length normals")
        return None
    return values / lengths


def write_ply(cloud: PointCloud, path: PathLike) -> None:
    """Write an ASCII PLY file with full double precision."""
    lines: List[str] = ["ply", "format ascii 1.0"]
    if cloud.viewpoint is not None:
        lines.append("comment viewpoint " + " ".join(repr(float(v)) for v in cloud.viewpoint))
    lines.append(f"element vertex {len(cloud)}")
    lines += [f"property double {axis}" for axis in ("x", "y", "z")]
    if cloud.normals is not None:
        lines += [f"property double {axis}" for axis in ("nx", "ny", "nz")]
    lines.append("end_header")

    columns = cloud.points if cloud.normals is None else np.hstack([cloud.points, cloud.normals])
    for row in columns:
        lines.append(" ".join(repr(float(v)) for v in row))

    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_ply(path: PathLike) -> PointCloud:
    """
    Read an ASCII PLY point cloud.

    Raises:
        DataError: For binary PLY, missing x/y/z properties or truncated bodies.
    """
    text = Path(path).read_text(encoding="ascii").splitlines()
    if not text or text[0].strip() != "ply":
        raise DataError(f"{path}: not a PLY file")

    properties: List[str] = []
    vertex_count = None
    viewpoint = None
    in_vertex = False
    body_start = None
    for line_number, line in enumerate(text[1:], start=1):
        tokens = line.split()
        if not tokens:
            continue
        if tokens[0] == "format" and tokens[1] != "ascii":
            raise DataError(f"{path}: only ASCII PLY is supported, got {tokens[1]}")
        if tokens[0] == "comment" and len(tokens) == 5 and tokens[1] == "viewpoint":
            viewpoint = np.array([float(t) for t in tokens[2:5]])
        elif tokens[0] == "element":
            in_vertex = tokens[1] == "vertex"
            if in_vertex:
                vertex_count = int(tokens[2])
        elif tokens[0] == "property" and in_vertex:
            properties.append(tokens[-1])
        elif tokens[0] == "end_header":
            body_start = line_number + 1
            break

    if body_start is None or vertex_count is None:
        raise DataError(f"{path}: incomplete PLY header")
    if not {"x", "y", "z"} <= set(properties):
        raise DataError(f"{path}: PLY vertices need x, y, z properties")

    rows = [line.split() for line in text[body_start:body_start + vertex_count] if line.strip()]
    if len(rows) != vertex_count:
        raise DataError(f"{path}: expected {vertex_count} vertices, found {len(rows)}")
    values = np.array(rows, dtype=np.float64).reshape(vertex_count, len(properties))
    column = {name: i for i, name in enumerate(properties)}

    points = values[:, [column["x"], column["y"], column["z"]]]
    normals = None
    if {"nx", "ny", "nz"} <= set(properties):
        normals = _normalized_or_none(values[:, [column["nx"], column["ny"], column["nz"]]])
    return PointCloud(points, normals, viewpoint)


def read_csv(path: PathLike, viewpoint: Optional[np.ndarray] = None) -> PointCloud:
    """
    Read x,y,z (optionally nx,ny,nz) rows; a non-numeric first row is treated as a header.
    """
    frame = pd.read_csv(path, header=None, comment="#")
    if not all(pd.api.types.is_numeric_dtype(dtype) for dtype in frame.dtypes):
        frame = pd.read_csv(path, header=0, comment="#")
    values = frame.to_numpy(dtype=np.float64)
    if values.ndim != 2 or values.shape[1] not in (3, 6):
        raise DataError(f"{path}: expected 3 or 6 columns, got {values.shape}")
    normals = _normalized_or_none(values[:, 3:6]) if values.shape[1] == 6 else None
    return PointCloud(values[:, :3], normals, viewpoint)


def read_cloud(path: PathLike) -> PointCloud:
    """Dispatch on file suffix (.ply or .csv)."""
    suffix = Path(path).suffix.lower()
    if suffix == ".ply":
        return read_ply(path)
    if suffix in (".csv", ".txt"):
        return read_csv(path)
    raise DataError(f"unsupported point cloud format: {suffix}")
