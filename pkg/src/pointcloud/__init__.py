"""
pointcloud module - ingestion, downsampling, normals and neighborhood queries.

Main components:
- PointCloud / KnnGraph: immutable data types
- knn_graph, radius_crop, farthest_point_sampling: exact neighborhood queries
- voxel_downsample, add_noise, filter_workspace: cloud filters
- estimate_normals, orient_normals, prepare_cloud: PCA normals oriented toward the camera
- read_ply / write_ply / read_csv: file formats
- GraphCache: LRU cache of KNN graphs
"""

from .base import KnnGraph, PointCloud, as_points, random_rotation
from .cache import GraphCache
from .filters import add_noise, filter_workspace, voxel_downsample
from .io import read_cloud, read_csv, read_ply, write_ply
from .neighbors import farthest_point_sampling, knn_graph, radius_crop
from .normals import estimate_normals, orient_normals, prepare_cloud

__all__ = [
    "PointCloud",
    "KnnGraph",
    "as_points",
    "random_rotation",
    "GraphCache",
    "add_noise",
    "filter_workspace",
    "voxel_downsample",
    "read_cloud",
    "read_csv",
    "read_ply",
    "write_ply",
    "farthest_point_sampling",
    "knn_graph",
    "radius_crop",
    "estimate_normals",
    "orient_normals",
    "prepare_cloud",
]
