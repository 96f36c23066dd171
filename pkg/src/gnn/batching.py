"""
Tensor views of local regions for the networks.

Several regions are packed into one RegionBatch: points are concatenated,
neighbor lists are offset into the concatenation, and each edge refers to a
region id and a global point row.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import torch

from src.errors import DataError
from src.grasp.sampler import LocalRegion
from src.pointcloud.cache import GraphCache
from src.pointcloud.neighbors import knn_graph

logger = logging.getLogger(__name__)

DTYPE = torch.float64


@dataclass
class RegionBatch:
    """
    Packed regions.

    positions and normals are (P, 3); neighbors is (P, K) rows into the packed
    points; segment maps each point to its region; edge_region and
    edge_contact give each edge's region id and packed contact row.
    neighbor_mask marks the real entries of neighbors, False on padding.
    """

    positions: torch.Tensor
    normals: torch.Tensor
    neighbors: torch.Tensor
    segment: torch.Tensor
    edge_region: torch.Tensor
    edge_contact: torch.Tensor
    region_count: int
    neighbor_mask: Optional[torch.Tensor] = None

    @property
    def edge_count(self) -> int:
        return int(self.edge_region.shape[0])

    @property
    def point_count(self) -> int:
        return int(self.positions.shape[0])


def region_neighbors(region: LocalRegion, k: int, self_loops: bool = True, cache: Optional[GraphCache] = None) -> np.ndarray:
    """
    KNN lists of a region's points, own index first when self_loops is set.

    The graph of a rotated region equals the graph of the stored one, so
    callers pass the unrotated region here.
    """
    if cache is not None:
        graph = cache.graph_for(region.centered_points, k)
    else:
        graph = knn_graph(region.centered_points, k)
    return graph.with_self() if self_loops else graph.neighbors


def collate(
    items: Sequence[Tuple[LocalRegion, np.ndarray]],
    k: int,
    self_loops: bool = True,
    cache: Optional[GraphCache] = None,
    graphs: Optional[Sequence[np.ndarray]] = None,
) -> RegionBatch:
    """
    Pack (region, contact local indices) pairs into one RegionBatch.

    Args:
        items: Regions with the local indices of the edges to score
        k: KNN size
        self_loops: Include each point in its own neighborhood
        cache: Optional graph cache
        graphs: Precomputed neighbor arrays, one per item (e.g. from the unrotated regions)

    Raises:
        DataError: If no regions are given or a contact index is out of range.
    """
    if not items:
        raise DataError("cannot collate an empty list of regions")

    positions, normals, neighbors, segment, edge_region, edge_contact = [], [], [], [], [], []
    offset = 0
    for region_id, (region, contacts) in enumerate(items):
        n = len(region)
        contacts = np.asarray(contacts, dtype=np.int64)
        if contacts.size and (contacts.min() < 0 or contacts.max() >= n):
            raise DataError(f"contact index out of range for region with {n} points")
        graph = graphs[region_id] if graphs is not None else region_neighbors(region, k, self_loops, cache)

        positions.append(region.centered_points)
        normals.append(region.normals)
        neighbors.append(graph + offset)
        segment.append(np.full(n, region_id, dtype=np.int64))
        edge_region.append(np.full(len(contacts), region_id, dtype=np.int64))
        edge_contact.append(contacts + offset)
        offset += n

    # Short neighbor lists are padded by repeating their last entry and masked out
    width = max(g.shape[1] for g in neighbors)
    padded = [np.pad(g, ((0, 0), (0, width - g.shape[1])), mode="edge") for g in neighbors]
    masks = [np.broadcast_to(np.arange(width) < g.shape[1], (g.shape[0], width)) for g in neighbors]

    return RegionBatch(
        positions=torch.from_numpy(np.concatenate(positions)).to(DTYPE),
        normals=torch.from_numpy(np.concatenate(normals)).to(DTYPE),
        neighbors=torch.from_numpy(np.concatenate(padded)),
        segment=torch.from_numpy(np.concatenate(segment)),
        edge_region=torch.from_numpy(np.concatenate(edge_region)),
        edge_contact=torch.from_numpy(np.concatenate(edge_contact)),
        region_count=len(items),
        neighbor_mask=torch.from_numpy(np.concatenate(masks)),
    )


def segment_max(values: torch.Tensor, segment: torch.Tensor, count: int) -> torch.Tensor:
    """Max over the rows of each segment; values (P, ...), result (count, ...)."""
    index = segment.view(-1, *([1] * (values.dim() - 1))).expand_as(values)
    out = values.new_zeros((count,) + tuple(values.shape[1:]))
    return out.scatter_reduce(0, index, values, reduce="amax", include_self=False)


def segment_mean(values: torch.Tensor, segment: torch.Tensor, count: int) -> torch.Tensor:
    index = segment.view(-1, *([1] * (values.dim() - 1))).expand_as(values)
    out = values.new_zeros((count,) + tuple(values.shape[1:]))
    return out.scatter_reduce(0, index, values, reduce="mean", include_self=False)
