"""
Caching layer for KNN graphs.

Training visits the same local regions every epoch; their graphs are rotation
invariant, so a graph computed once for the stored region serves every
augmented copy. Entries live in a bounded LRU map guarded by a lock.
"""

import hashlib
import threading
from typing import Optional

import numpy as np
from cachetools import LRUCache

from src.pointcloud.base import KnnGraph
from src.pointcloud.neighbors import knn_graph


class GraphCache:
    """
    Thread-safe LRU cache of KNN graphs keyed by point coordinates and k.
    """

    def __init__(self, maxsize: int = 4096):
        """
        Initialize the GraphCache.

        Args:
            maxsize: Maximum number of graphs kept (default: 4096)
        """
        self.maxsize = maxsize
        self._cache: LRUCache = LRUCache(maxsize=maxsize)
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def _make_key(self, points: np.ndarray, k: int) -> str:
        """
        Create a cache key from the raw coordinate bytes using MD5 hashing.

        Returns:
            Cache key in format "k:n:points_hash"
        """
        data = np.ascontiguousarray(points, dtype=np.float64)
        digest = hashlib.md5(data.tobytes()).hexdigest()
        return f"{k}:{data.shape[0]}:{digest}"

    def get(self, points: np.ndarray, k: int) -> Optional[KnnGraph]:
        key = self._make_key(points, k)
        with self._lock:
            graph = self._cache.get(key)
            if graph is None:
                self.misses += 1
            else:
                self.hits += 1
            return graph

    def set(self, points: np.ndarray, k: int, graph: KnnGraph) -> None:
        key = self._make_key(points, k)
        with self._lock:
            self._cache[key] = graph

    def graph_for(self, points: np.ndarray, k: int) -> KnnGraph:
        """Return the cached graph, computing and storing it on a miss."""
        graph = self.get(points, k)
        if graph is None:
            graph = knn_graph(points, k)
            self.set(points, k, graph)
        return graph

    def clear(self) -> None:
        with self._lock:
            self._cache.clear()
            self.hits = 0
            self.misses = 0

    def __len__(self) -> int:
        with self._lock:
            return len(self._cache)
