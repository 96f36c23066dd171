"""
Convex intersection tests on support functions (GJK).

Any object with a `center` and a `support(direction)` method works: scene
primitives and gripper boxes alike. Touching shapes do not count as
intersecting.
"""

import logging
from typing import List, Protocol, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)

MAX_ITERATIONS = 64
SEPARATION_EPS = 1e-12


class Convex(Protocol):
    center: np.ndarray

    def support(self, direction: np.ndarray) -> np.ndarray: ...


def _minkowski_support(a: Convex, b: Convex, direction: np.ndarray) -> np.ndarray:
    return a.support(direction) - b.support(-direction)


def _triple(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """(a x b) x c"""
    return np.cross(np.cross(a, b), c)


def _line(simplex: List[np.ndarray]) -> Tuple[List[np.ndarray], np.ndarray]:
    b, a = simplex
    ab, ao = b - a, -a
    if ab @ ao > 0:
        return [b, a], _triple(ab, ao, ab)
    return [a], ao


def _triangle(simplex: List[np.ndarray]) -> Tuple[List[np.ndarray], np.ndarray]:
    c, b, a = simplex
    ab, ac, ao = b - a, c - a, -a
    abc = np.cross(ab, ac)
    if np.cross(abc, ac) @ ao > 0:
        if ac @ ao > 0:
            return [c, a], _triple(ac, ao, ac)
        return _line([b, a])
    if np.cross(ab, abc) @ ao > 0:
        return _line([b, a])
    if abc @ ao > 0:
        return [c, b, a], abc
    return [b, c, a], -abc


def _tetrahedron(simplex: List[np.ndarray]) -> Tuple[List[np.ndarray], np.ndarray, bool]:
    d, c, b, a = simplex
    ab, ac, ad, ao = b - a, c - a, d - a, -a
    if np.cross(ab, ac) @ ao > 0:
        return (*_triangle([c, b, a]), False)
    if np.cross(ac, ad) @ ao > 0:
        return (*_triangle([d, c, a]), False)
    if np.cross(ad, ab) @ ao > 0:
        return (*_triangle([b, d, a]), False)
    return simplex, np.zeros(3), True


def intersects(a: Convex, b: Convex) -> bool:
    """
    True iff the convex shapes a and b overlap with positive depth.

    Runs GJK on the Minkowski difference; a run that does not converge within
    MAX_ITERATIONS is reported as intersecting.
    """
    direction = np.asarray(a.center, dtype=np.float64) - np.asarray(b.center, dtype=np.float64)
    if not direction.any():
        direction = np.array([1.0, 0.0, 0.0])
    point = _minkowski_support(a, b, direction)
    simplex = [point]
    direction = -point

    for _ in range(MAX_ITERATIONS):
        if np.linalg.norm(direction) < SEPARATION_EPS:
            return True
        point = _minkowski_support(a, b, direction)
        if point @ direction <= SEPARATION_EPS * np.linalg.norm(direction):
            return False
        simplex.append(point)
        if len(simplex) == 2:
            simplex, direction = _line(simplex)
        elif len(simplex) == 3:
            simplex, direction = _triangle(simplex)
        else:
            simplex, direction, enclosed = _tetrahedron(simplex)
            if enclosed:
                return True
    logger.debug("GJK did not converge; reporting an intersection")
    return True


def may_intersect(a, b) -> bool:
    """Bounding-sphere pre-check; False means a and b certainly do not touch."""
    distance = np.linalg.norm(np.asarray(a.center) - np.asarray(b.center))
    return bool(distance <= a.bounding_radius + b.bounding_radius)


def intersects_any(shape, others: Sequence) -> List[int]:
    """Indices of `others` that intersect `shape`."""
    return [i for i, other in enumerate(others) if may_intersect(shape, other) and intersects(shape, other)]


def below_plane(shape: Convex, point: np.ndarray, normal: np.ndarray) -> bool:
    """True iff part of `shape` reaches strictly below the plane through `point` with upward `normal`."""
    lowest = shape.support(-normal)
    return bool((lowest - point) @ normal < 0)
