"""
Tests for analytic primitives: ray casting, signed distance, support and records.
"""

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from src.scene.primitives import Box, Cylinder, Sphere, primitive_from_record


def rays(origin, direction):
    return np.atleast_2d(np.asarray(origin, dtype=float)), np.atleast_2d(np.asarray(direction, dtype=float))


class TestRayIntersect:
    def test_sphere_hit(self):
        sphere = Sphere(center=np.array([0.0, 0.0, 0.1]), radius=0.05)
        t, normals = sphere.ray_intersect(*rays([0, 0, 1], [0, 0, -1]))
        assert t[0] == pytest.approx(0.85)
        np.testing.assert_allclose(normals[0], [0, 0, 1], atol=1e-12)

    def test_sphere_miss_and_inside(self):
        sphere = Sphere(center=np.zeros(3), radius=0.05)
        t, _ = sphere.ray_intersect(np.array([[1.0, 0.1, 0.0], [0.0, 0.0, 0.0]]), np.array([[-1.0, 0, 0], [1.0, 0, 0]]))
        assert np.all(np.isinf(t))

    def test_box_faces(self):
        box = Box(center=np.zeros(3), half_extents=np.array([0.1, 0.2, 0.3]))
        t, normals = box.ray_intersect(*rays([1, 0, 0], [-1, 0, 0]))
        assert t[0] == pytest.approx(0.9)
        np.testing.assert_allclose(normals[0], [1, 0, 0])
        t, normals = box.ray_intersect(*rays([0, 0, -1], [0, 0, 1]))
        assert t[0] == pytest.approx(0.7)
        np.testing.assert_allclose(normals[0], [0, 0, -1])

    def test_rotated_box(self):
        rotation = Rotation.from_euler("z", 90, degrees=True).as_matrix()
        box = Box(center=np.zeros(3), rotation=rotation, half_extents=np.array([0.1, 0.2, 0.3]))
        t, normals = box.ray_intersect(*rays([1, 0, 0], [-1, 0, 0]))
        assert t[0] == pytest.approx(0.8)
        np.testing.assert_allclose(normals[0], [1, 0, 0], atol=1e-12)

    def test_box_parallel_ray_outside_slab(self):
        box = Box(center=np.zeros(3), half_extents=np.array([0.1, 0.1, 0.1]))
        t, _ = box.ray_intersect(*rays([1, 0.5, 0], [-1, 0, 0]))
        assert np.isinf(t[0])

    def test_cylinder_side_and_cap(self):
        cylinder = Cylinder(center=np.zeros(3), radius=0.2, half_height=0.3)
        t, normals = cylinder.ray_intersect(*rays([1, 0, 0], [-1, 0, 0]))
        assert t[0] == pytest.approx(0.8)
        np.testing.assert_allclose(normals[0], [1, 0, 0])
        t, normals = cylinder.ray_intersect(*rays([0.1, 0, 1], [0, 0, -1]))
        assert t[0] == pytest.approx(0.7)
        np.testing.assert_allclose(normals[0], [0, 0, 1])
        t, _ = cylinder.ray_intersect(*rays([0.3, 0, 1], [0, 0, -1]))
        assert np.isinf(t[0])

    @pytest.mark.parametrize(
        "shape",
        [
            Sphere(center=np.array([0.1, 0.0, 0.05]), radius=0.04),
            Box(center=np.array([0.0, 0.1, 0.05]), half_extents=np.array([0.02, 0.03, 0.04])),
            Cylinder(center=np.array([0.05, 0.05, 0.05]), radius=0.03, half_height=0.05),
        ],
    )
    def test_hits_lie_on_surface_with_outward_normals(self, shape, rng):
        shape = shape.moved(shape.center, Rotation.random(random_state=1).as_matrix())
        origins = shape.center + rng.normal(size=(200, 3)) * 0.01 + np.array([0.0, 0.0, 0.5])
        targets = shape.center + rng.uniform(-0.02, 0.02, size=(200, 3))
        directions = targets - origins
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        t, normals = shape.ray_intersect(origins, directions)
        hit = np.isfinite(t)
        assert hit.mean() > 0.9
        points = origins[hit] + t[hit, None] * directions[hit]
        np.testing.assert_allclose(shape.signed_distance(points), 0.0, atol=1e-9)
        np.testing.assert_allclose(np.linalg.norm(normals[hit], axis=1), 1.0, atol=1e-9)
        assert np.all(np.einsum("ij,ij->i", normals[hit], directions[hit]) <= 1e-12)
        outside = points + 1e-6 * normals[hit]
        assert np.all(shape.signed_distance(outside) > 0)


class TestQueries:
    def test_signed_distance(self):
        box = Box(center=np.zeros(3), half_extents=np.array([0.1, 0.1, 0.1]))
        np.testing.assert_allclose(
            box.signed_distance(np.array([[0.0, 0, 0], [0.2, 0, 0], [0.2, 0.2, 0.1]])),
            [-0.1, 0.1, np.sqrt(0.02)],
        )
        cylinder = Cylinder(center=np.zeros(3), radius=0.1, half_height=0.2)
        np.testing.assert_allclose(cylinder.signed_distance(np.array([[0.0, 0, 0], [0.0, 0, 0.5], [0.4, 0, 0]])), [-0.1, 0.3, 0.3])

    def test_support(self):
        box = Box(center=np.array([1.0, 0, 0]), half_extents=np.array([0.1, 0.2, 0.3]))
        np.testing.assert_allclose(box.support(np.array([1.0, -1.0, 1.0])), [1.1, -0.2, 0.3])
        sphere = Sphere(center=np.zeros(3), radius=2.0)
        np.testing.assert_allclose(sphere.support(np.array([0.0, 3.0, 4.0])), [0.0, 1.2, 1.6])
        cylinder = Cylinder(center=np.zeros(3), radius=0.1, half_height=0.2)
        np.testing.assert_allclose(cylinder.support(np.array([1.0, 0.0, -1.0])), [0.1, 0.0, -0.2])

    def test_height_range(self):
        rotation = Rotation.from_euler("x", 90, degrees=True).as_matrix()
        cylinder = Cylinder(center=np.array([0.0, 0.0, 0.1]), rotation=rotation, radius=0.03, half_height=0.08)
        assert cylinder.lowest_z() == pytest.approx(0.07)
        assert cylinder.highest_z() == pytest.approx(0.13)

    def test_transform_composes(self):
        rotation = Rotation.from_euler("z", 30, degrees=True).as_matrix()
        box = Box(center=np.array([0.1, 0, 0]), half_extents=np.array([0.01, 0.02, 0.03]))
        moved = box.transform(rotation, np.array([0.0, 0.0, 0.2]))
        point = np.array([[0.11, 0.0, 0.0]])
        np.testing.assert_allclose(moved.signed_distance(point @ rotation.T + [0.0, 0.0, 0.2]), box.signed_distance(point), atol=1e-12)


@pytest.mark.parametrize(
    "shape",
    [
        Sphere(center=np.array([0.1, 0.2, 0.3]), radius=0.04),
        Box(center=np.zeros(3), rotation=Rotation.from_euler("y", 20, degrees=True).as_matrix(), half_extents=np.array([0.01, 0.02, 0.03])),
        Cylinder(center=np.array([0.0, 0.0, 0.05]), radius=0.02, half_height=0.05),
    ],
)
def test_record_restores_shape(shape):
    restored = primitive_from_record(shape.to_record().model_dump())
    assert type(restored) is type(shape)
    assert restored.size == pytest.approx(shape.size)
    np.testing.assert_allclose(restored.center, shape.center)
    np.testing.assert_allclose(restored.rotation, shape.rotation)
