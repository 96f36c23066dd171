"""
Tests for scene containers and packed/pile scene generation.
"""

import itertools

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from src.errors import DataError, PlacementError
from src.scene.collision import intersects
from src.scene.primitives import Box, Sphere
from src.scene.scene import Scene, drop_height, generate_scene, scene_kind_for


def two_spheres() -> Scene:
    return Scene(
        primitives=(
            Sphere(center=np.array([0.1, 0.1, 0.03]), radius=0.03),
            Sphere(center=np.array([0.2, 0.1, 0.02]), radius=0.02),
        )
    )


class TestScene:
    def test_ray_cast_picks_nearest_owner(self):
        scene = two_spheres()
        origins = np.array([[0.1, 0.1, 1.0], [0.2, 0.1, 1.0], [0.0, 0.25, 1.0]])
        distances, normals, owners = scene.ray_cast(origins, np.tile([0.0, 0.0, -1.0], (3, 1)))
        np.testing.assert_allclose(distances[:2], [0.94, 0.96])
        assert list(owners) == [0, 1, -1]
        assert np.isinf(distances[2])
        np.testing.assert_allclose(normals[0], [0, 0, 1], atol=1e-12)

    def test_signed_distance_is_union(self):
        scene = two_spheres()
        np.testing.assert_allclose(scene.signed_distance(np.array([[0.1, 0.1, 0.1], [0.2, 0.1, 0.02]])), [0.04, -0.02])
        assert np.isinf(Scene(primitives=()).signed_distance(np.zeros((1, 3)))[0])

    def test_owner_and_removal(self):
        scene = two_spheres()
        assert scene.owning_primitive(np.array([0.2, 0.1, 0.04])) == 1
        remaining = scene.remove_primitive(0)
        assert len(remaining) == 1
        assert remaining.primitives[0] is scene.primitives[1]
        with pytest.raises(DataError):
            scene.remove_primitive(2)
        with pytest.raises(DataError):
            Scene(primitives=()).owning_primitive(np.zeros(3))

    def test_transform_carries_table(self):
        rotation = Rotation.from_euler("x", 90, degrees=True).as_matrix()
        moved = two_spheres().transform(rotation, np.array([0.0, 0.0, 1.0]))
        np.testing.assert_allclose(moved.table_normal, [0.0, -1.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(moved.table_point, [0.0, 0.0, 1.0])
        np.testing.assert_allclose(moved.primitives[0].center, rotation @ [0.1, 0.1, 0.03] + [0, 0, 1])
        assert np.all(moved.workspace_lower <= moved.workspace_upper)

    def test_record_round_trip(self):
        scene = generate_scene("pile", 3, np.random.default_rng(0))
        restored = Scene.from_record(scene.to_record())
        assert restored.kind == "pile"
        points = np.random.default_rng(1).uniform(0.0, 0.3, size=(50, 3))
        np.testing.assert_allclose(restored.signed_distance(points), scene.signed_distance(points), atol=1e-12)


class TestGenerateScene:
    @pytest.mark.parametrize("seed", range(5))
    def test_packed_objects_stand_on_table(self, seed):
        scene = generate_scene("packed", 4, np.random.default_rng(seed))
        assert len(scene) == 4
        for primitive in scene.primitives:
            assert primitive.lowest_z() == pytest.approx(0.0, abs=1e-9)
            assert np.all(primitive.center[:2] >= 0.04 - 1e-12)
            assert np.all(primitive.center[:2] <= 0.26 + 1e-12)
        for a, b in itertools.combinations(scene.primitives, 2):
            assert not intersects(a, b)

    @pytest.mark.parametrize("seed", range(5))
    def test_pile_objects_do_not_overlap(self, seed):
        scene = generate_scene("pile", 4, np.random.default_rng(seed))
        for primitive in scene.primitives:
            assert primitive.lowest_z() >= -1e-9
            assert primitive.highest_z() <= 0.30
        for a, b in itertools.combinations(scene.primitives, 2):
            assert not intersects(a, b)

    def test_same_seed_same_scene(self):
        first = generate_scene("pile", 3, np.random.default_rng(42)).to_record()
        second = generate_scene("pile", 3, np.random.default_rng(42)).to_record()
        assert first == second

    def test_table_height(self):
        scene = generate_scene("packed", 2, np.random.default_rng(3), table_z=0.05)
        assert scene.table_z == 0.05
        assert all(p.lowest_z() == pytest.approx(0.05, abs=1e-9) for p in scene.primitives)

    def test_invalid_arguments(self):
        with pytest.raises(DataError):
            generate_scene("packed", 0, np.random.default_rng(0))
        with pytest.raises(DataError, match="unknown scene kind"):
            generate_scene("heap", 2, np.random.default_rng(0))

    def test_crowded_workspace_gives_up(self):
        """The placeable area is 1 mm wide, so a second object can never fit."""
        with pytest.raises(PlacementError):
            generate_scene("packed", 2, np.random.default_rng(0), workspace_size=0.081)


class TestDropHeight:
    def test_sphere_lands_on_sphere(self):
        base = Sphere(center=np.array([0.1, 0.1, 0.03]), radius=0.03)
        falling = Sphere(center=np.array([0.1, 0.1, 0.0]), radius=0.02)
        assert drop_height(falling, [base], 0.0) == pytest.approx(0.08, abs=2e-5)

    def test_free_spot_rests_on_table(self):
        base = Box(center=np.array([0.05, 0.05, 0.02]), half_extents=np.full(3, 0.02))
        falling = Sphere(center=np.array([0.2, 0.2, 0.5]), radius=0.02)
        assert drop_height(falling, [base], 0.0) == pytest.approx(0.02)


def test_mixed_kind_alternates():
    assert [scene_kind_for(i, "mixed") for i in range(4)] == ["packed", "pile", "packed", "pile"]
    assert scene_kind_for(3, "packed") == "packed"
