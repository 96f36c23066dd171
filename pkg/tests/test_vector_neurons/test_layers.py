"""
Tests for Vector Neuron layers: closed-form cases and rotation equivariance.
"""

import itertools

import numpy as np
import pytest
import torch

from src.errors import DataError
from src.vector_neurons.layers import VNMaxPool, VNMLP, VNPointNetConv, vn_linear, vn_relu, vn_select
from tests.helpers import random_rotation_matrix


def rotation(seed: int) -> torch.Tensor:
    return torch.from_numpy(random_rotation_matrix(np.random.default_rng(seed)))


def features(*shape: int, seed: int = 0) -> torch.Tensor:
    return torch.randn(*shape, 3, dtype=torch.float64, generator=torch.Generator().manual_seed(seed))


class TestVNLinear:
    def test_identity_weight(self):
        f = features(5, 4)
        torch.testing.assert_close(vn_linear(f, torch.eye(4, dtype=torch.float64)), f, atol=0, rtol=0)

    def test_matches_channel_loop(self):
        f = features(6, 3, seed=1)
        weight = torch.randn(2, 3, dtype=torch.float64, generator=torch.Generator().manual_seed(2))
        expected = torch.zeros(6, 2, 3, dtype=torch.float64)
        for c in range(2):
            for k in range(3):
                expected[:, c, :] += weight[c, k] * f[:, k, :]
        torch.testing.assert_close(vn_linear(f, weight), expected, atol=1e-14, rtol=0)

    def test_wrong_channel_count(self):
        with pytest.raises(DataError):
            vn_linear(features(2, 3), torch.ones(4, 5, dtype=torch.float64))


class TestVNReLU:
    def test_aligned_feature_passes(self):
        k = torch.tensor([[[0.0, 1.0, 2.0]]], dtype=torch.float64)
        q = 3.0 * k
        torch.testing.assert_close(vn_relu(q, k), q, atol=0, rtol=0)

    def test_opposite_feature_vanishes(self):
        k = torch.tensor([[[1.0, -2.0, 0.5]]], dtype=torch.float64)
        torch.testing.assert_close(vn_relu(-k, k), torch.zeros_like(k), atol=1e-15, rtol=0)

    def test_negative_side_loses_direction_component(self):
        k = torch.tensor([[[1.0, 0.0, 0.0]]], dtype=torch.float64)
        q = torch.tensor([[[-2.0, 3.0, 4.0]]], dtype=torch.float64)
        expected = torch.tensor([[[0.0, 3.0, 4.0]]], dtype=torch.float64)
        torch.testing.assert_close(vn_relu(q, k), expected, atol=1e-15, rtol=0)

    def test_orthogonal_feature_passes(self):
        k = torch.tensor([[[0.0, 0.0, 1.0]]], dtype=torch.float64)
        q = torch.tensor([[[1.0, 2.0, 0.0]]], dtype=torch.float64)
        torch.testing.assert_close(vn_relu(q, k), q, atol=0, rtol=0)

    def test_equivariance(self):
        q, k, r = features(20, 6, seed=3), features(20, 6, seed=4), rotation(5)
        torch.testing.assert_close(vn_relu(q @ r, k @ r), vn_relu(q, k) @ r, atol=1e-12, rtol=0)


class TestVNMaxPool:
    def setup_method(self):
        """Setup test fixtures."""
        torch.manual_seed(0)
        self.pool = VNMaxPool(4)

    def test_single_element(self):
        f = features(1, 4, seed=6)
        torch.testing.assert_close(self.pool(f, dim=0), f[0], atol=0, rtol=0)

    def test_selection_oracle(self):
        f = features(5, 2, seed=7)
        directions = features(1, 2, seed=8)
        selected = vn_select(f, directions, dim=0)
        for c in range(2):
            best = max(range(5), key=lambda i: float(f[i, c] @ directions[0, c]))
            torch.testing.assert_close(selected[c], f[best, c], atol=0, rtol=0)

    def test_ties_pick_lowest_index(self):
        f = torch.tensor([[[0.0, 1.0, 1.0]], [[1.0, 0.0, 2.0]], [[0.0, 1.0, 2.0]]], dtype=torch.float64)
        directions = torch.tensor([[[0.0, 0.0, 1.0]]], dtype=torch.float64)
        torch.testing.assert_close(vn_select(f, directions, dim=0), f[1], atol=0, rtol=0)

    def test_exhaustive_small_sets(self):
        """Every non-empty subset of four elements picks the argmax of its own direction."""
        f = features(4, 4, seed=10)
        for size in range(1, 5):
            for subset in itertools.combinations(range(4), size):
                chosen = f[list(subset)]
                directions = self.pool.direction(chosen.mean(dim=0, keepdim=True))
                scores = (chosen * directions).sum(dim=-1)
                expected = chosen[scores.argmax(dim=0), torch.arange(4)]
                torch.testing.assert_close(self.pool(chosen, dim=0), expected, atol=0, rtol=0)

    def test_rotation_equivariance(self):
        f, r = features(9, 4, seed=11), rotation(12)
        with torch.no_grad():
            torch.testing.assert_close(self.pool(f @ r, dim=0), self.pool(f, dim=0) @ r, atol=1e-12, rtol=0)

    def test_pool_segments_matches_per_segment(self):
        f = features(10, 4, seed=13)
        segment = torch.tensor([0, 0, 0, 1, 1, 2, 2, 2, 2, 2])
        with torch.no_grad():
            pooled = self.pool.pool_segments(f, segment, 3)
            for s in range(3):
                torch.testing.assert_close(pooled[s], self.pool(f[segment == s], dim=0), atol=1e-12, rtol=0)

    def test_mask_ignores_padding(self):
        """Padded copies of the last element change neither the mean direction nor the selection."""
        f = features(5, 4, seed=19)
        padded = torch.cat([f, f[-1:].expand(3, 4, 3)]).unsqueeze(0)
        mask = torch.tensor([[True] * 5 + [False] * 3])
        with torch.no_grad():
            torch.testing.assert_close(self.pool(padded, dim=1, mask=mask)[0], self.pool(f, dim=0), atol=1e-12, rtol=0)

    def test_masked_entries_never_selected(self):
        f = torch.tensor([[[[0.0, 0.0, 1.0]], [[0.0, 0.0, 5.0]]]], dtype=torch.float64)
        directions = torch.tensor([[[[0.0, 0.0, 1.0]]]], dtype=torch.float64)
        mask = torch.tensor([[True, False]])
        torch.testing.assert_close(vn_select(f, directions, dim=1, mask=mask), f[:, 0], atol=0, rtol=0)

    def test_empty_set(self):
        with pytest.raises(DataError):
            vn_select(torch.empty(0, 4, 3, dtype=torch.float64), torch.ones(1, 4, 3, dtype=torch.float64), dim=0)
        with pytest.raises(DataError):
            self.pool.pool_segments(torch.empty(0, 4, 3, dtype=torch.float64), torch.empty(0, dtype=torch.long), 1)


class TestVNPointNetConv:
    def setup_method(self):
        """Setup test fixtures."""
        torch.manual_seed(1)
        self.conv = VNPointNetConv(2, 6, 5)
        generator = torch.Generator().manual_seed(14)
        self.positions = torch.randn(7, 3, dtype=torch.float64, generator=generator)
        self.features = features(7, 2, seed=15)
        self.neighbors = torch.tensor([[(i + j) % 7 for j in range(3)] for i in range(7)])

    def test_shape(self):
        out = self.conv(self.features, self.positions, self.neighbors)
        assert out.shape == (7, 5, 3)

    def test_rotation_equivariance(self):
        r = rotation(16)
        with torch.no_grad():
            out = self.conv(self.features, self.positions, self.neighbors)
            rotated = self.conv(self.features @ r, self.positions @ r, self.neighbors)
        torch.testing.assert_close(rotated, out @ r, atol=1e-12, rtol=0)

    def test_wrong_feature_shape(self):
        with pytest.raises(DataError):
            self.conv(features(7, 3), self.positions, self.neighbors)


def test_vn_mlp_equivariance():
    torch.manual_seed(2)
    mlp = VNMLP([3, 8, 4])
    f, r = features(11, 3, seed=17), rotation(18)
    with torch.no_grad():
        torch.testing.assert_close(mlp(f @ r), mlp(f) @ r, atol=1e-12, rtol=0)
    assert (mlp.in_channels, mlp.out_channels) == (3, 4)
