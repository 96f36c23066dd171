"""
Rotation-invariant edge grasp network built from Vector Neuron layers.

The VN psi/omega stacks mirror the scalar model. The per-edge feature f_ac
(channels of g_a and f_c) is made invariant by f_ac T_ac^T, where T_ac is a
3-channel VN feature computed from f_ac, and then scored by the scalar
classifier head.
"""

import logging
from typing import Optional

import torch
from torch import nn

from src.config import NetworkConfig
from src.errors import DataError
from src.gnn.batching import RegionBatch
from src.gnn.layers import init_kaiming
from src.gnn.model import build_classifier, check_finite
from src.vector_neurons.layers import VNLinear, VNMaxPool, VNMLP, VNPointNetConv, VNReLU, init_vn

logger = logging.getLogger(__name__)

INPUT_CHANNELS = 2


class InvarianceTransform(nn.Module):
    """Equivariant T-net: VN features (E, C, 3) -> T_ac (E, 3, 3)."""

    def __init__(self, channels: int, hidden: int):
        super().__init__()
        self.layers = nn.Sequential(VNLinear(channels, hidden), VNReLU(hidden), VNLinear(hidden, 3))

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        return self.layers(features)


def invariant_edge_feature(edge_features: torch.Tensor, transform: torch.Tensor) -> torch.Tensor:
    """flatten(f_ac T_ac^T): (E, C, 3) x (E, 3, 3) -> (E, 3C)."""
    if edge_features.shape[0] != transform.shape[0] or transform.shape[-2:] != (3, 3):
        raise DataError(f"cannot apply transforms {tuple(transform.shape)} to features {tuple(edge_features.shape)}")
    return torch.bmm(edge_features, transform.transpose(1, 2)).flatten(start_dim=1)


class VNEdgeGraspNet(nn.Module):
    """
    Vector Neuron grasp quality network; scores are invariant to rotations of the region.

    Args:
        network: Layer widths (vn_psi_widths, vn_omega_widths, vn_tnet_width, classifier_widths)
        generator: Torch generator for the initial weights
    """

    kind = "vector_neuron"

    def __init__(self, network: Optional[NetworkConfig] = None, generator: Optional[torch.Generator] = None):
        super().__init__()
        self.network = network or NetworkConfig()

        layers = []
        in_channels = INPUT_CHANNELS
        for hidden, out in self.network.vn_psi_widths:
            layers.append(VNPointNetConv(in_channels, hidden, out))
            in_channels = out
        self.psi = nn.ModuleList(layers)
        point_channels = in_channels

        omega1, omega2 = self.network.vn_omega_widths
        self.omega_mlp1 = VNMLP([point_channels, omega1, omega1])
        self.omega_pool1 = VNMaxPool(omega1)
        concat_channels = point_channels if self.network.omega_concat == "raw" else omega1
        self.omega_mlp2 = VNMLP([omega1 + concat_channels, omega2, omega2])
        self.omega_pool2 = VNMaxPool(omega2)

        edge_channels = omega2 + point_channels
        self.tnet = InvarianceTransform(edge_channels, self.network.vn_tnet_width)
        self.classifier = build_classifier(3 * edge_channels, self.network.classifier_widths)

        init_vn(self, generator)
        init_kaiming(self.classifier, generator)

    @property
    def edge_channels(self) -> int:
        return self.omega_mlp2.out_channels + self.psi[-1].out_channels

    def stack_psi(self, batch: RegionBatch) -> torch.Tensor:
        features = torch.stack([batch.positions, batch.normals], dim=1)
        for layer in self.psi:
            features = layer(features, batch.positions, batch.neighbors, batch.neighbor_mask)
        return check_finite("point features", features)

    def global_feature(self, features: torch.Tensor, batch: RegionBatch) -> torch.Tensor:
        hidden = self.omega_mlp1(features)
        h = self.omega_pool1.pool_segments(hidden, batch.segment, batch.region_count)
        paired = features if self.network.omega_concat == "raw" else hidden
        combined = torch.cat([h[batch.segment], paired], dim=1)
        g = self.omega_pool2.pool_segments(self.omega_mlp2(combined), batch.segment, batch.region_count)
        return check_finite("global features", g)

    def edge_features(self, features: torch.Tensor, g: torch.Tensor, batch: RegionBatch) -> torch.Tensor:
        """Equivariant f_ac, shape (E, edge_channels, 3)."""
        if batch.edge_count and int(batch.edge_contact.max()) >= features.shape[0]:
            raise DataError("edge contact index out of range")
        return torch.cat([g[batch.edge_region], features[batch.edge_contact]], dim=1)

    def invariant_features(self, edge_features: torch.Tensor) -> torch.Tensor:
        return invariant_edge_feature(edge_features, self.tnet(edge_features))

    def classify(self, invariant: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(self.classifier(invariant)).squeeze(-1)

    def forward(self, batch: RegionBatch) -> torch.Tensor:
        features = self.stack_psi(batch)
        g = self.global_feature(features, batch)
        scores = self.classify(self.invariant_features(self.edge_features(features, g, batch)))
        return check_finite("scores", scores)
