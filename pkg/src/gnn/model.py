"""
Scalar edge grasp network.

psi: three PointNetConv layers over one KNN graph of the centered region,
input features (centered position, normal).
omega: h = maxpool(MLP1(F)); g_a = maxpool(MLP2([h, f])) for every point feature f.
Edge feature: [g_a, f_c]; classifier: four Linear layers, sigmoid output.
"""

import logging
from typing import Optional

import torch
from torch import nn

from src.config import NetworkConfig
from src.errors import DataError, NumericError
from src.gnn.batching import RegionBatch, segment_max
from src.gnn.layers import MLP, PointNetConv, init_kaiming

logger = logging.getLogger(__name__)

INPUT_FEATURES = 6


def check_finite(name: str, tensor: torch.Tensor) -> torch.Tensor:
    if not torch.isfinite(tensor).all():
        raise NumericError(f"non-finite values in {name}")
    return tensor


def build_classifier(in_features: int, widths) -> MLP:
    return MLP([in_features, *widths, 1], final_activation=False)


class EdgeGraspNet(nn.Module):
    """
    Scalar-feature grasp quality network.

    Args:
        network: Layer widths and wiring options
        generator: Torch generator for the initial weights
    """

    kind = "scalar"

    def __init__(self, network: Optional[NetworkConfig] = None, generator: Optional[torch.Generator] = None):
        super().__init__()
        self.network = network or NetworkConfig()
        widths = self.network.psi_widths

        layers = []
        in_features = INPUT_FEATURES
        for hidden, out in widths:
            layers.append(PointNetConv(in_features, hidden, out))
            in_features = out
        self.psi = nn.ModuleList(layers)
        point_features = in_features

        omega1, omega2 = self.network.omega_widths
        self.omega_mlp1 = MLP([point_features, omega1, omega1])
        concat_width = point_features if self.network.omega_concat == "raw" else omega1
        self.omega_mlp2 = MLP([omega1 + concat_width, omega2, omega2])

        self.classifier = build_classifier(omega2 + point_features, self.network.classifier_widths)
        init_kaiming(self, generator)

    @property
    def point_features(self) -> int:
        return self.psi[-1].out_features

    @property
    def global_features(self) -> int:
        return self.omega_mlp2.out_features

    def stack_psi(self, batch: RegionBatch) -> torch.Tensor:
        features = torch.cat([batch.positions, batch.normals], dim=1)
        for layer in self.psi:
            features = layer(features, batch.positions, batch.neighbors)
        return check_finite("point features", features)

    def global_feature(self, features: torch.Tensor, batch: RegionBatch) -> torch.Tensor:
        """g_a per region, shape (regions, omega2)."""
        if features.shape[0] == 0:
            raise DataError("global feature of an empty region")
        hidden = self.omega_mlp1(features)
        h = segment_max(hidden, batch.segment, batch.region_count)
        paired = features if self.network.omega_concat == "raw" else hidden
        combined = torch.cat([h[batch.segment], paired], dim=1)
        g = segment_max(self.omega_mlp2(combined), batch.segment, batch.region_count)
        return check_finite("global features", g)

    def edge_features(self, features: torch.Tensor, g: torch.Tensor, batch: RegionBatch) -> torch.Tensor:
        if batch.edge_count and int(batch.edge_contact.max()) >= features.shape[0]:
            raise DataError("edge contact index out of range")
        return torch.cat([g[batch.edge_region], features[batch.edge_contact]], dim=1)

    def classify(self, edge_features: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(self.classifier(edge_features)).squeeze(-1)

    def forward(self, batch: RegionBatch) -> torch.Tensor:
        """Scores in [0, 1], one per edge of the batch."""
        features = self.stack_psi(batch)
        g = self.global_feature(features, batch)
        scores = self.classify(self.edge_features(features, g, batch))
        return check_finite("scores", scores)


def parameter_count(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters())
