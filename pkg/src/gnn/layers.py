"""
Building blocks of the scalar network: MLPs and the PointNetConv layer.
"""

from typing import Optional, Sequence

import torch
from torch import nn

from src.errors import DataError
from src.gnn.batching import DTYPE


class MLP(nn.Module):
    """
    Stack of Linear layers with ReLU after every layer but (optionally) the last.

    Args:
        widths: [in, hidden..., out]
        final_activation: Apply ReLU after the last layer too
    """

    def __init__(self, widths: Sequence[int], final_activation: bool = True):
        super().__init__()
        if len(widths) < 2:
            raise ValueError("an MLP needs at least input and output widths")
        self.widths = list(widths)
        self.final_activation = final_activation
        self.layers = nn.ModuleList(
            nn.Linear(w_in, w_out, dtype=DTYPE) for w_in, w_out in zip(self.widths[:-1], self.widths[1:])
        )

    @property
    def in_features(self) -> int:
        return self.widths[0]

    @property
    def out_features(self) -> int:
        return self.widths[-1]

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[-1] != self.in_features:
            raise DataError(f"MLP expects {self.in_features} input features, got {x.shape[-1]}")
        last = len(self.layers) - 1
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < last or self.final_activation:
                x = torch.relu(x)
        return x


class PointNetConv(nn.Module):
    """
    f_i' = max over j in N(i) of MLP(f_j, p_j - p_i), with MLP = Linear-ReLU-Linear-ReLU.

    Neighbor lists are passed in; with self loops they already contain i.
    """

    def __init__(self, in_features: int, hidden: int, out_features: int):
        super().__init__()
        self.in_features = in_features
        self.mlp = MLP([in_features + 3, hidden, out_features])

    @property
    def out_features(self) -> int:
        return self.mlp.out_features

    def messages(self, features: torch.Tensor, positions: torch.Tensor, neighbors: torch.Tensor) -> torch.Tensor:
        """Per-(i, j) MLP outputs, shape (P, K, out)."""
        relative = positions[neighbors] - positions[:, None, :]
        return self.mlp(torch.cat([features[neighbors], relative], dim=-1))

    def forward(self, features: torch.Tensor, positions: torch.Tensor, neighbors: torch.Tensor) -> torch.Tensor:
        if features.shape[0] != positions.shape[0]:
            raise DataError(f"{features.shape[0]} feature rows for {positions.shape[0]} points")
        if features.shape[1] != self.in_features:
            raise DataError(f"PointNetConv expects {self.in_features} features, got {features.shape[1]}")
        return self.messages(features, positions, neighbors).amax(dim=1)


def init_kaiming(module: nn.Module, generator: Optional[torch.Generator] = None) -> None:
    """Kaiming-uniform (fan-in, ReLU) weights and zero biases for every Linear in `module`."""
    for layer in module.modules():
        if isinstance(layer, nn.Linear):
            nn.init.kaiming_uniform_(layer.weight, nonlinearity="relu", generator=generator)
            if layer.bias is not None:
                nn.init.zeros_(layer.bias)
