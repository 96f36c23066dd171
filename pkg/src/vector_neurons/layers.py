"""
Vector Neuron layers.

Features are (..., C, 3): C channels of 3-vectors; a rotation R acts as
f -> f R on the last axis and every layer here commutes with it.
"""

from typing import Optional

import torch
from torch import nn

from src.errors import DataError
from src.gnn.batching import DTYPE, segment_max, segment_mean

DIRECTION_FLOOR = 1e-9


def vn_linear(features: torch.Tensor, weight: torch.Tensor) -> torch.Tensor:
    """Channel mixing: out[..., c, :] = sum_k weight[c, k] * features[..., k, :]."""
    if features.shape[-2] != weight.shape[1]:
        raise DataError(f"vn_linear expects {weight.shape[1]} channels, got {features.shape[-2]}")
    return torch.einsum("ok,...kd->...od", weight, features)


def vn_relu(features: torch.Tensor, directions: torch.Tensor) -> torch.Tensor:
    """
    Keep q where <q, k> >= 0, otherwise remove its component along k.

    `directions` holds k per channel, same shape as `features`.
    """
    dot = (features * directions).sum(dim=-1, keepdim=True)
    norm = directions.norm(dim=-1, keepdim=True).clamp_min(DIRECTION_FLOOR)
    unit = directions / norm
    projected = features - (features * unit).sum(dim=-1, keepdim=True) * unit
    return torch.where(dot >= 0, features, projected)


def vn_select(
    features: torch.Tensor, directions: torch.Tensor, dim: int, mask: Optional[torch.Tensor] = None
) -> torch.Tensor:
    """
    Per channel, the element along `dim` with the largest <feature, direction>; ties go to the lowest index.

    `directions` must broadcast against `features` with size 1 along `dim`.
    `mask` has the shape of features without the last two axes; False entries
    are never selected.
    """
    if features.shape[dim] == 0:
        raise DataError("vn max pool over an empty set")
    scores = (features * directions).sum(dim=-1)
    if mask is not None:
        scores = scores.masked_fill(~mask.unsqueeze(-1), float("-inf"))
    index = scores.argmax(dim=dim, keepdim=True)
    index = index.unsqueeze(-1).expand(*index.shape, features.shape[-1])
    return features.gather(dim, index).squeeze(dim)


class VNLinear(nn.Module):
    def __init__(self, in_channels: int, out_channels: int):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.weight = nn.Parameter(torch.empty(out_channels, in_channels, dtype=DTYPE))
        nn.init.kaiming_uniform_(self.weight, nonlinearity="relu")

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        return vn_linear(features, self.weight)


class VNReLU(nn.Module):
    """VN nonlinearity with learned per-channel directions k = U f."""

    def __init__(self, channels: int):
        super().__init__()
        self.direction = VNLinear(channels, channels)

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        return vn_relu(features, self.direction(features))


class VNMaxPool(nn.Module):
    """
    Pool a set of VN features by selection along the learned direction d = D mean(f).
    """

    def __init__(self, channels: int):
        super().__init__()
        self.direction = VNLinear(channels, channels)

    def forward(self, features: torch.Tensor, dim: int = 0, mask: Optional[torch.Tensor] = None) -> torch.Tensor:
        """Pool along `dim`; with a mask, the mean and the selection use only its True entries."""
        if mask is None:
            mean = features.mean(dim=dim, keepdim=True)
        else:
            weights = mask.to(features.dtype)[..., None, None]
            mean = (features * weights).sum(dim=dim, keepdim=True) / weights.sum(dim=dim, keepdim=True).clamp_min(1.0)
        return vn_select(features, self.direction(mean), dim, mask)

    def pool_segments(self, features: torch.Tensor, segment: torch.Tensor, count: int) -> torch.Tensor:
        """Pool (P, C, 3) features into (count, C, 3), one selection per segment and channel."""
        if features.shape[0] == 0:
            raise DataError("vn max pool over an empty set")
        directions = self.direction(segment_mean(features, segment, count))
        scores = (features * directions[segment]).sum(dim=-1)
        best = segment_max(scores, segment, count)
        rows = torch.arange(features.shape[0], device=features.device).unsqueeze(1).expand_as(scores)
        candidates = torch.where(scores == best[segment], rows, torch.full_like(rows, features.shape[0]))
        first = candidates.new_full((count, features.shape[1]), features.shape[0])
        first = first.scatter_reduce(0, segment.unsqueeze(1).expand_as(candidates), candidates, reduce="amin")
        channels = torch.arange(features.shape[1], device=features.device)
        return features[first, channels]


class VNMLP(nn.Module):
    """VNLinear followed by VNReLU, once per width step."""

    def __init__(self, widths):
        super().__init__()
        self.widths = list(widths)
        blocks = []
        for c_in, c_out in zip(self.widths[:-1], self.widths[1:]):
            blocks.append(VNLinear(c_in, c_out))
            blocks.append(VNReLU(c_out))
        self.blocks = nn.Sequential(*blocks)

    @property
    def in_channels(self) -> int:
        return self.widths[0]

    @property
    def out_channels(self) -> int:
        return self.widths[-1]

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        return self.blocks(features)


class VNPointNetConv(nn.Module):
    """
    VN analogue of PointNetConv: VN-pooled over j in N(i) of VNMLP([f_j, p_j - p_i]).
    """

    def __init__(self, in_channels: int, hidden: int, out_channels: int):
        super().__init__()
        self.in_channels = in_channels
        self.mlp = VNMLP([in_channels + 1, hidden, out_channels])
        self.pool = VNMaxPool(out_channels)

    @property
    def out_channels(self) -> int:
        return self.mlp.out_channels

    def forward(
        self,
        features: torch.Tensor,
        positions: torch.Tensor,
        neighbors: torch.Tensor,
        mask: Optional[torch.Tensor] = None,
    ) -> torch.Tensor:
        if features.shape[0] != positions.shape[0] or features.shape[1] != self.in_channels:
            raise DataError(
                f"VNPointNetConv expects ({positions.shape[0]}, {self.in_channels}, 3) features, got {tuple(features.shape)}"
            )
        relative = (positions[neighbors] - positions[:, None, :]).unsqueeze(2)
        messages = self.mlp(torch.cat([features[neighbors], relative], dim=2))
        return self.pool(messages, dim=1, mask=mask)


def init_vn(module: nn.Module, generator: Optional[torch.Generator] = None) -> None:
    for layer in module.modules():
        if isinstance(layer, VNLinear):
            nn.init.kaiming_uniform_(layer.weight, nonlinearity="relu", generator=generator)
