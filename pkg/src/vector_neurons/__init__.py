"""
Vector Neuron variant of the edge grasp network.

Components:
- layers: vn_linear, vn_relu, VN max pooling and the VN PointNetConv
- model: VNEdgeGraspNet with the equivariant-to-invariant edge transform
"""

from src.vector_neurons.layers import (
    VNLinear,
    VNMaxPool,
    VNMLP,
    VNPointNetConv,
    VNReLU,
    vn_linear,
    vn_relu,
    vn_select,
)
from src.vector_neurons.model import InvarianceTransform, VNEdgeGraspNet, invariant_edge_feature

__all__ = [
    "VNLinear",
    "VNMaxPool",
    "VNMLP",
    "VNPointNetConv",
    "VNReLU",
    "vn_linear",
    "vn_relu",
    "vn_select",
    "InvarianceTransform",
    "VNEdgeGraspNet",
    "invariant_edge_feature",
]
