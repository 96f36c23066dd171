"""
Gradients, Adam and the plateau learning-rate schedule.
"""

from typing import Dict

import torch
from torch import nn
from torch.optim.lr_scheduler import ReduceLROnPlateau

ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8


def backward(model: nn.Module, loss: torch.Tensor) -> Dict[str, torch.Tensor]:
    """Gradients of `loss` w.r.t. every trainable parameter, by name (zeros for unused ones)."""
    named = [(name, p) for name, p in model.named_parameters() if p.requires_grad]
    grads = torch.autograd.grad(loss, [p for _, p in named], allow_unused=True)
    return {
        name: grad if grad is not None else torch.zeros_like(p)
        for (name, p), grad in zip(named, grads)
    }


def build_optimizer(model: nn.Module, lr: float) -> torch.optim.Adam:
    return torch.optim.Adam(model.parameters(), lr=lr, betas=ADAM_BETAS, eps=ADAM_EPS)


def build_scheduler(optimizer: torch.optim.Optimizer, factor: float, patience: int, min_delta: float) -> ReduceLROnPlateau:
    """Multiply the LR by `factor` once validation loss has not improved by min_delta for `patience` epochs."""
    return ReduceLROnPlateau(
        optimizer, mode="min", factor=factor, patience=patience, threshold=min_delta, threshold_mode="abs"
    )


def current_lr(optimizer: torch.optim.Optimizer) -> float:
    return float(optimizer.param_groups[0]["lr"])
