"""
Class-balanced binary cross-entropy.
"""

import torch

PROBABILITY_CLAMP = 1e-7


def balanced_bce_loss(scores: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """
    Mean BCE with each class weighted by batch_size / (2 * class_count).

    Falls back to the unweighted mean when the batch holds a single class.
    Scores are clamped to [1e-7, 1 - 1e-7].
    """
    labels = labels.to(scores.dtype)
    probabilities = scores.clamp(PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP)
    per_edge = -(labels * torch.log(probabilities) + (1.0 - labels) * torch.log1p(-probabilities))

    positives = int(labels.sum().item())
    negatives = labels.numel() - positives
    if positives == 0 or negatives == 0:
        return per_edge.mean()

    size = labels.numel()
    weights = torch.where(labels > 0.5, size / (2.0 * positives), size / (2.0 * negatives))
    return (weights * per_edge).mean()


def accuracy(scores: torch.Tensor, labels: torch.Tensor, threshold: float = 0.5) -> float:
    if labels.numel() == 0:
        return 0.0
    predictions = scores >= threshold
    return float((predictions == (labels > 0.5)).to(torch.float64).mean().item())
