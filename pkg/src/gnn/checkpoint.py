"""
Checkpoint container shared by both model kinds.

A checkpoint is one JSON document. Tensors are stored as base64 of their
little-endian bytes with dtype and shape; optimizer and scheduler state dicts
are stored with the same tensor encoding, so a resumed run continues exactly.
"""

import base64
import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import torch
from pydantic import BaseModel, Field

from src import FORMAT_VERSION
from src.config import ModelKind, NetworkConfig
from src.errors import DataError
from src.gnn.model import EdgeGraspNet

logger = logging.getLogger(__name__)

TENSOR_TAG = "__tensor__"


class TensorBlob(BaseModel):
    dtype: str
    shape: list
    data: str


class TrainingState(BaseModel):
    """State needed to continue training after the last completed epoch."""

    weights: Dict[str, TensorBlob]
    optimizer: Dict[str, Any]
    scheduler: Dict[str, Any]
    best_epoch: int = 0
    bad_epochs: int = 0


class Checkpoint(BaseModel):
    format_version: int = FORMAT_VERSION
    kind: str = "checkpoint"
    model_kind: ModelKind
    network: NetworkConfig
    k: int
    self_loops: bool = True
    seed: int
    epoch: int = Field(default=0, description="Completed epochs")
    best_val_loss: Optional[float] = None
    lr: float
    config: Dict[str, Any] = Field(default_factory=dict)
    weights: Dict[str, TensorBlob] = Field(description="Best-validation weights")
    training: Optional[TrainingState] = None


def encode_tensor(tensor: torch.Tensor) -> TensorBlob:
    array = tensor.detach().cpu().numpy()
    little = array.astype(array.dtype.newbyteorder("<"), copy=False)
    return TensorBlob(
        dtype=array.dtype.name,
        shape=list(array.shape),
        data=base64.b64encode(np.ascontiguousarray(little).tobytes()).decode("ascii"),
    )


def decode_tensor(blob: Union[TensorBlob, Dict[str, Any]]) -> torch.Tensor:
    if not isinstance(blob, TensorBlob):
        blob = TensorBlob.model_validate(blob)
    dtype = np.dtype(blob.dtype).newbyteorder("<")
    array = np.frombuffer(base64.b64decode(blob.data), dtype=dtype).reshape(blob.shape)
    return torch.from_numpy(array.astype(array.dtype.newbyteorder("="), copy=True))


def encode_state(value: Any) -> Any:
    """Recursively encode tensors inside a state dict."""
    if isinstance(value, torch.Tensor):
        return {TENSOR_TAG: encode_tensor(value).model_dump()}
    if isinstance(value, dict):
        return {str(key): encode_state(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [encode_state(item) for item in value]
    return value


def decode_state(value: Any, int_keys: bool = False) -> Any:
    if isinstance(value, dict):
        if TENSOR_TAG in value:
            return decode_tensor(value[TENSOR_TAG])
        return {
            (int(key) if int_keys and key.lstrip("-").isdigit() else key): decode_state(item, int_keys)
            for key, item in value.items()
        }
    if isinstance(value, list):
        return [decode_state(item, int_keys) for item in value]
    return value


def encode_weights(model: torch.nn.Module) -> Dict[str, TensorBlob]:
    return {name: encode_tensor(tensor) for name, tensor in model.state_dict().items()}


def load_weights(model: torch.nn.Module, weights: Dict[str, TensorBlob]) -> None:
    state = {name: decode_tensor(blob) for name, blob in weights.items()}
    missing, unexpected = model.load_state_dict(state, strict=False)
    if missing or unexpected:
        raise DataError(f"checkpoint does not match the model: missing {missing}, unexpected {unexpected}")


def optimizer_state(optimizer: torch.optim.Optimizer) -> Dict[str, Any]:
    return encode_state(optimizer.state_dict())


def restore_optimizer(optimizer: torch.optim.Optimizer, state: Dict[str, Any]) -> None:
    decoded = decode_state(state, int_keys=True)
    # Only the per-parameter "state" mapping is keyed by integers
    decoded["param_groups"] = decode_state(state["param_groups"])
    optimizer.load_state_dict(decoded)


def build_model(kind: ModelKind, network: NetworkConfig, generator: Optional[torch.Generator] = None) -> torch.nn.Module:
    """Instantiate the network of the given kind."""
    if kind == "scalar":
        return EdgeGraspNet(network, generator)
    if kind == "vector_neuron":
        from src.vector_neurons.model import VNEdgeGraspNet

        return VNEdgeGraspNet(network, generator)
    raise DataError(f"unknown model kind {kind!r}")


def save_checkpoint(checkpoint: Checkpoint, path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(checkpoint.model_dump(mode="python")) + "\n", encoding="utf-8")
    logger.info(f"Saved {checkpoint.model_kind} checkpoint at epoch {checkpoint.epoch} to {path}")


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    """
    Raises:
        DataError: If the file is not a readable checkpoint of this format version.
    """
    try:
        document = json.loads(Path(path).read_text(encoding="utf-8"))
        checkpoint = Checkpoint.model_validate(document)
    except (OSError, json.JSONDecodeError, ValueError) as e:
        raise DataError(f"cannot read checkpoint {path}: {e}") from e
    if checkpoint.kind != "checkpoint" or checkpoint.format_version != FORMAT_VERSION:
        raise DataError(f"{path}: not a version {FORMAT_VERSION} checkpoint")
    return checkpoint


def model_from_checkpoint(checkpoint: Checkpoint) -> torch.nn.Module:
    model = build_model(checkpoint.model_kind, checkpoint.network)
    load_weights(model, checkpoint.weights)
    model.eval()
    return model
