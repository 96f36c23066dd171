"""
Configuration for the Edge Grasp Network pipeline.

RunConfig is a pydantic-settings model: defaults below, overridden by
EDGEGRASP_* environment variables (and a .env file), then by a key=value config
file, then by command-line flags. Every artifact embeds RunConfig.echo().
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from dotenv import load_dotenv
from pydantic import BaseModel, Field, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

# Load environment variables from .env file
load_dotenv()


class GripperSpec(BaseModel):
    """Parallel-jaw gripper dimensions in meters."""

    width: float = Field(default=0.08, gt=0, description="Aperture G_w, finger-to-finger open width")
    depth: float = Field(default=0.05, gt=0, description="Depth G_d, palm to fingertip along the approach axis")
    finger_thickness: float = Field(default=0.01, gt=0, description="Finger box thickness along the closing axis")
    palm_halfwidth: float = Field(default=0.05, gt=0, description="Palm half extent along the closing axis")

    @property
    def half_width(self) -> float:
        return 0.5 * self.width


class NetworkConfig(BaseModel):
    """Layer widths of the scalar and Vector Neuron models."""

    psi_widths: List[List[int]] = Field(
        default=[[64, 64], [128, 128], [256, 256]],
        description="Hidden/output width of the 2-layer MLP of each PointNetConv layer",
    )
    omega_widths: List[int] = Field(default=[512, 512], description="Output widths of the two global-feature MLPs")
    classifier_widths: List[int] = Field(default=[256, 128, 64], description="Hidden widths of the 4-layer classifier")
    vn_psi_widths: List[List[int]] = Field(default=[[64, 64], [128, 128], [256, 256]])
    vn_omega_widths: List[int] = Field(default=[256, 256])
    vn_tnet_width: int = Field(default=64, ge=1)
    omega_concat: Literal["raw", "mlp1"] = Field(
        default="raw", description="Concatenate the first-level global feature with raw point features or with MLP1 output"
    )
    self_loops: bool = Field(default=True, description="Include i itself in the max over N(i)")

    @model_validator(mode="after")
    def _check_widths(self) -> "NetworkConfig":
        for name in ("psi_widths", "vn_psi_widths"):
            layers = getattr(self, name)
            if len(layers) != 3 or any(len(pair) != 2 for pair in layers):
                raise ValueError(f"{name} must list three [hidden, out] pairs")
        for name in ("omega_widths", "vn_omega_widths"):
            if len(getattr(self, name)) != 2:
                raise ValueError(f"{name} must have two entries")
        if len(self.classifier_widths) != 3:
            raise ValueError("classifier_widths must have three hidden widths")
        all_widths = [w for pair in self.psi_widths + self.vn_psi_widths for w in pair]
        all_widths += self.omega_widths + self.vn_omega_widths + self.classifier_widths
        if any(w < 1 for w in all_widths):
            raise ValueError("layer widths must be positive")
        return self


ModelKind = Literal["scalar", "vector_neuron"]


class RunConfig(BaseSettings):
    """
    Complete configuration of a run.

    Defaults follow the published training protocol (Adam at 1e-4, LR halved
    after a 6-epoch plateau, batches of 32 regions, 32 approach points and
    2000 edges per training scene, 64/4000 at detection time).
    """

    model_config = SettingsConfigDict(
        env_prefix="EDGEGRASP_",
        env_nested_delimiter="__",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    seed: int = Field(default=0, description="Master seed; every command is deterministic under it")
    gripper: GripperSpec = Field(default_factory=GripperSpec)

    # Point cloud preprocessing
    voxel_size: float = Field(default=0.004, gt=0, description="Voxel edge in meters")
    k: int = Field(default=16, ge=1, description="KNN graph size for PointNetConv")
    normal_k: int = Field(default=16, ge=2, description="Neighbors used for PCA normals")
    normals_first: bool = Field(default=False, description="Estimate normals before downsampling")

    # Grasp sampling
    approach_points: int = Field(default=32, ge=1, description="Approach points per training scene")
    max_edges: int = Field(default=2000, ge=1, description="Edge cap per training scene")
    approach_strategy: Literal["fps", "uniform"] = "fps"
    detect_approach_points: int = Field(default=64, ge=1)
    detect_max_edges: int = Field(default=4000, ge=1)
    detect_strategy: Literal["fps", "uniform"] = "uniform"
    delta_check: bool = Field(default=True, description="Reject edges with delta outside [0, G_d]")
    cloud_collision_check: bool = Field(default=False, description="Drop grasps whose gripper boxes contain cloud points")
    approach_max_angle_deg: Optional[float] = Field(default=None, gt=0, le=180)
    preferred_approach: List[float] = Field(default=[0.0, 0.0, -1.0])

    # Model and training
    model: ModelKind = "scalar"
    network: NetworkConfig = Field(default_factory=NetworkConfig)
    lr: float = Field(default=1e-4, gt=0)
    batch_size: int = Field(default=32, ge=1, description="Regions per SGD step")
    epochs: int = Field(default=150, ge=1)
    plateau_patience: int = Field(default=6, ge=0)
    plateau_factor: float = Field(default=0.5, gt=0, lt=1)
    min_delta: float = Field(default=1e-4, ge=0)
    augment: Literal["scene", "region", "none"] = Field(
        default="scene", description="Rotation augmentation for the scalar model"
    )
    val_fraction: float = Field(default=0.15, ge=0, lt=1)

    # Selection
    threshold: float = Field(default=0.9, ge=0)
    policy: Literal["highest_z", "top_k"] = "highest_z"
    top_k: int = Field(default=10, ge=1)

    # Scenes, rendering, oracle
    scenes: int = Field(default=20, ge=1)
    scene_kind: Literal["packed", "pile", "mixed"] = "mixed"
    min_objects: int = Field(default=1, ge=1)
    max_objects: int = Field(default=5, ge=1)
    object_count: int = Field(default=5, ge=1, description="Objects per evaluation round")
    rounds: int = Field(default=10, ge=1)
    eval_seeds: int = Field(default=1, ge=1, description="Seeds the evaluation is repeated over")
    friction_mu: float = Field(default=0.75, gt=0)
    object_mass: float = Field(default=0.5, gt=0, description="Recorded in scene metadata, unused by the static oracle")
    noise_sigma: float = Field(default=0.001, ge=0)
    table_z: float = 0.0
    workspace_size: float = Field(default=0.30, gt=0)
    camera_resolution: int = Field(default=120, ge=2)
    camera_fov_deg: float = Field(default=60.0, gt=0, lt=180)
    camera_distance_min: float = Field(default=0.5, gt=0)
    camera_distance_max: float = Field(default=0.8, gt=0)
    camera_elevation_min_deg: float = Field(default=20.0, ge=0, le=90)
    camera_elevation_max_deg: float = Field(default=80.0, ge=0, le=90)
    pregrasp_offset: Optional[float] = Field(default=None, gt=0, description="Retraction of the pregrasp pose, G_d when unset")

    workers: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check_ranges(self) -> "RunConfig":
        if self.min_objects > self.max_objects:
            raise ValueError("min_objects must not exceed max_objects")
        if self.camera_distance_min > self.camera_distance_max:
            raise ValueError("camera_distance_min must not exceed camera_distance_max")
        if self.camera_elevation_min_deg > self.camera_elevation_max_deg:
            raise ValueError("camera_elevation_min_deg must not exceed camera_elevation_max_deg")
        if len(self.preferred_approach) != 3:
            raise ValueError("preferred_approach must be a 3-vector")
        return self

    @property
    def retraction(self) -> float:
        return self.gripper.depth if self.pregrasp_offset is None else self.pregrasp_offset

    def echo(self) -> Dict[str, Any]:
        """JSON-able copy of every field, embedded verbatim into outputs."""
        return self.model_dump(mode="json")


def parse_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Parse a key=value config file into RunConfig keyword arguments.

    Keys may use dashes and dotted nesting ("gripper.width = 0.085"); values
    are decoded as JSON when possible, otherwise kept as strings.

    Raises:
        ValueError: On malformed lines or unknown keys.
    """
    values: Dict[str, Any] = {}
    text = Path(path).read_text(encoding="utf-8")
    for line_number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{line_number}: expected key=value, got {raw_line!r}")
        key, raw_value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        try:
            value: Any = json.loads(raw_value)
        except json.JSONDecodeError:
            value = raw_value

        head, _, tail = key.partition(".")
        if head not in RunConfig.model_fields:
            raise ValueError(f"{path}:{line_number}: unknown config key {key!r}")
        if tail:
            values.setdefault(head, {})[tail] = value
        else:
            values[head] = value
    return values


def get_settings(config_file: Optional[Union[str, Path]] = None, **overrides: Any) -> RunConfig:
    """
    Factory function to create a RunConfig.

    Args:
        config_file: Optional key=value file applied over environment defaults
        **overrides: Explicit values (command-line flags); None values are ignored

    Returns:
        RunConfig: Validated configuration.
    """
    values: Dict[str, Any] = {}
    if config_file is not None:
        values.update(parse_config_file(config_file))
    for key, value in overrides.items():
        if value is None:
            continue
        if isinstance(value, dict) and isinstance(values.get(key), dict):
            values[key] = {**values[key], **value}
        else:
            values[key] = value
    return RunConfig(**values)
