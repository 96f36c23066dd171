"""
Long-running end-to-end checks: exact invariance of the Vector Neuron model,
layer equivariance over many rotations, full gradient checks, bulk frame
geometry, overfitting a small dataset, held-out loss under rotation, trained
versus random-edge declutter success, inference time scaling and
byte-identical CLI runs.

Run with `pytest -m slow`.
"""

import hashlib
import json
from dataclasses import replace

import numpy as np
import pytest
import torch
from click.testing import CliRunner

from src.cli import cli
from src.commands import cmd_benchmark, cmd_eval, cmd_gen_scenes, cmd_train
from src.config import GripperSpec, NetworkConfig
from src.detection import ModelScorer
from src.evaluation import evaluate_methods, summarize
from src.gnn.augment import augment_rotation
from src.gnn.batching import collate, region_neighbors
from src.gnn.checkpoint import build_model, load_weights
from src.gnn.loss import balanced_bce_loss
from src.gnn.model import EdgeGraspNet
from src.gnn.optim import backward
from src.gnn.train import evaluate, make_generator, train
from src.grasp.geometry import FLIP_ABOUT_APPROACH, edge_frames
from src.pointcloud.base import random_rotation
from src.pointcloud.io import write_ply
from src.scene.dataset import LabeledDataset, build_dataset
from src.scene.oracle import label_grasp
from src.scene.scene import Scene
from src.vector_neurons.layers import VNMaxPool, VNPointNetConv, VNReLU, vn_linear
from src.vector_neurons.model import VNEdgeGraspNet
from tests.helpers import random_region, small_network, sphere_region, synthetic_dataset, tiny_config
from tests.test_scene.test_oracle import BALL, GRIPPER, ball_grasp

pytestmark = pytest.mark.slow

MEDIUM_NETWORK = NetworkConfig(
    psi_widths=[[32, 32], [32, 32], [32, 32]],
    omega_widths=[32, 32],
    classifier_widths=[32, 32, 32],
    vn_psi_widths=[[16, 16], [16, 16], [16, 16]],
    vn_omega_widths=[16, 16],
    vn_tnet_width=16,
)


def relative_error(actual: torch.Tensor, expected: torch.Tensor) -> float:
    return float((actual - expected).norm() / expected.norm().clamp_min(1e-12))


def test_vector_neuron_scores_are_rotation_invariant():
    model = VNEdgeGraspNet(NetworkConfig(), torch.Generator().manual_seed(0))
    model.eval()
    rng = np.random.default_rng(0)
    worst = 0.0
    with torch.no_grad():
        for seed in range(20):
            region = sphere_region(seed=seed)
            contacts = region.contact_candidates[:30]
            graph = region_neighbors(region, 16)
            reference = model(collate([(region, contacts)], k=16, graphs=[graph]))
            for _ in range(100):
                rotated = augment_rotation(region, rng)
                scores = model(collate([(rotated, contacts)], k=16, graphs=[graph]))
                worst = max(worst, float((scores - reference).abs().max()))
    assert worst <= 1e-5


def test_vector_neuron_layer_equivariance():
    torch.manual_seed(0)
    relu, pool, conv = VNReLU(6), VNMaxPool(6), VNPointNetConv(2, 8, 6)
    rng = np.random.default_rng(1)
    with torch.no_grad():
        for trial in range(1000):
            r = torch.from_numpy(random_rotation(rng))
            f = torch.randn(10, 6, 3, dtype=torch.float64)
            weight = torch.randn(4, 6, dtype=torch.float64)
            assert (vn_linear(f @ r, weight) - vn_linear(f, weight) @ r).abs().max() <= 1e-12
            assert relative_error(relu(f @ r), relu(f) @ r) <= 1e-6
            assert relative_error(pool(f @ r, dim=0), pool(f, dim=0) @ r) <= 1e-6
            positions = torch.randn(8, 3, dtype=torch.float64)
            features = torch.randn(8, 2, 3, dtype=torch.float64)
            neighbors = torch.from_numpy(region_neighbors(random_region(n=8, seed=trial), 3))
            out = conv(features, positions, neighbors)
            assert relative_error(conv(features @ r, positions @ r, neighbors), out @ r) <= 1e-6


@pytest.mark.parametrize("kind", [EdgeGraspNet, VNEdgeGraspNet])
def test_every_parameter_matches_finite_differences(kind):
    model = kind(small_network(), torch.Generator().manual_seed(3))
    region = random_region(n=10, seed=4)
    batch = collate([(region, region.contact_candidates)], k=4)
    labels = torch.tensor([i % 2 for i in range(len(region.contact_candidates))], dtype=torch.float64)

    def loss_value() -> float:
        return float(balanced_bce_loss(model(batch), labels).item())

    grads = backward(model, balanced_bce_loss(model(batch), labels))
    h = 1e-5
    for name, param in model.named_parameters():
        flat = param.data.view(-1)
        analytic = grads[name].view(-1)
        for index in range(flat.numel()):
            original = flat[index].item()
            with torch.no_grad():
                flat[index] = original + h
                up = loss_value()
                flat[index] = original - h
                down = loss_value()
                flat[index] = original
            numeric = (up - down) / (2 * h)
            value = analytic[index].item()
            assert abs(value - numeric) <= 1e-4 * max(abs(value), abs(numeric)) + 1e-6, f"{name}[{index}]"


def test_bulk_edge_frames():
    gripper = GripperSpec()
    rng = np.random.default_rng(5)
    for _ in range(100):
        p_a = rng.uniform(-0.2, 0.2, size=3)
        p_c = p_a + rng.uniform(-0.025, 0.025, size=(100, 3))
        n_c = rng.standard_normal((100, 3))
        n_c /= np.linalg.norm(n_c, axis=1, keepdims=True)
        frames = edge_frames(p_a, p_c, n_c, gripper)
        rotation, a = frames.rotation[frames.valid], frames.a_ac[frames.valid]
        normals = n_c[frames.valid]
        identity = np.broadcast_to(np.eye(3), rotation.shape)
        np.testing.assert_allclose(np.einsum("nji,njk->nik", rotation, rotation), identity, atol=1e-9)
        np.testing.assert_allclose(np.linalg.det(rotation), 1.0, atol=1e-9)
        np.testing.assert_allclose(np.einsum("ij,ij->i", a, normals), 0.0, atol=1e-9)
        np.testing.assert_allclose(frames.center[frames.valid], p_a - frames.delta[frames.valid, None] * a, atol=1e-9)
        flipped = rotation @ FLIP_ABOUT_APPROACH
        np.testing.assert_allclose(flipped[:, :, 2], rotation[:, :, 2], atol=1e-12)
        np.testing.assert_allclose(flipped[:, :, 0], -rotation[:, :, 0], atol=1e-12)

        g, t = random_rotation(rng), rng.uniform(-1.0, 1.0, size=3)
        moved = edge_frames(g @ p_a + t, p_c @ g.T + t, n_c @ g.T, gripper)
        np.testing.assert_array_equal(moved.valid, frames.valid)
        np.testing.assert_allclose(moved.rotation[frames.valid], g @ rotation, atol=1e-9)
        np.testing.assert_allclose(moved.center[frames.valid], frames.center[frames.valid] @ g.T + t, atol=1e-9)


@pytest.mark.parametrize("mu", [1e-3, 0.75, 5.0])
def test_antipodal_sphere_grasp_succeeds_for_any_friction(mu):
    assert label_grasp(Scene(primitives=(BALL,)), ball_grasp(), GRIPPER, friction_mu=mu).success


def test_overfits_small_dataset():
    dataset = synthetic_dataset(scenes=6, regions=4, contacts=10, seed=8)
    network = NetworkConfig(
        psi_widths=[[32, 32], [32, 32], [32, 32]],
        omega_widths=[32, 32],
        classifier_widths=[32, 32, 32],
    )
    config = tiny_config(network=network, epochs=200, lr=1e-3, augment="none", batch_size=8)
    result = train(dataset, config)
    assert result.history.train_accuracy.iloc[-1] >= 0.95


def rotated_heldout_loss(result, dataset, config, rng) -> float:
    """Loss of the final-epoch weights on the validation regions, each under its own random rotation."""
    checkpoint = result.checkpoint
    model = build_model(checkpoint.model_kind, checkpoint.network)
    load_weights(model, checkpoint.training.weights)
    examples = dataset.examples("val")
    graphs = [region_neighbors(e.region, config.k, checkpoint.self_loops) for e in examples]
    rotated = [replace(e, region=augment_rotation(e.region, rng)) for e in examples]
    loss, _ = evaluate(model, rotated, graphs, config.batch_size, config.k)
    return loss


def test_invariance_orders_heldout_loss():
    """Vector Neurons <= augmented scalar <= plain scalar, plain overfitting most, on at least 4 of 5 seeds."""
    base = tiny_config(
        seed=0,
        scenes=12,
        approach_points=12,
        max_edges=170,
        camera_resolution=64,
        val_fraction=0.25,
        epochs=60,
        lr=1e-3,
        batch_size=8,
        network=MEDIUM_NETWORK,
    )
    dataset = build_dataset(base)
    variants = {
        "vector_neuron": {"model": "vector_neuron"},
        "augmented": {"augment": "scene"},
        "plain": {"augment": "none"},
    }

    ordered = 0
    for seed in range(5):
        losses, gaps = {}, {}
        for name, update in variants.items():
            config = base.model_copy(update={"seed": seed, **update})
            result = train(dataset, config)
            losses[name] = rotated_heldout_loss(result, dataset, config, np.random.default_rng(seed))
            gaps[name] = losses[name] - float(result.history.train_loss.iloc[-1])
        if losses["vector_neuron"] <= losses["augmented"] <= losses["plain"] and gaps["plain"] == max(gaps.values()):
            ordered += 1
    assert ordered >= 4


def test_trained_model_beats_random_edges(tmp_path):
    config = tiny_config(
        seed=1,
        scenes=40,
        scene_kind="pile",
        min_objects=2,
        max_objects=5,
        approach_points=16,
        max_edges=400,
        camera_resolution=96,
        epochs=40,
        lr=1e-3,
        batch_size=16,
        augment="scene",
        network=MEDIUM_NETWORK,
    )
    cmd_gen_scenes(config, tmp_path / "data.jsonl")
    cmd_train(config, tmp_path / "data.jsonl", tmp_path / "model.json")

    eval_config = config.model_copy(
        update={"rounds": 50, "object_count": 5, "threshold": 0.5, "detect_approach_points": 32, "detect_max_edges": 1000}
    )
    summary = cmd_eval(eval_config, tmp_path / "model.json", tmp_path / "eval.json", ("model", "random"))
    gsr = summary.set_index("method")["gsr_mean"]
    assert gsr["model"] - gsr["random"] >= 0.15

    untrained = ModelScorer(build_model("scalar", config.network, make_generator(config.seed)), config.k)
    rounds = evaluate_methods({"untrained": lambda scene, rng: untrained}, eval_config)
    assert gsr["model"] > summarize(rounds).set_index("method").loc["untrained", "gsr_mean"]


def test_inference_time_scaling(tmp_path):
    """At most 2.2x per doubling of approach points; flat within 20% across edge caps."""
    checkpoint = tmp_path / "model.json"
    train(
        synthetic_dataset(scenes=2, regions=2, seed=9),
        tiny_config(epochs=1, augment="none", network=NetworkConfig()),
        checkpoint_path=checkpoint,
    )
    config = tiny_config(scene_kind="pile", object_count=5, camera_resolution=120, network=NetworkConfig())
    table = cmd_benchmark(config, checkpoint, repeats=5)
    seconds = dict(zip(zip(table.approach_points, table.max_edges), table.sample_seconds + table.score_seconds))

    assert seconds[(32, 2000)] <= 2.2 * seconds[(16, 2000)]
    assert seconds[(64, 2000)] <= 2.2 * seconds[(32, 2000)]
    across_edges = [seconds[(32, edges)] for edges in (500, 1000, 2000)]
    assert max(across_edges) <= 1.2 * min(across_edges)


def digest(path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_pipeline_is_byte_identical(tmp_path):
    values = tiny_config(scenes=3, epochs=2, rounds=1).model_dump(mode="json")
    config = tmp_path / "tiny.cfg"
    config.write_text("".join(f"{key} = {json.dumps(value)}\n" for key, value in values.items()))
    runner = CliRunner()

    digests = []
    for run in ("a", "b"):
        out = tmp_path / run
        out.mkdir()
        steps = [
            ["gen-scenes", "-o", str(out / "data.jsonl")],
            ["train", "--dataset", str(out / "data.jsonl"), "-o", str(out / "model.json")],
            ["detect", str(out / "cloud.ply"), "--checkpoint", str(out / "model.json"), "-o", str(out / "grasps.jsonl")],
            ["eval", "--checkpoint", str(out / "model.json"), "-o", str(out / "eval.json")],
        ]
        for step in steps:
            result = runner.invoke(cli, ["--config", str(config), *step])
            assert result.exit_code == 0, result.output
            if step[0] == "gen-scenes":
                write_ply(LabeledDataset.read(out / "data.jsonl").records[0].cloud(), out / "cloud.ply")
        names = ("data.jsonl", "model.json", "model.history.csv", "grasps.jsonl", "eval.rounds.csv")
        digests.append([digest(out / name) for name in names])
    assert digests[0] == digests[1]
