"""
Command-line entry point: edgegrasp gen-scenes | train | detect | eval | benchmark.

Settings are layered: defaults < EDGEGRASP_* environment (.env) < --config
file < flags. Exit codes: 0 success, 2 usage error, 3 data or I/O error,
4 numeric failure.
"""

import functools
import logging
import logging.config
import sys
from typing import Any, Callable, Dict, Optional

import click
from pydantic import ValidationError

from src import __version__
from src.commands import cmd_benchmark, cmd_detect, cmd_eval, cmd_gen_scenes, cmd_train
from src.config import RunConfig, get_settings
from src.errors import DataError, NumericError
from src.evaluation import format_summary

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

# Configure structured logging
LOGGING_CONFIG = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "structured": {
            "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            "datefmt": "%Y-%m-%d %H:%M:%S",
        }
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "structured",
            "stream": "ext://sys.stderr",
        }
    },
    "root": {"handlers": ["console"], "level": "WARNING"},
    "loggers": {
        "src": {"level": "INFO", "propagate": False, "handlers": ["console"]},
    },
}

logger = logging.getLogger("src.cli")

MODEL_CHOICES = {"scalar": "scalar", "vn": "vector_neuron"}
POLICY_CHOICES = {"highest-z": "highest_z", "top-k": "top_k"}


def configure_logging(verbose: bool, quiet: bool) -> None:
    config = {**LOGGING_CONFIG, "loggers": {"src": dict(LOGGING_CONFIG["loggers"]["src"])}}
    if verbose:
        config["loggers"]["src"]["level"] = "DEBUG"
    elif quiet:
        config["loggers"]["src"]["level"] = "WARNING"
    logging.config.dictConfig(config)


def fail(message: str, code: int) -> None:
    logger.error(message)
    click.echo(f"Error: {message}", err=True)
    sys.exit(code)


def exit_codes(func: Callable) -> Callable:
    """Map library exceptions raised by a command to the documented exit codes."""

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)
        except NumericError as e:
            fail(f"numeric failure: {e}", EXIT_NUMERIC)
        except DataError as e:
            fail(str(e), EXIT_DATA)
        except OSError as e:
            fail(f"I/O error: {e}", EXIT_DATA)
        except (ValidationError, ValueError) as e:
            raise click.UsageError(str(e)) from e

    return wrapper


def settings_from(ctx: click.Context, **flags: Any) -> RunConfig:
    """Build the RunConfig from the global options, the config file and command flags."""
    overrides: Dict[str, Any] = {k: v for k, v in {**ctx.obj["globals"], **flags}.items() if v is not None}
    gripper = {
        key: overrides.pop(flag)
        for flag, key in (("gripper_width", "width"), ("gripper_depth", "depth"))
        if flag in overrides
    }
    if gripper:
        overrides["gripper"] = gripper
    if "model" in overrides:
        overrides["model"] = MODEL_CHOICES[overrides["model"]]
    if "policy" in overrides:
        overrides["policy"] = POLICY_CHOICES[overrides["policy"]]
    try:
        return get_settings(ctx.obj["config_file"], **overrides)
    except (ValidationError, ValueError) as e:
        raise click.UsageError(f"invalid configuration: {e}") from e


def geometry_options(func: Callable) -> Callable:
    """Gripper and preprocessing flags shared by every command."""
    options = [
        click.option("--gripper-width", type=float, help="Gripper aperture G_w (m)"),
        click.option("--gripper-depth", type=float, help="Gripper depth G_d (m)"),
        click.option("--voxel", "voxel_size", type=float, help="Voxel size (m)"),
        click.option("--k", type=int, help="KNN graph size"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


@click.group()
@click.version_option(__version__, prog_name="edgegrasp")
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False), help="key=value config file")
@click.option("--seed", type=int, help="Master random seed")
@click.option("--workers", type=click.IntRange(min=1), help="Worker threads for region and scene building")
@click.option("--verbose", "-v", is_flag=True, help="Debug logging")
@click.option("--quiet", "-q", is_flag=True, help="Warnings and errors only")
@click.pass_context
def cli(ctx: click.Context, config_file: Optional[str], seed: Optional[int], workers: Optional[int], verbose: bool, quiet: bool):
    """Edge grasp detection on single-view point clouds."""
    configure_logging(verbose, quiet)
    ctx.ensure_object(dict)
    ctx.obj["config_file"] = config_file
    ctx.obj["globals"] = {"seed": seed, "workers": workers}


@cli.command("gen-scenes")
@click.option("--scenes", type=click.IntRange(min=1), help="Number of scenes")
@click.option("--kind", "scene_kind", type=click.Choice(["packed", "pile", "mixed"]), help="Scene kind")
@click.option("--approach-points", type=int, help="Approach points per scene")
@click.option("--max-edges", type=int, help="Edge cap per scene")
@click.option("--output", "-o", type=click.Path(dir_okay=False), default="dataset.jsonl", show_default=True)
@geometry_options
@click.pass_context
@exit_codes
def gen_scenes(ctx: click.Context, output: str, **flags: Any):
    """Generate synthetic scenes and label their edge grasps."""
    config = settings_from(ctx, **flags)
    stats = cmd_gen_scenes(config, output)
    click.echo(
        f"{stats['scenes']} scenes, {stats['edges']} edges, "
        f"positive rate {100 * stats['positive_rate']:.1f}% -> {output}"
    )


@cli.command("train")
@click.option("--dataset", "dataset_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--output", "-o", type=click.Path(dir_okay=False), default="checkpoint.json", show_default=True)
@click.option("--resume", type=click.Path(exists=True, dir_okay=False), help="Checkpoint to continue from")
@click.option("--model", type=click.Choice(list(MODEL_CHOICES)), help="Network kind")
@click.option("--epochs", type=int)
@click.option("--lr", type=float)
@click.option("--batch-size", type=int)
@click.option("--augment", type=click.Choice(["scene", "region", "none"]))
@geometry_options
@click.pass_context
@exit_codes
def train_command(ctx: click.Context, dataset_path: str, output: str, resume: Optional[str], **flags: Any):
    """Train a grasp network on a generated dataset."""
    config = settings_from(ctx, **flags)
    result = cmd_train(config, dataset_path, output, resume)
    last = result.history.iloc[-1] if len(result.history) else None
    if last is not None:
        click.echo(f"epoch {int(last.epoch)}: train loss {last.train_loss:.5f}, val loss {last.val_loss:.5f}")
    click.echo(f"{result.checkpoint.model_kind} checkpoint -> {output}")


@cli.command("detect")
@click.argument("cloud_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--checkpoint", "checkpoint_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--output", "-o", type=click.Path(dir_okay=False), default="grasps.jsonl", show_default=True)
@click.option("--threshold", type=float)
@click.option("--policy", type=click.Choice(list(POLICY_CHOICES)))
@click.option("--top-k", type=int)
@click.option("--approach-points", "detect_approach_points", type=int)
@click.option("--max-edges", "detect_max_edges", type=int)
@geometry_options
@click.pass_context
@exit_codes
def detect_command(ctx: click.Context, cloud_path: str, checkpoint_path: str, output: str, **flags: Any):
    """Detect grasps on a point cloud file (.ply or .csv)."""
    config = settings_from(ctx, **flags)
    detection = cmd_detect(config, cloud_path, checkpoint_path, output)
    if not detection.selected:
        click.echo(f"no grasp scored at least {config.threshold}", err=True)
    click.echo(f"{len(detection.selected)} grasps -> {output}")


@cli.command("eval")
@click.option("--checkpoint", "checkpoint_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--output", "-o", type=click.Path(dir_okay=False), default="eval.json", show_default=True)
@click.option("--rounds", type=click.IntRange(min=1))
@click.option("--kind", "scene_kind", type=click.Choice(["packed", "pile", "mixed"]))
@click.option("--objects", "object_count", type=click.IntRange(min=1))
@click.option("--eval-seeds", type=click.IntRange(min=1))
@click.option("--threshold", type=float)
@click.option("--policy", type=click.Choice(list(POLICY_CHOICES)))
@click.option("--approach-points", "detect_approach_points", type=int)
@click.option("--max-edges", "detect_max_edges", type=int)
@click.option("--baseline/--no-baseline", default=True, help="Also run the random-edge baseline")
@click.option("--oracle", is_flag=True, help="Also run the oracle scorer")
@geometry_options
@click.pass_context
@exit_codes
def eval_command(
    ctx: click.Context, checkpoint_path: Optional[str], output: str, baseline: bool, oracle: bool, **flags: Any
):
    """Declutter evaluation: grasp success rate and declutter rate."""
    config = settings_from(ctx, **flags)
    methods = (["model"] if checkpoint_path else []) + (["random"] if baseline else []) + (["oracle"] if oracle else [])
    if not methods:
        raise click.UsageError("nothing to evaluate: pass --checkpoint, --baseline or --oracle")
    summary = cmd_eval(config, checkpoint_path, output, methods)
    click.echo(format_summary(summary, methods))


@cli.command("benchmark")
@click.option("--checkpoint", "checkpoint_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--output", "-o", type=click.Path(dir_okay=False), help="Timing CSV")
@click.option("--repeats", type=click.IntRange(min=1), default=3, show_default=True)
@geometry_options
@click.pass_context
@exit_codes
def benchmark_command(ctx: click.Context, checkpoint_path: str, output: Optional[str], repeats: int, **flags: Any):
    """Inference time over approach-point counts and edge caps."""
    config = settings_from(ctx, **flags)
    table = cmd_benchmark(config, checkpoint_path, output, repeats)
    click.echo(table.to_string(index=False))


def main() -> None:
    cli(obj={})


if __name__ == "__main__":
    main()
