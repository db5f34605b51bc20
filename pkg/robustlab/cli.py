#!/usr/bin/env python3
"""
robustlab CLI - generate data, corrupt, attack, train, evaluate and report.

Every subcommand accepts ``--config FILE`` (a JSON RunConfig) plus flags that
override it, writes the resolved config to ``resolved_config.json`` in its
output directory, and exits with status 1 and a one-line message on failure.
"""

import functools
import json
import logging
import os
import sys
from typing import Any, Dict, Optional

import click
from PIL import Image
from pydantic import ValidationError
from tqdm import tqdm

from robustlab.core.config import settings
from robustlab.core.exceptions import ConfigurationError, RobustLabError
from robustlab.corruptions.severity import dump_severity_tables
from robustlab.corruptions.suite import corrupt_dataset, corruption_gallery
from robustlab.models.corruption import ALL_KINDS, SEVERITIES, CorruptionRequest
from robustlab.models.evaluation import PerfRecord
from robustlab.models.run_config import CorruptBlock, EvalBlock, GenBlock, RunConfig, TrainBlock
from robustlab.models.training import TrainingRecipe
from robustlab.services.attack_service import attack_dataset, summarize_attack
from robustlab.services.checkpoint import load_checkpoint, save_checkpoint
from robustlab.services.dataset_service import load_dataset, save_dataset
from robustlab.services.evaluation_service import eval_record
from robustlab.services.report_service import write_report
from robustlab.services.synthetic_service import write_synthetic
from robustlab.services.training_service import train as run_training
from robustlab.utils.helpers import ensure_dir, read_json, sha256_file, to_uint8, write_json

logger = logging.getLogger("robustlab.cli")

RESOLVED_CONFIG = "resolved_config.json"
CHECKPOINT_NAME = "model.ckpt"


def _one_line(error: Exception) -> str:
    return " ".join(str(error).split())


def handle_errors(command):
    """Turn library and validation errors into a single stderr line and exit status 1."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except (RobustLabError, ValidationError) as e:
            logger.debug("Command failed", exc_info=True)
            click.echo(f"Error: {_one_line(e)}", err=True)
            sys.exit(1)

    return wrapper


def _merge(base: Dict[str, Any], updates: Dict[str, Any]) -> Dict[str, Any]:
    """Recursive dict merge; ``None`` values in ``updates`` leave ``base`` untouched."""
    merged = dict(base)
    for key, value in updates.items():
        if value is None:
            continue
        if isinstance(value, dict):
            merged[key] = _merge(merged.get(key) or {}, value)
        else:
            merged[key] = value
    return merged


def resolve_config(config_path: Optional[str], overrides: Dict[str, Any]) -> RunConfig:
    """
    Load ``config_path`` (if any) and apply flag overrides.

    Raises:
        ConfigurationError: unreadable file or invalid values
    """
    base: Dict[str, Any] = {}
    if config_path:
        try:
            base = read_json(config_path)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"Cannot read config {config_path}: {e}")
    try:
        return RunConfig.model_validate(_merge(base, overrides))
    except ValidationError as e:
        raise ConfigurationError(f"Invalid configuration: {_one_line(e)}")


def _write_resolved(run: RunConfig) -> str:
    return write_json(os.path.join(ensure_dir(run.output_dir), RESOLVED_CONFIG), run)


def _require(value: Optional[str], what: str) -> str:
    if not value:
        raise ConfigurationError(f"No {what} given (flag or config)")
    return value


def log_level(verbose: bool) -> int:
    """DEBUG under ``--verbose`` or ROBUSTLAB_LOG_LEVEL=DEBUG, otherwise the configured level."""
    if verbose or settings.is_debug:
        return logging.DEBUG
    return getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO)


@click.group(invoke_without_command=True)
@click.version_option(version=settings.VERSION)
@click.option("--verbose", "-v", is_flag=True, help="Log at DEBUG level")
@click.pass_context
def cli(ctx: click.Context, verbose: bool):
    """robustlab - adversarial contrastive learning and corruption robustness."""
    logging.basicConfig(
        level=log_level(verbose),
        format=settings.LOG_FORMAT,
    )
    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help(), err=True)
        ctx.exit(2)


@cli.command("gen")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="JSON RunConfig")
@click.option("--out", help="Output directory")
@click.option("--classes", type=int, help="Number of shape classes (2-8)")
@click.option("--per-class", type=int, help="Images per class")
@click.option("--size", type=int, help="Image height and width")
@click.option("--seed", type=int, help="Generator seed")
@click.option("--test-per-class", type=int, help="Also write a held-out test split")
@handle_errors
def gen_command(config_path, out, classes, per_class, size, seed, test_per_class):
    """Generate a synthetic shape dataset with its manifest."""
    run = resolve_config(config_path, {
        "output_dir": out,
        "seed": seed,
        "gen": {"classes": classes, "per_class": per_class, "size": size, "test_per_class": test_per_class},
    })
    block = run.gen or GenBlock()
    _write_resolved(run)
    train, test = write_synthetic(
        run.output_dir, block.classes, block.per_class, block.size, run.seed, test_per_class=block.test_per_class
    )
    click.echo(f"Wrote {len(train)} images to {run.output_dir}" + (f" (+{len(test)} test)" if test else ""))


@cli.command("corrupt")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="JSON RunConfig")
@click.option("--data", help="Dataset directory holding manifest.csv")
@click.option("--out", help="Output directory")
@click.option("--kind", type=click.Choice([k.value for k in ALL_KINDS]), help="Corruption kind")
@click.option("--severity", type=int, help="Severity 1-5")
@click.option("--seed", type=int, help="Base seed of the per-image draws")
@click.option("--threads", type=int, help="Worker threads (output does not depend on it)")
@click.option("--gallery", is_flag=True, help="Render all 19 kinds for the first image")
@click.option("--dump-severity-tables", "dump_tables", is_flag=True,
              help="Print the severity parameter tables as JSON and exit")
@handle_errors
def corrupt_command(config_path, data, out, kind, severity, seed, threads, gallery, dump_tables):
    """Apply one corruption to every image of a dataset."""
    if dump_tables:
        click.echo(json.dumps(dump_severity_tables(), indent=2, sort_keys=True))
        return

    run = resolve_config(config_path, {
        "dataset": data,
        "output_dir": out,
        "seed": seed,
        "corrupt": {"kind": kind, "severity": severity, "threads": threads, "gallery": True if gallery else None},
    })
    block = run.corrupt or CorruptBlock()
    dataset = load_dataset(_require(run.dataset, "dataset"))
    _write_resolved(run)

    if block.gallery:
        images = corruption_gallery(dataset.images[0], block.severity, run.seed)
        gallery_dir = ensure_dir(os.path.join(run.output_dir, "gallery"))
        for corruption, image in images.items():
            Image.fromarray(to_uint8(image)).save(os.path.join(gallery_dir, f"{corruption.value}.png"), format="PNG")
        click.echo(f"Wrote {len(images)} gallery images at severity {block.severity} to {gallery_dir}")
        return

    if block.kind is None:
        raise ConfigurationError("No corruption kind given (--kind or corrupt.kind)")
    request = CorruptionRequest(kind=block.kind, severity=block.severity)
    corrupted = corrupt_dataset(dataset.images, request, run.seed, threads=block.threads)
    save_dataset(dataset.with_images(corrupted), run.output_dir)
    click.echo(f"Wrote {len(dataset)} {block.kind.value}@{block.severity} images to {run.output_dir}")


@cli.command("attack")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="JSON RunConfig")
@click.option("--checkpoint", help="Checkpoint file of the attacked model")
@click.option("--data", help="Dataset directory holding manifest.csv")
@click.option("--out", help="Output directory")
@click.option("--epsilon", type=float, help="Ball radius in pixel units")
@click.option("--step-size", type=float, help="Step size of each ascent step")
@click.option("--iterations", type=int, help="Number of steps")
@click.option("--seed", type=int, help="Seed of the random starts")
@handle_errors
def attack_command(config_path, checkpoint, data, out, epsilon, step_size, iterations, seed):
    """Craft supervised PGD examples for a dataset and audit them."""
    # a partial attack block is completed from the supervised evaluation defaults
    run = resolve_config(config_path, {
        "dataset": data,
        "output_dir": out,
        "seed": seed,
        "checkpoint": checkpoint,
        "attack": {"epsilon": epsilon, "step_size": step_size, "iterations": iterations},
    })
    checkpoint_path = _require(run.checkpoint, "checkpoint")
    bundle = load_checkpoint(checkpoint_path)
    dataset = load_dataset(_require(run.dataset, "dataset"))
    _write_resolved(run)

    pair = attack_dataset(bundle, dataset.images, dataset.labels, run.attack, seed=run.seed)
    summary = summarize_attack(pair, run.attack, sha256_file(checkpoint_path), dataset.labels, dataset.paths)
    save_dataset(dataset.with_images(pair.adversarial), os.path.join(run.output_dir, "adversarial"))
    write_json(os.path.join(run.output_dir, "summary.json"), summary)
    click.echo(
        f"Attacked {len(dataset)} images: mean loss change {summary.mean_loss_delta:+.4f}, "
        f"{summary.violations} constraint violations"
    )


@cli.command("train")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="JSON RunConfig")
@click.option("--data", help="Dataset directory holding manifest.csv")
@click.option("--recipe", type=click.Choice([r.value for r in TrainingRecipe]), help="Training recipe")
@click.option("--epochs", type=int, help="Passes over the dataset")
@click.option("--batch-size", type=int, help="Minibatch size")
@click.option("--seed", type=int, help="Seed of every random draw")
@click.option("--out", help="Output directory")
@handle_errors
def train_command(config_path, data, recipe, epochs, batch_size, seed, out):
    """Train a model and write its checkpoint and history."""
    draft = resolve_config(config_path, {
        "dataset": data,
        "output_dir": out,
        "seed": seed,
        "train": {"recipe": recipe, "config": {"epochs": epochs, "batch_size": batch_size}},
    })
    block = draft.train or TrainBlock()
    # the run seed is the single source of randomness
    block = block.model_copy(update={"config": block.config.model_copy(update={"seed": draft.seed})})
    run = draft.model_copy(update={"train": block})
    dataset = load_dataset(_require(run.dataset, "dataset"))
    _write_resolved(run)

    with tqdm(total=block.config.epochs, desc=f"train[{block.recipe.value}]", unit="epoch") as progress:

        def on_epoch(record):
            progress.set_postfix(loss=f"{record.loss.total:.4f}", acc=f"{record.train_accuracy:.3f}")
            progress.update(1)

        bundle, history = run_training(dataset, block.config, block.recipe, on_epoch=on_epoch)

    checkpoint_path = save_checkpoint(bundle, run.checkpoint or os.path.join(run.output_dir, CHECKPOINT_NAME))
    write_json(os.path.join(run.output_dir, "history.json"), history)
    click.echo(f"Trained {block.recipe.value} model; checkpoint at {checkpoint_path}")


@cli.command("eval")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="JSON RunConfig")
@click.option("--checkpoint", help="Checkpoint file to evaluate")
@click.option("--data", help="Dataset directory holding manifest.csv")
@click.option("--out", help="Output directory")
@click.option("--label", help="Strategy label shown in reports")
@click.option("--threads", type=int, help="Worker threads (output does not depend on it)")
@click.option("--seed", type=int, help="Base seed of corruptions and attacks")
@click.option("--no-adversarial", is_flag=True, help="Skip the adversarial evaluation")
@handle_errors
def eval_command(config_path, checkpoint, data, out, label, threads, seed, no_adversarial):
    """Clean, 19x5 corruption matrix and adversarial evaluation of one checkpoint."""
    run = resolve_config(config_path, {
        "dataset": data,
        "output_dir": out,
        "seed": seed,
        "eval": {
            "checkpoint": checkpoint,
            "label": label,
            "threads": threads,
            "adversarial": False if no_adversarial else None,
        },
    })
    block = run.eval or EvalBlock()
    checkpoint_path = _require(block.checkpoint or run.checkpoint, "checkpoint")
    bundle = load_checkpoint(checkpoint_path)
    dataset = load_dataset(_require(run.dataset, "dataset"))
    _write_resolved(run)

    with tqdm(total=len(ALL_KINDS) * len(SEVERITIES), desc="corruption matrix", unit="cell") as progress:
        record = eval_record(
            bundle,
            dataset,
            run.seed,
            attack=block.attack if block.adversarial else None,
            label=block.label,
            checkpoint_hash=sha256_file(checkpoint_path),
            threads=block.threads,
            on_cell=lambda kind, severity, score: progress.update(1),
        )
    path = write_json(os.path.join(run.output_dir, "perf_record.json"), record)
    click.echo(f"[{record.label}] clean accuracy {record.clean:.4f}; record at {path}")


@cli.command("report")
@click.argument("records", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, help="Output directory")
@handle_errors
def report_command(records, out):
    """Render PerfRecords side by side as report.txt and report.json."""
    loaded = []
    for path in records:
        try:
            loaded.append(PerfRecord.model_validate(read_json(path)))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"Cannot read record {path}: {e}")
    text_path, _ = write_report(loaded, out)
    with open(text_path, "r", encoding="utf-8") as f:
        click.echo(f.read())


def main():
    cli()


if __name__ == "__main__":
    main()
