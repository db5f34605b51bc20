#!/usr/bin/env python3
"""
Desk-scale reproduction: standard vs. adversarial contrastive training on the
synthetic shape task, evaluated on clean, corrupted and adversarial inputs.
Saves the records, the side-by-side report and a YAML summary in the results folder.
"""

import logging
import os
import sys
import time
from datetime import datetime
from pathlib import Path
from types import SimpleNamespace

import click
import numpy as np
import yaml

PROJECT_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
sys.path.insert(0, PROJECT_ROOT)

from robustlab.core.config import settings  # noqa: E402
from robustlab.models.attack import AttackConfig  # noqa: E402
from robustlab.models.corruption import CORRUPTION_GROUPS  # noqa: E402
from robustlab.models.training import TrainConfig, TrainingRecipe  # noqa: E402
from robustlab.services.checkpoint import save_checkpoint  # noqa: E402
from robustlab.services.evaluation_service import eval_record, summarize  # noqa: E402
from robustlab.services.report_service import write_report  # noqa: E402
from robustlab.services.synthetic_service import write_synthetic  # noqa: E402
from robustlab.services.training_service import train  # noqa: E402
from robustlab.utils.helpers import sha256_file, write_json  # noqa: E402

logging.basicConfig(level=logging.INFO, format=settings.LOG_FORMAT)
logger = logging.getLogger("eval-desk-reproduction")

RESULTS_DIR = Path("results")

# recipes compared side by side, in report column order
STRATEGIES = {
    "Standard": TrainingRecipe.STANDARD,
    "Adversarial Contrastive Learning": TrainingRecipe.ACL,
}


def generate_output_dir() -> Path:
    """Results folder named after the current date."""
    today = datetime.now().strftime("%Y-%m-%d")
    return RESULTS_DIR / f"{today}-desk-reproduction"


def noise_probe(record) -> dict:
    """Mean accuracy at severity 1 and 5 over the four noise kinds."""
    rows = [record.corrupted[kind] for kind in CORRUPTION_GROUPS["Noise"]]
    first = float(np.mean([row[0] for row in rows]))
    last = float(np.mean([row[-1] for row in rows]))
    return {"severity_1": first, "severity_5": last, "monotone": last <= first}


def run(args) -> Path:
    """
    Generate data, train every strategy, evaluate and write all artifacts.

    Returns:
        Path of the YAML summary
    """
    out_dir = generate_output_dir()
    out_dir.mkdir(parents=True, exist_ok=True)

    train_set, test_set = write_synthetic(
        str(out_dir / "data"), args.classes, args.per_class, args.size, args.seed, test_per_class=args.test_per_class
    )
    attack_eval = AttackConfig.for_evaluation()

    records, results = [], []
    for label, recipe in STRATEGIES.items():
        cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch_size, seed=args.seed)
        logger.info(f"Training {label} ({recipe.value}) for {cfg.epochs} epochs")
        start_time = time.time()
        bundle, history = train(train_set, cfg, recipe)
        train_time = time.time() - start_time

        checkpoint = save_checkpoint(bundle, str(out_dir / f"{recipe.value}.ckpt"))
        record = eval_record(
            bundle,
            test_set,
            args.seed,
            attack=attack_eval,
            label=label,
            checkpoint_hash=sha256_file(checkpoint),
            threads=args.threads,
        )
        write_json(str(out_dir / f"{recipe.value}_perf_record.json"), record)
        write_json(str(out_dir / f"{recipe.value}_history.json"), history)
        records.append(record)

        summary = summarize(record)
        results.append({
            "strategy": label,
            "recipe": recipe.value,
            "clean_accuracy": round(summary.clean, 4),
            "corruption_average": round(summary.overall, 4),
            "adversarial_accuracy": round(summary.adversarial, 4) if summary.adversarial is not None else None,
            "final_loss": round(history.epochs[-1].loss.total, 4),
            "noise_probe": noise_probe(record),
            "training_time": round(train_time, 2),
        })

    write_report(records, str(out_dir))

    evaluation_results = {
        "metadata": {
            "timestamp": datetime.now().isoformat(),
            "seed": args.seed,
            "classes": args.classes,
            "train_images": len(train_set),
            "test_images": len(test_set),
            "image_size": args.size,
            "epochs": args.epochs,
        },
        "results": results,
    }
    output_file = out_dir / "summary.yaml"
    with open(output_file, "w", encoding="utf-8") as f:
        yaml.dump(evaluation_results, f, default_flow_style=False, allow_unicode=True, sort_keys=False)
    return output_file


@click.command()
@click.option("--classes", type=int, default=4, help="Number of shape classes")
@click.option("--per-class", type=int, default=200, help="Training images per class")
@click.option("--test-per-class", type=int, default=50, help="Held-out images per class")
@click.option("--size", type=int, default=32, help="Image height and width")
@click.option("--epochs", type=int, default=settings.EPOCHS, help="Training epochs per strategy")
@click.option("--batch-size", type=int, default=settings.BATCH_SIZE, help="Minibatch size")
@click.option("--threads", type=int, default=4, help="Worker threads for the corruption matrix")
@click.option("--seed", type=int, default=0, help="Seed of data, training and evaluation")
def main(**options):
    """Desk-scale robustness reproduction."""
    args = SimpleNamespace(**options)

    print("Desk-scale robustness reproduction")
    print("==================================")
    output_file = run(args)
    print(f"\nResults saved to: {output_file}")


if __name__ == "__main__":
    main()
