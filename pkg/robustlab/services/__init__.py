"""Model, training, attack, evaluation, report and dataset services."""

from robustlab.services.attack_service import fgsm, instancewise_attack, pgd, project_linf
from robustlab.services.checkpoint import load_checkpoint, save_checkpoint
from robustlab.services.dataset_service import load_dataset, save_dataset
from robustlab.services.evaluation_service import (
    aggregate_overall,
    aggregate_per_corruption,
    corruption_robustness,
    eval_adversarial,
    eval_clean,
    eval_corruption_matrix,
    eval_record,
)
from robustlab.services.losses import compute_infonce_batch
from robustlab.services.network import ModelBundle, classify, encode, init_bundle, project
from robustlab.services.report_service import render_report, write_report
from robustlab.services.synthetic_service import gen_synthetic
from robustlab.services.training_service import combined_loss, train, train_acl, train_adversarial, train_standard

__all__ = [
    "ModelBundle",
    "aggregate_overall",
    "aggregate_per_corruption",
    "classify",
    "combined_loss",
    "compute_infonce_batch",
    "corruption_robustness",
    "encode",
    "eval_adversarial",
    "eval_clean",
    "eval_corruption_matrix",
    "eval_record",
    "fgsm",
    "gen_synthetic",
    "init_bundle",
    "instancewise_attack",
    "load_checkpoint",
    "load_dataset",
    "pgd",
    "project",
    "project_linf",
    "render_report",
    "save_checkpoint",
    "save_dataset",
    "train",
    "train_acl",
    "train_adversarial",
    "train_standard",
    "write_report",
]
