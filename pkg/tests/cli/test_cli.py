"""
Tests for the click command surface.
"""

import json
import logging
import os

import pytest
from click.testing import CliRunner

from robustlab.cli import RESOLVED_CONFIG, cli, log_level
from robustlab.core.config import settings
from robustlab.models.attack import AttackObjective
from robustlab.models.corruption import ALL_KINDS
from robustlab.models.run_config import EvalBlock, RunConfig


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def generated(tmp_path, runner):
    out = str(tmp_path / "data")
    result = runner.invoke(cli, ["gen", "--out", out, "--classes", "2", "--per-class", "2", "--size", "16", "--seed", "1"])
    assert result.exit_code == 0, result.output
    return out


@pytest.fixture
def checkpoint(tmp_path, runner, generated):
    out = str(tmp_path / "model")
    result = runner.invoke(
        cli, ["train", "--data", generated, "--out", out, "--recipe", "standard", "--epochs", "1", "--batch-size", "4"]
    )
    assert result.exit_code == 0, result.output
    return os.path.join(out, "model.ckpt")


def test_no_subcommand_prints_usage(runner):
    result = runner.invoke(cli, [])
    assert result.exit_code == 2


@pytest.mark.parametrize(
    "configured, verbose, expected",
    [
        ("DEBUG", False, logging.DEBUG),
        ("debug", False, logging.DEBUG),
        ("WARNING", False, logging.WARNING),
        ("WARNING", True, logging.DEBUG),
        ("INFO", False, logging.INFO),
    ],
)
def test_log_level_follows_settings(monkeypatch, configured, verbose, expected):
    monkeypatch.setattr(settings, "LOG_LEVEL", configured)
    assert settings.is_debug == (configured.upper() == "DEBUG")
    assert log_level(verbose) == expected


def test_gen_writes_dataset_and_resolved_config(generated):
    assert os.path.isfile(os.path.join(generated, "manifest.csv"))
    with open(os.path.join(generated, RESOLVED_CONFIG), encoding="utf-8") as f:
        resolved = json.load(f)
    assert resolved["seed"] == 1
    assert resolved["gen"]["classes"] == 2
    assert resolved["gen"]["size"] == 16


def test_gen_with_test_split(tmp_path, runner):
    out = str(tmp_path / "split")
    result = runner.invoke(
        cli, ["gen", "--out", out, "--classes", "2", "--per-class", "2", "--size", "16", "--test-per-class", "1"]
    )
    assert result.exit_code == 0, result.output
    assert os.path.isfile(os.path.join(out, "train", "manifest.csv"))
    assert os.path.isfile(os.path.join(out, "test", "manifest.csv"))


def test_gen_flags_override_config_file(tmp_path, runner):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"seed": 3, "gen": {"classes": 3, "per_class": 1, "size": 16}}), encoding="utf-8")
    out = str(tmp_path / "data")
    result = runner.invoke(cli, ["gen", "--config", str(config), "--out", out, "--classes", "2"])
    assert result.exit_code == 0, result.output
    with open(os.path.join(out, RESOLVED_CONFIG), encoding="utf-8") as f:
        resolved = json.load(f)
    assert resolved["seed"] == 3
    assert resolved["gen"]["classes"] == 2
    assert resolved["gen"]["per_class"] == 1


def test_invalid_value_exits_with_one_line(tmp_path, runner):
    result = runner.invoke(cli, ["gen", "--out", str(tmp_path), "--classes", "12"])
    assert result.exit_code == 1
    assert "Error:" in result.output


def test_dump_severity_tables(runner):
    result = runner.invoke(cli, ["corrupt", "--dump-severity-tables"])
    assert result.exit_code == 0, result.output
    tables = json.loads(result.output)
    assert set(tables) == {kind.value for kind in ALL_KINDS}


def test_corrupt_dataset(tmp_path, runner, generated):
    out = str(tmp_path / "fog")
    result = runner.invoke(
        cli, ["corrupt", "--data", generated, "--out", out, "--kind", "fog", "--severity", "2", "--threads", "2"]
    )
    assert result.exit_code == 0, result.output
    assert os.path.isfile(os.path.join(out, "manifest.csv"))


def test_corrupt_without_kind_fails(tmp_path, runner, generated):
    result = runner.invoke(cli, ["corrupt", "--data", generated, "--out", str(tmp_path / "none")])
    assert result.exit_code == 1
    assert "Error:" in result.output


def test_corrupt_gallery(tmp_path, runner, generated):
    out = str(tmp_path / "gallery")
    result = runner.invoke(cli, ["corrupt", "--data", generated, "--out", out, "--gallery", "--severity", "1"])
    assert result.exit_code == 0, result.output
    assert len(os.listdir(os.path.join(out, "gallery"))) == len(ALL_KINDS)


def test_missing_dataset_fails(tmp_path, runner):
    result = runner.invoke(
        cli, ["corrupt", "--data", str(tmp_path / "absent"), "--out", str(tmp_path), "--kind", "fog"]
    )
    assert result.exit_code == 1


def test_train_attack_eval_report_chain(tmp_path, runner, generated):
    train_dir = str(tmp_path / "train")
    result = runner.invoke(
        cli,
        ["train", "--data", generated, "--out", train_dir, "--recipe", "standard",
         "--epochs", "1", "--batch-size", "4", "--seed", "2"],
    )
    assert result.exit_code == 0, result.output
    checkpoint = os.path.join(train_dir, "model.ckpt")
    assert os.path.isfile(checkpoint)
    assert os.path.isfile(os.path.join(train_dir, "history.json"))

    attack_dir = str(tmp_path / "attack")
    result = runner.invoke(
        cli, ["attack", "--checkpoint", checkpoint, "--data", generated, "--out", attack_dir, "--iterations", "2"]
    )
    assert result.exit_code == 0, result.output
    with open(os.path.join(attack_dir, "summary.json"), encoding="utf-8") as f:
        assert json.load(f)["violations"] == 0

    eval_dir = str(tmp_path / "eval")
    result = runner.invoke(
        cli,
        ["eval", "--checkpoint", checkpoint, "--data", generated, "--out", eval_dir,
         "--label", "Standard", "--no-adversarial"],
    )
    assert result.exit_code == 0, result.output
    record_path = os.path.join(eval_dir, "perf_record.json")
    with open(record_path, encoding="utf-8") as f:
        record = json.load(f)
    assert record["label"] == "Standard"
    assert record["adversarial"] is None
    assert len(record["corrupted"]) == len(ALL_KINDS)

    report_dir = str(tmp_path / "report")
    result = runner.invoke(cli, ["report", record_path, "--out", report_dir])
    assert result.exit_code == 0, result.output
    assert "Standard" in result.output
    assert os.path.isfile(os.path.join(report_dir, "report.json"))


@pytest.mark.parametrize("model", [RunConfig, EvalBlock])
def test_partial_attack_block_keeps_evaluation_defaults(model):
    attack = model(attack={"epsilon": 0.03}).attack
    assert attack.objective is AttackObjective.SUPERVISED_CE
    assert attack.iterations == settings.ATTACK_EVAL_ITERATIONS
    assert attack.epsilon == 0.03


def test_eval_with_partial_attack_block(tmp_path, runner, generated, checkpoint):
    config = tmp_path / "eval.json"
    config.write_text(json.dumps({"eval": {"attack": {"epsilon": 0.02, "iterations": 1}}}), encoding="utf-8")
    out = str(tmp_path / "eval")
    result = runner.invoke(
        cli, ["eval", "--config", str(config), "--checkpoint", checkpoint, "--data", generated, "--out", out]
    )
    assert result.exit_code == 0, result.output
    with open(os.path.join(out, "perf_record.json"), encoding="utf-8") as f:
        record = json.load(f)
    assert record["adversarial"] is not None
    assert record["attack"]["objective"] == "supervised-ce"
    assert record["attack"]["epsilon"] == 0.02


def test_attack_with_partial_attack_block(tmp_path, runner, generated, checkpoint):
    config = tmp_path / "attack.json"
    config.write_text(json.dumps({"attack": {"epsilon": 0.02}}), encoding="utf-8")
    out = str(tmp_path / "attack")
    result = runner.invoke(
        cli,
        ["attack", "--config", str(config), "--checkpoint", checkpoint, "--data", generated, "--out", out,
         "--iterations", "1"],
    )
    assert result.exit_code == 0, result.output
    with open(os.path.join(out, "summary.json"), encoding="utf-8") as f:
        summary = json.load(f)
    assert summary["config"]["objective"] == "supervised-ce"
    assert summary["config"]["epsilon"] == 0.02
    assert summary["config"]["iterations"] == 1
    assert summary["violations"] == 0
