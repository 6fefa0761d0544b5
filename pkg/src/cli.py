#!/usr/bin/env python3
"""
CLI for the cross-modal anomaly detection benchmark.

This CLI wraps discrete command functions that are also used by the recipe flow,
ensuring consistency between CLI and programmatic access.
"""

import json
from typing import Any, Callable, Dict, Optional

import click

from src.commands import (
    evaluate_models,
    export_features,
    finetune_model,
    generate_data,
    report_results,
    select_sources,
    train_model,
    verify_uniform_optimum,
)
from src.errors import AnomalyError

json_option = click.option("--json", "output_json", is_flag=True, help="Output results as JSON")


def _finish(
    result: Dict[str, Any],
    output_json: bool,
    details: Optional[Callable[[Dict[str, Any]], None]] = None,
):
    """Print a command result and exit with its status."""
    if output_json:
        click.echo(json.dumps(result, indent=2))
    elif result["success"]:
        click.echo(f"✓ {result['message']}")
        if details:
            details(result)
    else:
        click.echo(f"✗ {result['message']}", err=True)
    if not result["success"]:
        raise SystemExit(result["exit_code"])


@click.group()
@click.version_option(version="0.1.0", prog_name="vqa-anomaly")
def cli():
    """
    Attention-based anomaly detection for a toy cross-modal VQA model.

    Generate synthetic scene/question data with five anomaly tasks, train the
    model, fine-tune it against anomalies and benchmark MSP/MAP detectors.
    """
    pass


@cli.command()
@click.option("--config", "-c", "config_path", required=True, help="Run config JSON file")
@click.option("--out", "-o", "out_dir", required=True, help="Output data directory")
@click.option("--seed", type=int, default=None, help="Override the config seed")
@json_option
def gen(config_path: str, out_dir: str, seed: Optional[int], output_json: bool):
    """
    Generate the ID splits and every anomaly set.

    Examples:

      vqa-anomaly gen --config configs/toy.json --out data/suite
    """

    def details(result):
        for name, count in result["files"].items():
            click.echo(f"  • {name}: {count}")

    _finish(generate_data(config_path, out_dir, seed), output_json, details)


@cli.command()
@click.option("--config", "-c", "config_path", required=True, help="Run config JSON file")
@click.option("--data", "-d", "data_dir", required=True, help="Data directory from 'gen'")
@click.option("--out", "-o", required=True, help="Output checkpoint path")
@click.option("--seed", type=int, default=None, help="Override the config seed")
@json_option
def train(config_path: str, data_dir: str, out: str, seed: Optional[int], output_json: bool):
    """
    Train the base model on the ID training split.

    Examples:

      vqa-anomaly train --config configs/toy.json --data data/suite --out runs/base.ckpt
    """
    _finish(train_model(config_path, data_dir, out, seed), output_json)


@cli.command()
@click.option(
    "--method",
    "-m",
    type=click.Choice(["base", "oe", "ra", "ra-var"], case_sensitive=False),
    default="ra",
    show_default=True,
    help="Fine-tuning regime",
)
@click.option("--model", "model_path", required=True, help="Checkpoint to fine-tune")
@click.option("--anomalies", "-a", "data_dir", required=True, help="Data directory from 'gen'")
@click.option("--out", "-o", required=True, help="Output checkpoint path")
@click.option("--lambda", "lam", type=float, default=None, help="Override the RA weight")
@click.option("--config", "-c", "config_path", default=None, help="Override the embedded config")
@json_option
def finetune(
    method: str,
    model_path: str,
    data_dir: str,
    out: str,
    lam: Optional[float],
    config_path: Optional[str],
    output_json: bool,
):
    """
    Fine-tune a checkpoint with outlier exposure or attention regularization.

    Examples:

      vqa-anomaly finetune --method ra --model runs/base.ckpt --anomalies data/suite --out runs/ra.ckpt

      vqa-anomaly finetune --method ra --lambda 0.001 --model runs/base.ckpt --anomalies data/suite --out runs/ra3.ckpt
    """
    _finish(finetune_model(model_path, data_dir, out, method, lam, config_path), output_json)


@cli.command(name="eval")
@click.option("--config", "-c", "config_path", required=True, help="Run config JSON file")
@click.option("--models", required=True, help="Comma-separated checkpoint paths")
@click.option("--out", "-o", required=True, help="Results CSV path")
@click.option("--data", "-d", "data_dir", default=None, help="Override eval.data_dir")
@click.option("--scores", "scores_out", default=None, help="Also write per-sample scores here")
@json_option
def evaluate(
    config_path: str,
    models: str,
    out: str,
    data_dir: Optional[str],
    scores_out: Optional[str],
    output_json: bool,
):
    """
    Score checkpoints with every detector on every evaluation set.

    Examples:

      vqa-anomaly eval --config configs/toy.json --models runs/base.ckpt,runs/ra.ckpt --out runs/results.csv
    """
    checkpoints = [m.strip() for m in models.split(",") if m.strip()]

    def details(result):
        for tag, acc in result["accuracy"].items():
            click.echo(f"  • {tag}: ID val accuracy {acc:.4f}")

    _finish(evaluate_models(config_path, checkpoints, out, data_dir, scores_out), output_json, details)


@cli.command()
@click.option("--in", "results_path", required=True, help="Results CSV from 'eval'")
@json_option
def report(results_path: str, output_json: bool):
    """Print the AUROC grid (tasks x detectors) of a results file."""
    result = report_results(results_path)
    if result["success"] and not output_json:
        click.echo(result["report"])
        return
    _finish(result, output_json)


@cli.command()
@click.option("--config", "-c", "config_path", required=True, help="Run config JSON file")
@click.option("--data", "-d", "data_dir", required=True, help="Data directory from 'gen'")
@click.option("--model", "model_path", required=True, help="Base checkpoint")
@click.option("--out", "-o", required=True, help="Output CSV path")
@json_option
def select(config_path: str, data_dir: str, model_path: str, out: str, output_json: bool):
    """
    RA-fine-tune on image-only, question-only and combined anomaly sources and
    compare the MAP AUROC change on T1, T2 and T3.

    Examples:

      vqa-anomaly select --config configs/toy.json --data data/suite --model runs/base.ckpt --out runs/selection.csv
    """

    def details(result):
        for mix, row in result["deltas"].items():
            changes = ", ".join(f"{name} {delta * 100:+.1f}" for name, delta in row.items())
            click.echo(f"  • {mix}: {changes}")

    _finish(select_sources(config_path, data_dir, model_path, out), output_json, details)


@cli.command(name="verify-theorem1")
@click.option("--k", "k", type=int, required=True, help="Simplex dimension K")
@click.option("--trials", type=int, default=100, show_default=True, help="Random starts")
@click.option("--tol", type=float, default=1e-3, show_default=True, help="Allowed deviation")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for the starts")
@json_option
def verify_theorem1(k: int, trials: int, tol: float, seed: int, output_json: bool):
    """
    Check that sum log(1 - x_i) over the simplex peaks at the uniform point.

    Examples:

      vqa-anomaly verify-theorem1 --k 2
    """
    _finish(verify_uniform_optimum(k, trials, tol, seed), output_json)


@cli.command(name="export-features")
@click.option("--model", "model_path", required=True, help="Checkpoint path")
@click.option("--data", "data_file", required=True, help="Dataset JSONL file")
@click.option("--out", "-o", required=True, help="Output CSV path")
@json_option
def export_features_command(model_path: str, data_file: str, out: str, output_json: bool):
    """Export fused joint features (task label + h values per sample)."""
    _finish(export_features(model_path, data_file, out), output_json)


@cli.command()
@click.option("--config", "-c", "config_path", required=True, help="Run config JSON file")
@click.option("--out", "-o", "out_dir", required=True, help="Output directory")
@click.option("--seed", type=int, default=None, help="Override the config seed")
@click.option(
    "--method",
    "-m",
    type=click.Choice(["base", "oe", "ra", "ra-var"], case_sensitive=False),
    default="ra",
    show_default=True,
    help="Fine-tuning regime",
)
@json_option
def recipe(config_path: str, out_dir: str, seed: Optional[int], method: str, output_json: bool):
    """
    Run gen -> train -> finetune -> eval -> report as one flow.

    Examples:

      vqa-anomaly recipe --config configs/toy.json --out runs/toy
    """
    from flows.recipe_flow import recipe_flow

    try:
        outputs = recipe_flow(config_path, out_dir, seed, method)
    except AnomalyError as e:
        result = {"success": False, "exit_code": e.exit_code, "message": f"Error: {e}"}
    else:
        result = {"success": True, "exit_code": 0, "message": f"Recipe finished in {out_dir}", **outputs}

    _finish(result, output_json, lambda r: click.echo(r["report"]))


if __name__ == "__main__":
    cli()
