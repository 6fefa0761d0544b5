# flows/recipe_flow.py
from pathlib import Path
from typing import Any

from prefect import flow, task

from src.commands import (
    evaluate_models,
    finetune_model,
    generate_data,
    report_results,
    train_model,
)
from src.errors import AnomalyError


class StageFailed(AnomalyError):
    """A recipe stage returned an unsuccessful result."""


def _checked(stage: str, result: dict[str, Any]) -> dict[str, Any]:
    if not result["success"]:
        error = StageFailed(f"{stage}: {result['message']}")
        error.exit_code = result.get("exit_code", 1)
        raise error
    return result


@task
def generate_task(config_path: str, data_dir: str, seed: int | None) -> dict[str, Any]:
    """Write the data suite."""
    return _checked("gen", generate_data(config_path, data_dir, seed))


@task
def train_task(config_path: str, data_dir: str, checkpoint: str, seed: int | None) -> dict[str, Any]:
    """Train the base model."""
    return _checked("train", train_model(config_path, data_dir, checkpoint, seed))


@task
def finetune_task(base: str, data_dir: str, checkpoint: str, method: str) -> dict[str, Any]:
    """Fine-tune the base model with the config embedded in its checkpoint."""
    return _checked("finetune", finetune_model(base, data_dir, checkpoint, method=method))


@task
def eval_task(
    config_path: str, checkpoints: list[str], data_dir: str, results: str
) -> dict[str, Any]:
    """Score all checkpoints and write the results file."""
    return _checked("eval", evaluate_models(config_path, checkpoints, results, data_dir=data_dir))


@task
def report_task(results: str) -> dict[str, Any]:
    return _checked("report", report_results(results))


@flow(name="VQA Anomaly Recipe")
def recipe_flow(
    config_path: str,
    out_dir: str,
    seed: int | None = None,
    method: str = "ra",
) -> dict[str, Any]:
    """
    gen -> train -> finetune -> eval -> report, all under out_dir.

    Args:
        config_path: RunConfig JSON file
        out_dir: Receives data/, base.ckpt, <method>.ckpt and results.csv
        seed: Optional override of the config seed
        method: Fine-tuning method (base, oe, ra, ra-var)

    Returns:
        Dictionary with the output paths and the rendered report
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data_dir = str(out / "data")
    base = str(out / "base.ckpt")
    tuned = str(out / f"{method.lower().replace('_', '-')}.ckpt")
    results = str(out / "results.csv")

    generate_task(config_path, data_dir, seed)
    train_task(config_path, data_dir, base, seed)
    finetune_task(base, data_dir, tuned, method)
    eval_task(config_path, [base, tuned], data_dir, results)
    report = report_task(results)

    return {
        "data_dir": data_dir,
        "checkpoints": [base, tuned],
        "results": results,
        "report": report["report"],
    }
