"""Command functions shared by the CLI and the recipe flow."""

from .evaluation import evaluate_models, report_results
from .generate import generate_data
from .selection import select_sources
from .theorem import verify_uniform_optimum
from .training import export_features, finetune_model, train_model

__all__ = [
    "generate_data",
    "train_model",
    "finetune_model",
    "export_features",
    "evaluate_models",
    "report_results",
    "select_sources",
    "verify_uniform_optimum",
]
