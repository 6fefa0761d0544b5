"""Which anomaly sources does fine-tuning need? Compare detection before and after."""

from dataclasses import replace
from pathlib import Path
from typing import Mapping, Sequence

import pandas as pd

from src.detect.scores import score_forward
from src.evalbench.metrics import accuracy, auroc
from src.robusttrain.config import TrainConfig
from src.robusttrain.trainer import finetune
from src.synthgen.world import Sample
from src.utils.console import log
from src.vqamodel.model import Model, forward

# Image-side only, question-side only, and both.
SELECTION_MIXES = {
    "image": {"T1": 1.0},
    "question": {"T2": 1.0},
    "both": {"T1": 1.0, "T2": 1.0},
}
SELECTION_EVAL_SETS = ("T1/EVAL", "T2/EVAL", "T3/EVAL")
SELECTION_COLUMNS = ["mix", "eval_set", "before", "after", "delta", "accuracy_delta"]


def detection_aurocs(
    model: Model,
    id_val: Sequence[Sample],
    eval_sets: Mapping[str, Sequence[Sample]],
    kind: str = "MAP",
    T: float = 1.0,
) -> dict[str, float]:
    """AUROC of one detector per named evaluation set."""
    id_scores = score_forward(forward(model, id_val), kind, T)
    return {
        name: auroc(id_scores, score_forward(forward(model, samples), kind, T))
        for name, samples in eval_sets.items()
    }


def selection_study(
    model: Model,
    id_train: Sequence[Sample],
    id_val: Sequence[Sample],
    sources: Mapping[str, Sequence[Sample]],
    mixes: Mapping[str, Mapping[str, float]],
    eval_sets: Mapping[str, Sequence[Sample]],
    cfg: TrainConfig,
    kind: str = "MAP",
) -> pd.DataFrame:
    """
    Fine-tune once per named source mix and report per-set AUROC change.

    Returns one row per (mix, eval set) with columns mix, eval_set, before,
    after, delta and accuracy_delta; AUROC values are fractions.
    """
    before = detection_aurocs(model, id_val, eval_sets, kind)
    base_accuracy = accuracy(model, id_val)
    rows = []
    for name, mix in mixes.items():
        log(f"Selection study: fine-tuning with mix {name} {dict(mix)}")
        tuned, _ = finetune(model, id_train, sources, replace(cfg, mix=dict(mix)))
        after = detection_aurocs(tuned, id_val, eval_sets, kind)
        tuned_accuracy = accuracy(tuned, id_val)
        for set_name in eval_sets:
            rows.append(
                {
                    "mix": name,
                    "eval_set": set_name,
                    "before": before[set_name],
                    "after": after[set_name],
                    "delta": after[set_name] - before[set_name],
                    "accuracy_delta": tuned_accuracy - base_accuracy,
                }
            )
    return pd.DataFrame(rows, columns=SELECTION_COLUMNS)


def write_selection(frame: pd.DataFrame, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.4f", lineterminator="\n")
    return path
