"""Choose the detection temperature T* and threshold delta* on calibration data."""

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from src.errors import CalibrationError
from src.evalbench.metrics import auroc

ScoresFn = Callable[[float], np.ndarray]

# AUROC gains smaller than this do not displace an earlier (smaller) temperature.
_TIE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Calibration:
    T: float
    delta: float
    auroc: float
    by_temperature: dict[float, float] = field(default_factory=dict)


def best_threshold(id_scores: np.ndarray, anom_scores: np.ndarray) -> float:
    """
    Threshold maximising TPR - FPR under the rule "anomalous iff S <= delta".

    Candidates are the observed scores; ties keep the smallest delta.
    """
    id_scores = np.sort(np.asarray(id_scores, dtype=np.float64))
    anom_scores = np.sort(np.asarray(anom_scores, dtype=np.float64))
    candidates = np.unique(np.concatenate([id_scores, anom_scores]))
    tpr = np.searchsorted(anom_scores, candidates, side="right") / len(anom_scores)
    fpr = np.searchsorted(id_scores, candidates, side="right") / len(id_scores)
    # argmax returns the first maximum, i.e. the smallest delta
    return float(candidates[int(np.argmax(tpr - fpr))])


def calibrate(
    id_scores_fn: ScoresFn, anom_scores_fn: ScoresFn, grid: Sequence[float]
) -> Calibration:
    """
    Pick T* from grid maximising AUROC (smallest T on ties), then delta* at T*.

    Each callable maps a temperature to the scores of its calibration set.
    """
    if len(grid) == 0:
        raise CalibrationError("temperature grid is empty")

    by_temperature: dict[float, float] = {}
    best_t, best_auc = None, -1.0
    for t in sorted(float(x) for x in grid):
        id_scores, anom_scores = id_scores_fn(t), anom_scores_fn(t)
        if len(id_scores) == 0 or len(anom_scores) == 0:
            raise CalibrationError("calibration sets must be nonempty")
        value = auroc(id_scores, anom_scores)
        by_temperature[t] = value
        if value > best_auc + _TIE_TOLERANCE:
            best_t, best_auc = t, value

    delta = best_threshold(id_scores_fn(best_t), anom_scores_fn(best_t))
    return Calibration(best_t, delta, best_auc, by_temperature)


def calibrate_per_task(
    id_scores_fn: ScoresFn,
    anom_scores_fns: dict[str, ScoresFn],
    grid: Sequence[float],
) -> dict[str, Calibration]:
    """Separate calibration per anomaly task (ablation; the default pools all tasks)."""
    return {
        task: calibrate(id_scores_fn, fn, grid) for task, fn in sorted(anom_scores_fns.items())
    }
