"""Anomaly scores, calibration and the thresholded detector."""

from .calibration import Calibration, best_threshold, calibrate, calibrate_per_task
from .scores import (
    KINDS,
    DetectorSpec,
    ScoreRecord,
    detect,
    map_score,
    msp,
    parse_detector,
    read_scores,
    score_forward,
    score_samples,
    write_scores,
)

__all__ = [
    "KINDS",
    "DetectorSpec",
    "ScoreRecord",
    "Calibration",
    "msp",
    "map_score",
    "detect",
    "parse_detector",
    "score_forward",
    "score_samples",
    "write_scores",
    "read_scores",
    "calibrate",
    "calibrate_per_task",
    "best_threshold",
]
