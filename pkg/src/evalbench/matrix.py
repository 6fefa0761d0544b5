"""
The detector x task x family experiment matrix.

Each anomaly set is fused with the ID validation split and scored by every
detector of every checkpoint. Detectors with a "(T)" suffix use the temperature
chosen on the calibration split plus the pooled TRAIN-family anomalies.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from src.detect.calibration import calibrate
from src.detect.scores import ScoreRecord, parse_detector, score_forward, write_scores
from src.errors import ResolutionError
from src.evalbench.metrics import accuracy, auroc
from src.evalbench.results import ResultRow, ResultTable
from src.synthgen.dataset import id_path, parse_set_name, read_dataset, suite_path
from src.synthgen.world import Sample
from src.utils.console import log
from src.vqamodel.checkpoint import load_checkpoint
from src.vqamodel.model import ForwardOut, Model, forward


@dataclass(frozen=True)
class MatrixSpec:
    checkpoints: tuple[str, ...]
    data_dir: str
    detectors: tuple[str, ...] = ("MSP", "MSP(T)", "MAP", "MAP(T)")
    eval_sets: tuple[str, ...] = ("T1/EVAL", "T2/EVAL", "T3/EVAL", "T4/EVAL", "T5/EVAL")
    calibration_sets: tuple[str, ...] = ("T1/TRAIN", "T2/TRAIN", "T3/TRAIN", "T4/TRAIN", "T5/TRAIN")
    temperatures: tuple[float, ...] = (1.0, 2.0, 5.0, 10.0, 50.0, 100.0, 1000.0)
    reduce: str = "mean"
    out: str | None = None
    scores_out: str | None = None
    config_hash: str = ""


@dataclass
class _Scored:
    """Forward outputs of one model on one dataset, rescored per detector and T."""

    samples: list[Sample]
    out: ForwardOut
    reduce: str
    cache: dict[tuple[str, float], np.ndarray] = field(default_factory=dict)

    def scores(self, kind: str, T: float) -> np.ndarray:
        key = (kind, T)
        if key not in self.cache:
            self.cache[key] = score_forward(self.out, kind, T, self.reduce)
        return self.cache[key]


def model_tag(checkpoint: str | Path) -> str:
    return Path(checkpoint).stem


def _resolve(spec: MatrixSpec) -> dict[str, Path]:
    """Every file the run needs, checked up front."""
    for checkpoint in spec.checkpoints:
        if not Path(checkpoint).exists():
            raise ResolutionError(checkpoint, "checkpoint")
    paths = {"ID/val": id_path(spec.data_dir, "val")}
    if any(parse_detector(d)[1] for d in spec.detectors):
        paths["ID/calib"] = id_path(spec.data_dir, "calib")
        paths |= {name: suite_path(spec.data_dir, *parse_set_name(name)) for name in spec.calibration_sets}
    paths |= {name: suite_path(spec.data_dir, *parse_set_name(name)) for name in spec.eval_sets}
    for path in paths.values():
        if not path.exists():
            raise ResolutionError(str(path), "dataset")
    return paths


def _score_model(
    model: Model, datasets: dict[str, list[Sample]], reduce: str
) -> dict[str, _Scored]:
    return {name: _Scored(samples, forward(model, samples), reduce) for name, samples in datasets.items()}


def run_matrix(spec: MatrixSpec) -> ResultTable:
    """Score every (checkpoint, detector, eval set); write spec.out if given."""
    paths = _resolve(spec)
    datasets = {name: read_dataset(path) for name, path in paths.items()}
    table = ResultTable(config_hash=spec.config_hash)
    dump: list[ScoreRecord] = []

    for checkpoint in spec.checkpoints:
        tag = model_tag(checkpoint)
        model, _ = load_checkpoint(checkpoint)
        log(f"Scoring {tag} on {len(datasets)} datasets")
        scored = _score_model(model, datasets, spec.reduce)
        id_val = scored["ID/val"]

        table.rows.append(
            ResultRow("accuracy", tag, "", None, "ID", "val", accuracy(model, id_val.samples), len(id_val.samples), 0)
        )

        for detector in spec.detectors:
            kind, calibrated = parse_detector(detector)
            T = 1.0
            if calibrated:
                calib_id = scored["ID/calib"]
                calib_anom = [scored[name] for name in spec.calibration_sets]
                result = calibrate(
                    lambda t: calib_id.scores(kind, t),
                    lambda t: np.concatenate([s.scores(kind, t) for s in calib_anom]),
                    spec.temperatures,
                )
                T = result.T
                log(f"{tag} {detector}: T*={T:g}, delta*={result.delta:.4f}")

            id_scores = id_val.scores(kind, T)
            for name in spec.eval_sets:
                task, family, variant = parse_set_name(name)
                anomalies = scored[name]
                anom_scores = anomalies.scores(kind, T)
                table.rows.append(
                    ResultRow(
                        "auroc",
                        tag,
                        detector,
                        T,
                        task,
                        f"{family}-{variant}" if variant else family,
                        auroc(id_scores, anom_scores),
                        len(id_scores),
                        len(anom_scores),
                    )
                )
                if spec.scores_out:
                    dump.extend(_records(anomalies.samples, anom_scores, f"{tag}:{detector}", T))
            if spec.scores_out:
                dump.extend(_records(id_val.samples, id_scores, f"{tag}:{detector}", T))

    if spec.out:
        table.write(spec.out)
        log(f"Wrote {len(table)} result rows to {spec.out}")
    if spec.scores_out:
        write_scores(dump, spec.scores_out)
    return table


def _records(samples: Sequence[Sample], scores: np.ndarray, detector: str, T: float) -> list[ScoreRecord]:
    return [
        ScoreRecord(s.sample_id, s.task, s.is_anomaly, detector, float(T), float(v))
        for s, v in zip(samples, scores)
    ]
