"""
Confidence scores: maximum softmax probability and maximum attention probability.

Higher scores mean "more normal". Temperature only ever enters here, at detection
time; training always runs at T = 1.
"""

from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from src.diffcore.kernels import check_temperature, softmax
from src.errors import ContractError, ParseError, ResolutionError
from src.synthgen.world import Sample
from src.vqamodel.model import Model, forward

KINDS = ("MSP", "MAP")
REDUCTIONS = ("mean", "max")
SCORE_COLUMNS = ["sample_id", "task", "is_anomaly", "detector", "T", "score"]


@dataclass(frozen=True)
class DetectorSpec:
    kind: str
    T: float = 1.0
    delta: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ContractError(f"unknown detector kind {self.kind!r}")
        check_temperature(self.T)


@dataclass(frozen=True)
class ScoreRecord:
    sample_id: str
    task: str
    is_anomaly: bool
    detector: str
    T: float
    score: float


def parse_detector(label: str) -> tuple[str, bool]:
    """Split a detector label into its kind and whether it uses a calibrated T.

    "MSP" -> ("MSP", False); "MAP(T)" -> ("MAP", True).
    """
    calibrated = label.endswith("(T)")
    kind = label[:-3] if calibrated else label
    if kind not in KINDS:
        raise ContractError(f"unknown detector {label!r}; expected MSP, MSP(T), MAP or MAP(T)")
    return kind, calibrated


def msp(logits: np.ndarray, T: float = 1.0) -> np.ndarray | float:
    """Max class probability of softmax(logits / T) over the last axis."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.shape[-1] < 2:
        raise ContractError("MSP needs at least two answer candidates")
    scores = softmax(logits, temperature=T).max(axis=-1)
    return float(scores) if scores.ndim == 0 else scores


def map_score(
    attention_logits: np.ndarray,
    mask: np.ndarray | None = None,
    T: float = 1.0,
    reduce: str = "mean",
) -> np.ndarray | float:
    """
    Maximum attention probability.

    attention_logits has shape (..., H, K, M). Each head is softmaxed jointly over
    its unmasked K*M cells, the largest cell is taken per head and the per-head
    maxima are averaged (or, with reduce="max", maximised).
    """
    if reduce not in REDUCTIONS:
        raise ContractError(f"unknown head reduction {reduce!r}")
    a = np.asarray(attention_logits, dtype=np.float64)
    if a.ndim < 3:
        raise ContractError("attention logits need (heads, K, M) axes")
    flat_shape = a.shape[:-2] + (a.shape[-2] * a.shape[-1],)
    flat_mask = None
    if mask is not None:
        flat_mask = np.broadcast_to(np.asarray(mask, dtype=bool), a.shape).reshape(flat_shape)

    per_head = softmax(a.reshape(flat_shape), temperature=T, mask=flat_mask).max(axis=-1)
    scores = per_head.mean(axis=-1) if reduce == "mean" else per_head.max(axis=-1)
    return float(scores) if scores.ndim == 0 else scores


def detect(spec: DetectorSpec, score: float) -> int:
    """1 (anomalous) iff score <= delta."""
    return int(score <= spec.delta)


def score_forward(out, kind: str, T: float = 1.0, reduce: str = "mean") -> np.ndarray:
    """Scores for every sample of a ForwardOut."""
    if kind == "MSP":
        return np.atleast_1d(msp(out.logits, T))
    return np.atleast_1d(map_score(out.attention_logits, out.cell_mask, T, reduce))


def score_samples(
    model: Model,
    samples: Sequence[Sample],
    spec: DetectorSpec,
    detector: str | None = None,
    reduce: str = "mean",
) -> list[ScoreRecord]:
    scores = score_forward(forward(model, samples), spec.kind, spec.T, reduce)
    label = detector or spec.kind
    return [
        ScoreRecord(s.sample_id, s.task, s.is_anomaly, label, float(spec.T), float(score))
        for s, score in zip(samples, scores)
    ]


def write_scores(records: Sequence[ScoreRecord], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame([asdict(r) for r in records], columns=SCORE_COLUMNS)
    frame["is_anomaly"] = frame["is_anomaly"].astype(int)
    frame.to_csv(path, index=False)
    return path


def read_scores(path: str | Path) -> list[ScoreRecord]:
    path = Path(path)
    if not path.exists():
        raise ResolutionError(str(path), "score dump")
    frame = pd.read_csv(path, dtype={"sample_id": str, "task": str, "detector": str})
    if list(frame.columns) != SCORE_COLUMNS:
        raise ParseError(f"score dump columns {list(frame.columns)} != {SCORE_COLUMNS}", 1)
    return [
        ScoreRecord(row.sample_id, row.task, bool(row.is_anomaly), row.detector, float(row.T), float(row.score))
        for row in frame.itertuples(index=False)
    ]
