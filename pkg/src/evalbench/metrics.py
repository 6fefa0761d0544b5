"""Threshold-free detection metric and answer accuracy."""

from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from src.errors import DataError, DomainError
from src.synthgen.world import Sample
from src.vqamodel.model import Model, predict


def auroc(id_scores: Sequence[float], anomaly_scores: Sequence[float]) -> float:
    """
    P(S_id > S_anom) + 0.5 * P(S_id = S_anom), via the midrank (Mann-Whitney) statistic.

    Higher scores are taken to mean "more normal", so 1.0 is perfect separation and
    0.5 is an uninformative detector.
    """
    id_scores = np.asarray(id_scores, dtype=np.float64).ravel()
    anomaly_scores = np.asarray(anomaly_scores, dtype=np.float64).ravel()
    n, m = len(id_scores), len(anomaly_scores)
    if n == 0 or m == 0:
        raise DomainError("AUROC needs at least one ID and one anomaly score")

    ranks = rankdata(np.concatenate([id_scores, anomaly_scores]), method="average")
    u = ranks[:n].sum() - n * (n + 1) / 2.0
    return float(u / (n * m))


def accuracy(model: Model, dataset: Sequence[Sample]) -> float:
    """Fraction of samples whose argmax prediction equals the stored answer."""
    if not dataset:
        raise DataError("accuracy needs at least one sample")
    if any(s.answer is None for s in dataset):
        raise DataError("accuracy needs defined answers for every sample")
    answers = np.array([s.answer for s in dataset])
    return float(np.mean(predict(model, dataset) == answers))
