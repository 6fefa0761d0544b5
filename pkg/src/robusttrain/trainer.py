"""
Base training and post-training fine-tuning.

Every step of fine-tuning pairs one ID batch with one anomaly batch of the same
size. The two batches run through separate graphs and draw from separate random
streams, so with a zero regularizer weight the parameter trajectory equals plain
continued training on the ID stream.
"""

import time
from collections import defaultdict
from typing import Mapping, Sequence

import numpy as np

from src.config import stage_seed
from src.diffcore import tensor as ops
from src.diffcore.optim import opt_step
from src.diffcore.tensor import backward
from src.errors import ContractError, DataError
from src.evalbench.metrics import accuracy
from src.robusttrain.config import BASE, OE, RA, TrainConfig, TrainLog, TrainLogRow
from src.robusttrain.regularizers import oe_loss, ra_loss, ra_var_loss
from src.synthgen.world import Sample
from src.utils.console import log
from src.vqamodel.model import Model, collate, trace


def source_key(sample: Sample) -> str:
    """Mix key of an anomaly sample: its task, plus "/variant" when it has one."""
    return f"{sample.task}/{sample.variant}" if sample.variant else sample.task


def group_sources(samples: Sequence[Sample]) -> dict[str, list[Sample]]:
    groups: dict[str, list[Sample]] = defaultdict(list)
    for s in samples:
        groups[source_key(s)].append(s)
    return dict(groups)


def _check_id(samples: Sequence[Sample], what: str):
    if not samples:
        raise DataError(f"{what} is empty")
    undefined = next((s for s in samples if s.answer is None), None)
    if undefined is not None:
        raise DataError(f"{what} contains sample {undefined.sample_id} without a defined answer")


def _check_anomalies(sources: Mapping[str, Sequence[Sample]]):
    if not sources or not any(sources.values()):
        raise DataError("anomaly training data is empty")
    for key, samples in sources.items():
        for s in samples:
            if s.family != "TRAIN":
                raise DataError(f"anomaly source {key} contains {s.sample_id}, which is not TRAIN-family")
            if s.answer is not None:
                raise DataError(f"anomaly source {key} contains {s.sample_id} with a defined answer")


def _batches(n: int, batch_size: int, rng: np.random.Generator) -> list[np.ndarray]:
    order = rng.permutation(n)
    return [order[i : i + batch_size] for i in range(0, n, batch_size)]


def _quota(weights: Mapping[str, float], size: int) -> dict[str, int]:
    """Largest-remainder allocation of `size` slots by weight."""
    keys = sorted(k for k, w in weights.items() if w > 0)
    total = sum(weights[k] for k in keys)
    exact = {k: size * weights[k] / total for k in keys}
    counts = {k: int(np.floor(exact[k])) for k in keys}
    by_remainder = sorted(keys, key=lambda k: (-(exact[k] - counts[k]), k))
    for k in by_remainder[: size - sum(counts.values())]:
        counts[k] += 1
    return counts


def _anomaly_batch(
    sources: Mapping[str, Sequence[Sample]],
    weights: Mapping[str, float],
    size: int,
    rng: np.random.Generator,
) -> list[Sample]:
    batch = []
    for key, count in _quota(weights, size).items():
        pool = sources[key]
        picks = rng.choice(len(pool), size=count, replace=count > len(pool))
        batch.extend(pool[int(i)] for i in picks)
    return batch


def _task_step(model: Model, samples: Sequence[Sample]) -> tuple[float, dict[str, np.ndarray]]:
    batch = collate(samples, model.config)
    graph, traced = trace(model.config, model.params, batch)
    loss = ops.cross_entropy(traced.logits, batch.answers)
    return loss.data.item(), backward(graph, loss)


def _regularizer_step(
    model: Model, samples: Sequence[Sample], cfg: TrainConfig
) -> tuple[float, dict[str, np.ndarray]]:
    graph, traced = trace(model.config, model.params, collate(samples, model.config))
    if cfg.method == OE:
        loss = oe_loss(traced, cfg.lam_oe)
    elif cfg.method == RA:
        loss = ra_loss(traced, cfg.lam)
    else:
        loss = ra_var_loss(traced, cfg.lam_var)
    return loss.data.item(), backward(graph, loss)


def _val_accuracy(model: Model, id_val: Sequence[Sample] | None) -> float:
    return accuracy(model, id_val) if id_val else float("nan")


def train_base(
    model: Model,
    id_train: Sequence[Sample],
    id_val: Sequence[Sample],
    cfg: TrainConfig,
) -> tuple[Model, TrainLog]:
    """
    Minimise answer cross-entropy with shuffled mini-batches.

    Returns the parameters of the epoch with the best ID validation accuracy (the
    earliest on ties) together with the full log.
    """
    if cfg.method != BASE:
        raise ContractError(f"train_base runs method BASE, got {cfg.method}")
    _check_id(id_train, "training data")
    _check_id(id_val, "validation data")

    rng = np.random.default_rng(stage_seed(cfg.seed, "train"))
    state = cfg.optim_state()
    train_log = TrainLog()
    best_model, best_acc = model, _val_accuracy(model, id_val)
    start = time.perf_counter()

    for epoch in range(1, cfg.epochs + 1):
        losses = []
        for idx in _batches(len(id_train), cfg.batch_size, rng):
            loss, grads = _task_step(model, [id_train[i] for i in idx])
            model = model.with_params(opt_step(state, model.params, grads))
            losses.append(loss)

        acc = _val_accuracy(model, id_val)
        train_log.append(
            TrainLogRow(epoch, float(np.mean(losses)), 0.0, acc, time.perf_counter() - start)
        )
        log(f"epoch {epoch}/{cfg.epochs}: loss {np.mean(losses):.4f}, val accuracy {acc:.4f}")
        if acc > best_acc:
            best_model, best_acc = model, acc

    return best_model, train_log


def finetune(
    model: Model,
    id_train: Sequence[Sample],
    anomaly_train: Mapping[str, Sequence[Sample]] | Sequence[Sample],
    cfg: TrainConfig,
    id_val: Sequence[Sample] | None = None,
) -> tuple[Model, TrainLog]:
    """
    Continue training with an anomaly regularizer (OE, RA or RA_VAR).

    `anomaly_train` maps mix sources ("T1", "T4/nonvisual", ...) to TRAIN-family
    anomalies; a flat list is grouped by source. Each anomaly batch is composed
    from the sources in proportion to cfg.mix. Method BASE ignores the anomalies
    and continues base training. Returns the final parameters.
    """
    _check_id(id_train, "training data")
    weights: dict[str, float] = {}
    if cfg.method != BASE:
        if not isinstance(anomaly_train, Mapping):
            anomaly_train = group_sources(anomaly_train)
        _check_anomalies(anomaly_train)
        weights = {k: w for k, w in cfg.mix.items() if w > 0}
        missing = sorted(k for k in weights if not anomaly_train.get(k))
        if missing:
            raise DataError(f"anomaly mix names source {missing[0]!r} but no such samples were given")

    id_rng = np.random.default_rng(stage_seed(cfg.seed, "finetune/id"))
    anomaly_rng = np.random.default_rng(stage_seed(cfg.seed, "finetune/anomaly"))
    state = cfg.optim_state()
    train_log = TrainLog()
    start = time.perf_counter()

    for epoch in range(1, cfg.epochs + 1):
        losses, penalties = [], []
        for idx in _batches(len(id_train), cfg.batch_size, id_rng):
            loss, grads = _task_step(model, [id_train[i] for i in idx])
            if cfg.method != BASE:
                anomalies = _anomaly_batch(anomaly_train, weights, len(idx), anomaly_rng)
                penalty, reg_grads = _regularizer_step(model, anomalies, cfg)
                grads = {name: grads[name] + reg_grads[name] for name in grads}
                penalties.append(penalty)
            model = model.with_params(opt_step(state, model.params, grads))
            losses.append(loss)

        acc = _val_accuracy(model, id_val)
        penalty = float(np.mean(penalties)) if penalties else 0.0
        train_log.append(
            TrainLogRow(epoch, float(np.mean(losses)), penalty, acc, time.perf_counter() - start)
        )
        log(
            f"{cfg.method} epoch {epoch}/{cfg.epochs}: loss {np.mean(losses):.4f}, "
            f"regularizer {penalty:.3e}, val accuracy {acc:.4f}"
        )

    return model, train_log


