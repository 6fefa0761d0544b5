"""Training, fine-tuning and feature-export commands - CLI and flow compatible."""

from dataclasses import replace
from pathlib import Path
from typing import Any, Dict

from src.commands.common import failure, success
from src.config import RunConfig, config_from_dict, load_config
from src.errors import AnomalyError, ConfigError
from src.robusttrain.config import BASE, TrainConfig, method_from_name
from src.robusttrain.regularizers import attention_kl_uniform
from src.robusttrain.trainer import finetune, train_base
from src.synthgen.dataset import id_path, read_dataset, read_mix_sources
from src.synthgen.world import world_from_config
from src.vqamodel.checkpoint import load_checkpoint, save_checkpoint
from src.vqamodel.features import export_joint_features
from src.vqamodel.model import ModelConfig, init_model


def log_path(checkpoint: str | Path) -> Path:
    """Training log written next to a checkpoint: base.ckpt -> base.log.csv."""
    return Path(checkpoint).with_suffix(".log.csv")


def _save(model, out: str, config: RunConfig):
    save_checkpoint(
        model, out, run_config=config.to_dict(), config_hash=config.config_hash(), seed=config.seed
    )


def train_model(
    config_path: str, data_dir: str, out: str, seed: int | None = None
) -> Dict[str, Any]:
    """
    Train a base model on the ID split of a data suite.

    Args:
        config_path: RunConfig JSON file
        data_dir: Suite directory written by generate_data()
        out: Checkpoint path; the training log goes to <out stem>.log.csv
        seed: Optional override of the config seed

    Returns:
        Dictionary with results:
        {
            "success": bool,
            "exit_code": int,
            "checkpoint": str,
            "train_log": str,
            "val_accuracy": float,
            "message": str
        }
    """
    try:
        config = load_config(config_path, seed)
        spec = world_from_config(config.world)
        id_train = read_dataset(id_path(data_dir, "train"))
        id_val = read_dataset(id_path(data_dir, "val"))

        model = init_model(ModelConfig.from_world(config.model, spec, config.seed))
        model, train_log = train_base(
            model, id_train, id_val, TrainConfig.for_base(config.train, config.seed)
        )
        _save(model, out, config)
        train_log.write(log_path(out))
    except (AnomalyError, OSError) as e:
        return failure(e, checkpoint=out)

    best = max((r.val_accuracy for r in train_log.rows), default=float("nan"))
    return success(
        f"Trained {out} (best ID val accuracy {best:.4f})",
        checkpoint=out,
        train_log=str(log_path(out)),
        val_accuracy=best,
    )


def finetune_model(
    model_path: str,
    data_dir: str,
    out: str,
    method: str = "ra",
    lam: float | None = None,
    config_path: str | None = None,
) -> Dict[str, Any]:
    """
    Fine-tune a checkpoint with OE, RA or RA-VAR (or continue base training).

    The run config embedded in the checkpoint is reused unless config_path is given.
    ID data and TRAIN-family anomaly sources are read from data_dir.

    Returns:
        Dictionary with results:
        {
            "success": bool,
            "exit_code": int,
            "checkpoint": str,
            "train_log": str,
            "method": str,
            "lambda": float,
            "attention_kl": dict (anomaly-pool attention KL to uniform, before and after),
            "message": str
        }
    """
    try:
        model, header = load_checkpoint(model_path)
        if config_path is not None:
            config = load_config(config_path)
        elif header.get("run_config") is not None:
            config = config_from_dict(header["run_config"])
        else:
            raise ConfigError(f"{model_path} embeds no run config; pass --config")

        section = replace(
            config.finetune, method=method.lower(), lam=config.finetune.lam if lam is None else lam
        )
        config = replace(config, finetune=section)
        cfg = TrainConfig.for_finetune(section, config.train, config.seed)

        id_train = read_dataset(id_path(data_dir, "train"))
        id_val = read_dataset(id_path(data_dir, "val"))
        sources = {} if cfg.method == BASE else read_mix_sources(data_dir, cfg.mix)

        tuned, train_log = finetune(model, id_train, sources, cfg, id_val)
        _save(tuned, out, config)
        train_log.write(log_path(out))
        anomalies = [s for samples in sources.values() for s in samples]
        kl = (
            {"before": attention_kl_uniform(model, anomalies), "after": attention_kl_uniform(tuned, anomalies)}
            if anomalies
            else {}
        )
    except (AnomalyError, OSError) as e:
        return failure(e, checkpoint=out, method=method)

    final = train_log.rows[-1].val_accuracy if train_log.rows else float("nan")
    return success(
        f"Fine-tuned {model_path} -> {out} with {cfg.method} (ID val accuracy {final:.4f})",
        checkpoint=out,
        train_log=str(log_path(out)),
        method=method_from_name(method),
        attention_kl=kl,
        **{"lambda": cfg.lam},
    )


def export_features(model_path: str, data_file: str, out: str) -> Dict[str, Any]:
    """
    Write the fused joint features of every sample of a dataset file.

    Returns:
        Dictionary with results:
        {
            "success": bool,
            "exit_code": int,
            "output": str,
            "rows": int,
            "message": str
        }
    """
    try:
        model, _ = load_checkpoint(model_path)
        samples = read_dataset(data_file)
        export_joint_features(model, samples, out)
    except (AnomalyError, OSError) as e:
        return failure(e, output=out, rows=0)

    return success(f"Exported {len(samples)} joint feature rows to {out}", output=out, rows=len(samples))
