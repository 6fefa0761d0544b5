"""Base training, anomaly-aware fine-tuning and the uniform-optimum check."""

from .config import (
    BASE,
    METHODS,
    OE,
    RA,
    RA_VAR,
    TrainConfig,
    TrainLog,
    TrainLogRow,
    method_from_name,
)
from .regularizers import (
    attention_kl_uniform,
    oe_loss,
    output_kl_uniform,
    ra_loss,
    ra_objective,
    ra_var_loss,
)
from .theorem import Theorem1Report, verify_theorem1
from .trainer import finetune, group_sources, source_key, train_base

__all__ = [
    "BASE",
    "OE",
    "RA",
    "RA_VAR",
    "METHODS",
    "TrainConfig",
    "TrainLog",
    "TrainLogRow",
    "method_from_name",
    "train_base",
    "finetune",
    "group_sources",
    "source_key",
    "ra_loss",
    "ra_var_loss",
    "oe_loss",
    "ra_objective",
    "output_kl_uniform",
    "attention_kl_uniform",
    "verify_theorem1",
    "Theorem1Report",
]
