"""Cross-modal attention answer classifier."""

from .checkpoint import load_checkpoint, save_checkpoint
from .features import export_joint_features, joint_feature_frame
from .model import (
    ATTENTION_VARIANTS,
    CONTEXT,
    PAIRWISE,
    Batch,
    ForwardOut,
    Model,
    ModelConfig,
    Traced,
    collate,
    forward,
    glorot_bound,
    init_model,
    parameter_shapes,
    predict,
    trace,
)

__all__ = [
    "ATTENTION_VARIANTS",
    "CONTEXT",
    "PAIRWISE",
    "Batch",
    "ForwardOut",
    "Model",
    "ModelConfig",
    "Traced",
    "collate",
    "forward",
    "trace",
    "predict",
    "init_model",
    "glorot_bound",
    "parameter_shapes",
    "save_checkpoint",
    "load_checkpoint",
    "export_joint_features",
    "joint_feature_frame",
]
