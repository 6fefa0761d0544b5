"""Detection metrics and the experiment matrix."""

from .metrics import accuracy, auroc

__all__ = ["auroc", "accuracy"]
