"""Minimal reverse-mode autodiff and Adam-family optimizers."""

from .gradcheck import GradCheckReport, gradcheck
from .kernels import softmax
from .optim import OptimState, opt_step
from .tensor import Graph, Tensor, backward

__all__ = [
    "Graph",
    "Tensor",
    "backward",
    "softmax",
    "OptimState",
    "opt_step",
    "gradcheck",
    "GradCheckReport",
]
