"""
Fine-tuning losses on anomaly batches and the measurements used to check them.

All attention terms are taken over unmasked (object, token) cells only.
"""

from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from src.diffcore import tensor as ops
from src.diffcore.tensor import Tensor
from src.synthgen.world import Sample
from src.vqamodel.model import Model, Traced, forward


def ra_loss(traced: Traced, lam: float) -> Tensor:
    """-lam * sum over heads and unmasked cells of log(1 - A_ij), averaged over the batch."""
    keep = traced.cell_mask.astype(np.float64)
    total = ops.sum(ops.log1m(traced.attention) * keep)
    return total * (-lam / traced.attention.shape[0])


def ra_var_loss(traced: Traced, lam_var: float) -> Tensor:
    """lam_var * variance of A_ij over unmasked cells, averaged over batch and heads."""
    keep = traced.cell_mask.astype(np.float64)
    cells = keep.sum(axis=(2, 3), keepdims=True)  # (B, H, 1, 1)
    centred = (traced.attention - 1.0 / cells) * keep
    per_head = ops.sum(centred * centred * (1.0 / cells), axis=(2, 3))
    batch, heads = per_head.shape
    return ops.sum(per_head) * (lam_var / (batch * heads))


def oe_loss(traced: Traced, lam_oe: float) -> Tensor:
    """lam_oe * cross-entropy of the answer softmax against the uniform distribution."""
    n = traced.logits.shape[-1]
    uniform = np.full(traced.logits.shape, 1.0 / n)
    return ops.soft_cross_entropy(traced.logits, uniform) * lam_oe


def ra_objective(x: np.ndarray) -> float:
    """sum_i log(1 - x_i) for a point on the simplex; maximal at the uniform point."""
    return float(np.sum(np.log1p(-np.asarray(x, dtype=np.float64))))


def output_kl_uniform(model: Model, samples: Sequence[Sample]) -> float:
    """Mean KL(uniform || softmax(logits)) over samples."""
    logits = forward(model, samples).logits
    log_p = logits - logsumexp(logits, axis=-1, keepdims=True)
    n = logits.shape[-1]
    return float(np.mean(-np.log(n) - log_p.mean(axis=-1)))


def attention_kl_uniform(model: Model, samples: Sequence[Sample]) -> float:
    """Mean over samples and heads of KL(uniform over unmasked cells || A)."""
    out = forward(model, samples)
    keep = out.cell_mask
    cells = keep.sum(axis=(2, 3))
    with np.errstate(divide="ignore"):
        log_a = np.where(keep, np.log(np.where(keep, out.attention, 1.0)), 0.0)
    kl = -np.log(cells) - log_a.sum(axis=(2, 3)) / cells
    return float(kl.mean())
