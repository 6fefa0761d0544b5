"""Plain numpy kernels shared by the autodiff ops and the detectors."""

import numpy as np

from src.errors import DomainError

# Stand-in for -inf on masked logits; exp() of it underflows to an exact 0.
MASK_SENTINEL = -1e30


def check_temperature(temperature: float):
    if not temperature > 0:
        raise DomainError(f"temperature must be positive, got {temperature}")


def softmax(
    logits: np.ndarray,
    temperature: float = 1.0,
    mask: np.ndarray | None = None,
) -> np.ndarray:
    """
    Masked, temperature-scaled softmax over the last axis.

    Args:
        logits: Array of logits; leading axes are treated as a batch
        temperature: Divisor applied to the logits before normalisation (T > 0)
        mask: Optional boolean array broadcastable to logits; False entries get
            probability exactly 0

    Returns:
        Array of the same shape whose unmasked entries sum to 1 along the last axis
    """
    check_temperature(temperature)
    x = np.asarray(logits, dtype=np.float64)
    if mask is None:
        keep = np.ones(x.shape, dtype=bool)
    else:
        keep = np.broadcast_to(np.asarray(mask, dtype=bool), x.shape)
        if not keep.any(axis=-1).all():
            raise DomainError("softmax: every entry of a row is masked")

    z = np.where(keep, x / temperature, MASK_SENTINEL)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z) * keep
    return e / e.sum(axis=-1, keepdims=True)
