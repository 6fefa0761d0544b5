"""Adam-family parameter updates."""

from dataclasses import dataclass, field

import numpy as np

from src.errors import ConfigError, ContractError

OPTIMIZERS = ("adam", "adamax")


@dataclass
class OptimState:
    """
    Per-parameter moment accumulators plus the update hyperparameters.

    `kind="adam"` is the toy default; `kind="adamax"` with lr 0.002 is the
    full-scale preset.
    """

    kind: str = "adam"
    lr: float = 0.005
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in OPTIMIZERS:
            raise ConfigError(f"unknown optimizer {self.kind!r}; expected one of {OPTIMIZERS}")
        if self.lr < 0:
            raise ConfigError("learning rate must be nonnegative")


def opt_step(
    state: OptimState, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]
) -> dict[str, np.ndarray]:
    """
    Apply one update and return the new parameter arrays.

    The input arrays are left untouched; `state` advances its step counter and moments.
    """
    for name, value in params.items():
        if name not in grads:
            raise ContractError(f"missing gradient for parameter {name}")
        if grads[name].shape != value.shape:
            raise ContractError(
                f"gradient shape {grads[name].shape} does not match parameter {name} {value.shape}"
            )
        if name in state.m and state.m[name].shape != value.shape:
            raise ContractError(f"optimizer state shape mismatch for parameter {name}")

    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    updated: dict[str, np.ndarray] = {}

    for name, value in params.items():
        g = grads[name]
        m = state.m.get(name, np.zeros_like(value))
        v = state.v.get(name, np.zeros_like(value))
        m = b1 * m + (1.0 - b1) * g

        if state.kind == "adam":
            v = b2 * v + (1.0 - b2) * g * g
            m_hat = m / (1.0 - b1**t)
            v_hat = v / (1.0 - b2**t)
            delta = state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
        else:
            # adamax keeps an infinity-norm accumulator in place of v
            v = np.maximum(b2 * v, np.abs(g))
            delta = (state.lr / (1.0 - b1**t)) * m / (v + state.eps)

        state.m[name] = m
        state.v[name] = v
        updated[name] = value - delta

    return updated
