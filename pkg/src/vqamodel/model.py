"""
Toy cross-modal attention classifier.

Object features and question tokens are encoded separately, joined by one
cross-modal attention layer, fused by element-wise product with a question
context vector and mapped to answer logits:

    u_i  = relu(v_i W_u + b_u)                       (per head: a slice of u_i)
    e'_j = relu(e_j W_e + b_e)                       (PAIRWISE keys)
    c'   = relu(mean_j(e_j) W_c + b_c)               (CONTEXT key, also the fusion partner)
    A    = softmax over all unmasked (i, j) of u_i . e'_j / sqrt(h/H)
    v^   = concat_heads(sum_i (sum_j A_ij) u_i)
    f    = relu((v^ * c') W_z + b_z) W_o + b_o
"""

from dataclasses import asdict, dataclass
from typing import Any, Sequence

import numpy as np

from src.config import ModelSection, stage_seed
from src.diffcore import tensor as ops
from src.diffcore.tensor import Graph, Tensor
from src.errors import ConfigError, ContractError
from src.synthgen.world import Sample, WorldSpec

PAIRWISE = "pairwise"
CONTEXT = "context"
ATTENTION_VARIANTS = (PAIRWISE, CONTEXT)

# Inference runs in slices of this many samples.
CHUNK = 256


@dataclass(frozen=True)
class ModelConfig:
    hidden: int
    heads: int
    attention: str
    n_answers: int
    K: int
    M: int
    d: int
    vocab_size: int
    seed: int = 0

    def __post_init__(self):
        if self.attention not in ATTENTION_VARIANTS:
            raise ConfigError(
                f"unknown attention variant {self.attention!r}; expected one of {ATTENTION_VARIANTS}"
            )
        if min(self.hidden, self.heads, self.K, self.M, self.d, self.vocab_size) < 1:
            raise ConfigError("model dimensions must be positive")
        if self.hidden % self.heads:
            raise ConfigError(f"hidden size {self.hidden} is not divisible by {self.heads} heads")
        if self.n_answers < 2:
            raise ConfigError("need at least two answer candidates")

    @property
    def head_dim(self) -> int:
        return self.hidden // self.heads

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_world(cls, section: ModelSection, spec: WorldSpec, seed: int) -> "ModelConfig":
        """Model config for a world; the init seed is derived from the run seed."""
        return cls(
            hidden=section.hidden,
            heads=section.heads,
            attention=section.attention,
            n_answers=len(spec.candidates),
            K=spec.K,
            M=spec.M,
            d=spec.d,
            vocab_size=len(spec.vocab),
            seed=stage_seed(seed, "init"),
        )


def parameter_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    h = config.hidden
    shapes = {
        "embed": (config.vocab_size, h),
        "W_u": (config.d, h),
        "b_u": (h,),
    }
    if config.attention == PAIRWISE:
        shapes |= {"W_e": (h, h), "b_e": (h,)}
    shapes |= {
        "W_c": (h, h),
        "b_c": (h,),
        "W_z": (h, h),
        "b_z": (h,),
        "W_o": (h, config.n_answers),
        "b_o": (config.n_answers,),
    }
    return shapes


@dataclass(frozen=True)
class Model:
    config: ModelConfig
    params: dict[str, np.ndarray]

    def with_params(self, params: dict[str, np.ndarray]) -> "Model":
        return Model(self.config, params)


def glorot_bound(shape: tuple[int, ...]) -> float:
    fan_in, fan_out = shape
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


def init_model(config: ModelConfig) -> Model:
    """Glorot-uniform weights, zero biases, deterministic by config.seed."""
    rng = np.random.default_rng(config.seed)
    params = {}
    for name, shape in parameter_shapes(config).items():
        if len(shape) == 1:
            params[name] = np.zeros(shape)
        else:
            a = glorot_bound(shape)
            params[name] = rng.uniform(-a, a, shape)
    return Model(config, params)


# ---------------------------------------------------------------------------
# Batching
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Batch:
    features: np.ndarray  # (B, K, d)
    tokens: np.ndarray  # (B, M) int
    mask: np.ndarray  # (B, M) bool
    answers: np.ndarray  # (B,) int, -1 where undefined

    def __len__(self):
        return len(self.tokens)


def collate(samples: Sequence[Sample], config: ModelConfig | None = None) -> Batch:
    if not samples:
        raise ContractError("cannot collate an empty batch")
    batch = Batch(
        features=np.stack([s.features for s in samples]).astype(np.float64),
        tokens=np.array([s.tokens for s in samples], dtype=np.int64),
        mask=np.array([s.token_mask for s in samples], dtype=bool),
        answers=np.array([-1 if s.answer is None else s.answer for s in samples], dtype=np.int64),
    )
    if config is not None:
        expected = (config.K, config.d)
        if batch.features.shape[1:] != expected:
            raise ContractError(f"features shape {batch.features.shape[1:]} != model {expected}")
        if batch.tokens.shape[1] != config.M:
            raise ContractError(f"token length {batch.tokens.shape[1]} != model M={config.M}")
        if batch.tokens.max() >= config.vocab_size or batch.tokens.min() < 0:
            raise ContractError("token id outside the model vocabulary")
    return batch


# ---------------------------------------------------------------------------
# Forward pass
# ---------------------------------------------------------------------------


@dataclass
class Traced:
    """Graph tensors of one forward pass, used for training losses."""

    logits: Tensor
    attention: Tensor  # (B, H, K, keys)
    attention_logits: Tensor
    cell_mask: np.ndarray  # (B, H, K, keys) bool
    fused: Tensor
    context: Tensor


@dataclass(frozen=True)
class ForwardOut:
    logits: np.ndarray  # (B, N)
    attention: np.ndarray  # (B, H, K, keys)
    attention_logits: np.ndarray
    cell_mask: np.ndarray
    fused: np.ndarray  # (B, h)
    context: np.ndarray  # (B, h)

    def __len__(self):
        return len(self.logits)


def _split_heads(x: Tensor, heads: int) -> Tensor:
    """(B, L, h) -> (B, H, L, h/H)."""
    b, length, h = x.shape
    return ops.transpose(ops.reshape(x, (b, length, heads, h // heads)), (0, 2, 1, 3))


def trace(config: ModelConfig, params: dict[str, np.ndarray], batch: Batch) -> tuple[Graph, Traced]:
    """Build the forward graph for a batch with every parameter registered."""
    if not batch.mask.any(axis=1).all():
        raise ContractError("every sample needs at least one unmasked token")

    graph = Graph()
    p = {name: graph.parameter(name, params[name]) for name in parameter_shapes(config)}
    b, heads, hd = len(batch), config.heads, config.head_dim

    v = graph.constant(batch.features)
    u = ops.relu(v @ p["W_u"] + p["b_u"])
    e = ops.embedding(p["embed"], batch.tokens)

    keep = batch.mask.astype(np.float64)
    counts = keep.sum(axis=1, keepdims=True)
    e_mean = ops.sum(e * keep[:, :, None], axis=1) * (1.0 / counts)
    context = ops.relu(e_mean @ p["W_c"] + p["b_c"])

    u_heads = _split_heads(u, heads)
    if config.attention == PAIRWISE:
        keys = _split_heads(ops.relu(e @ p["W_e"] + p["b_e"]), heads)
        token_mask = batch.mask
    else:
        keys = _split_heads(ops.reshape(context, (b, 1, config.hidden)), heads)
        token_mask = np.ones((b, 1), dtype=bool)

    n_keys = keys.shape[2]
    scores = (u_heads @ ops.transpose(keys, (0, 1, 3, 2))) / np.sqrt(hd)
    cell_mask = np.broadcast_to(token_mask[:, None, None, :], (b, heads, config.K, n_keys))
    flat = ops.softmax(
        ops.reshape(scores, (b, heads, config.K * n_keys)),
        mask=cell_mask.reshape(b, heads, config.K * n_keys),
    )
    attention = ops.reshape(flat, (b, heads, config.K, n_keys))

    beta = ops.sum(attention, axis=3, keepdims=True)  # (B, H, K, 1)
    attended = ops.sum(beta * u_heads, axis=2)  # (B, H, hd)
    attended = ops.reshape(attended, (b, config.hidden))

    fused = attended * context
    logits = ops.relu(fused @ p["W_z"] + p["b_z"]) @ p["W_o"] + p["b_o"]
    return graph, Traced(logits, attention, scores, cell_mask, fused, context)


def forward(model: Model, samples: Sequence[Sample] | Batch) -> ForwardOut:
    """Run the model without keeping gradients; large inputs are processed in chunks."""
    batch = samples if isinstance(samples, Batch) else collate(samples, model.config)
    outs = []
    for start in range(0, len(batch), CHUNK):
        part = Batch(*(arr[start : start + CHUNK] for arr in (batch.features, batch.tokens, batch.mask, batch.answers)))
        _, t = trace(model.config, model.params, part)
        outs.append(
            ForwardOut(
                t.logits.data,
                t.attention.data,
                t.attention_logits.data,
                np.array(t.cell_mask),
                t.fused.data,
                t.context.data,
            )
        )
    if len(outs) == 1:
        return outs[0]
    return ForwardOut(*(np.concatenate(arrays) for arrays in zip(*(_fields(o) for o in outs))))


def _fields(out: ForwardOut) -> tuple[np.ndarray, ...]:
    return (out.logits, out.attention, out.attention_logits, out.cell_mask, out.fused, out.context)


def predict(model: Model, samples: Sequence[Sample]) -> np.ndarray:
    """Argmax answer ids; ties resolve to the lowest index."""
    return np.argmax(forward(model, samples).logits, axis=-1)
