"""World description, vocabulary and the Sample record."""

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from src.config import WorldSection
from src.errors import GenerationError

TASKS = ("ID", "T1", "T2", "T3", "T4", "T5")
ANOMALY_TASKS = TASKS[1:]
FAMILIES = ("TRAIN", "EVAL")

PAD = "<pad>"
QUESTION_WORDS = (
    "what", "who", "is", "there", "a", "the", "color", "shape", "object",
    "capital", "president", "of",
)
STATEMENT_WORDS = ("near", "and", "touch")
ANSWER_WORDS = ("yes", "no")
# Words that make a token sequence a question; statements contain none of them.
INTERROGATIVES = frozenset({"what", "who", "there"})
NONVISUAL_FILLERS = {
    "TRAIN": ("france", "peru", "kenya"),
    "EVAL": ("japan", "chile", "egypt"),
}
# Only ever emitted by the out-of-vocabulary statement variant.
OOV_WORDS = ("lorem", "ipsum", "dolor", "sit", "amet", "tempor", "magna", "aliqua")


@dataclass(frozen=True)
class WorldSpec:
    """
    Attribute inventory, scene size and token vocabulary of the synthetic task.

    Each object's feature vector is a shape one-hot followed by a color one-hot,
    so d = |shapes| + |colors|.
    """

    shapes: tuple[str, ...]
    colors: tuple[str, ...]
    K: int
    M: int
    noise_sigma: float
    held_out_answers: tuple[str, ...]
    false_premise_pools: dict[str, tuple[str, ...]]
    ood_shift: float = 0.25
    vocab: tuple[str, ...] = field(init=False)
    candidates: tuple[str, ...] = field(init=False)

    def __post_init__(self):
        if self.K < 1 or self.M < 1:
            raise GenerationError("scenes need at least one object and one token slot")
        if not self.shapes or not self.colors:
            raise GenerationError("world needs at least one shape and one color")
        attributes = set(self.shapes) | set(self.colors)
        unknown = [a for a in self.held_out_answers if a not in attributes]
        if unknown:
            raise GenerationError(f"held-out answer {unknown[0]!r} is not a shape or color")
        for family, pool in self.false_premise_pools.items():
            if any(s not in self.shapes for s in pool):
                raise GenerationError(f"false-premise pool for {family} names an unknown shape")

        fillers = tuple(w for family in FAMILIES for w in NONVISUAL_FILLERS[family])
        vocab = (
            (PAD,) + QUESTION_WORDS + STATEMENT_WORDS + self.shapes + self.colors
            + fillers + OOV_WORDS
        )
        if len(set(vocab)) != len(vocab):
            raise GenerationError("attribute names collide with reserved vocabulary words")

        held = set(self.held_out_answers)
        candidates = (
            tuple(c for c in self.colors if c not in held)
            + tuple(s for s in self.shapes if s not in held)
            + ANSWER_WORDS
        )
        object.__setattr__(self, "vocab", vocab)
        object.__setattr__(self, "candidates", candidates)

    @property
    def d(self) -> int:
        return len(self.shapes) + len(self.colors)

    @property
    def token_ids(self) -> dict[str, int]:
        return {word: i for i, word in enumerate(self.vocab)}

    def encode(self, words: list[str]) -> tuple[tuple[int, ...], tuple[bool, ...]]:
        if len(words) > self.M:
            raise GenerationError(f"sentence of {len(words)} tokens exceeds M={self.M}")
        ids = self.token_ids
        pad = self.M - len(words)
        return tuple(ids[w] for w in words) + (0,) * pad, (True,) * len(words) + (False,) * pad

    def decode(self, tokens, mask) -> list[str]:
        return [self.vocab[t] for t, keep in zip(tokens, mask) if keep]

    def answer_id(self, name: str) -> int:
        return self.candidates.index(name)

    def to_dict(self) -> dict[str, Any]:
        return {
            "shapes": list(self.shapes),
            "colors": list(self.colors),
            "K": self.K,
            "M": self.M,
            "d": self.d,
            "vocab": list(self.vocab),
            "candidates": list(self.candidates),
            "held_out_answers": list(self.held_out_answers),
        }


def world_from_config(section: WorldSection) -> WorldSpec:
    return WorldSpec(
        shapes=tuple(section.shapes),
        colors=tuple(section.colors),
        K=section.objects,
        M=section.max_tokens,
        noise_sigma=section.noise_sigma,
        held_out_answers=tuple(section.held_out_answers),
        false_premise_pools={
            "TRAIN": tuple(section.false_premise_train_shapes),
            "EVAL": tuple(section.false_premise_eval_shapes),
        },
        ood_shift=section.ood_shift,
    )


@dataclass(frozen=True, eq=False)
class Sample:
    """
    One multimodal record.

    `answer` is a candidate index, or None for UNDEFINED. `truth` keeps the
    ground-truth answer name for ID and T5 samples.
    """

    features: np.ndarray
    tokens: tuple[int, ...]
    token_mask: tuple[bool, ...]
    answer: int | None
    task: str
    family: str
    seed_index: int
    truth: str | None = None
    variant: str = ""

    @property
    def family_tag(self) -> str:
        return f"{self.family}-{self.variant}" if self.variant else self.family

    @property
    def sample_id(self) -> str:
        return f"{self.task}-{self.family_tag}-{self.seed_index}"

    @property
    def is_anomaly(self) -> bool:
        return self.task != "ID"

    def to_record(self) -> dict[str, Any]:
        return {
            "features": self.features.tolist(),
            "tokens": list(self.tokens),
            "token_mask": list(self.token_mask),
            "answer": self.answer,
            "task": self.task,
            "family": self.family,
            "seed_index": self.seed_index,
            "truth": self.truth,
            "variant": self.variant,
        }

    @classmethod
    def from_record(cls, record: dict[str, Any]) -> "Sample":
        return cls(
            features=np.asarray(record["features"], dtype=np.float64),
            tokens=tuple(int(t) for t in record["tokens"]),
            token_mask=tuple(bool(m) for m in record["token_mask"]),
            answer=None if record["answer"] is None else int(record["answer"]),
            task=str(record["task"]),
            family=str(record["family"]),
            seed_index=int(record["seed_index"]),
            truth=record["truth"],
            variant=str(record["variant"]),
        )

    def __eq__(self, other):
        if not isinstance(other, Sample):
            return NotImplemented
        return (
            np.array_equal(self.features, other.features)
            and self.to_record() | {"features": None} == other.to_record() | {"features": None}
        )

    def __hash__(self):
        return hash(self.sample_id)
