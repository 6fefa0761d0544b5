"""Training hyperparameters and the per-epoch training log."""

from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import pandas as pd

from src.config import FinetuneSection, TrainSection
from src.diffcore.optim import OptimState
from src.errors import ConfigError

BASE = "BASE"
OE = "OE"
RA = "RA"
RA_VAR = "RA_VAR"
METHODS = (BASE, OE, RA, RA_VAR)

# CLI spellings of the methods
METHOD_NAMES = {"base": BASE, "oe": OE, "ra": RA, "ra-var": RA_VAR, "ra_var": RA_VAR}

DEFAULT_MIX = {"T1": 1.0, "T4": 1.0, "T4/nonvisual": 1.0}


def method_from_name(name: str) -> str:
    try:
        return METHOD_NAMES[name.lower()]
    except KeyError:
        raise ConfigError(f"unknown fine-tuning method {name!r}; expected base, oe, ra or ra-var") from None


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 40
    batch_size: int = 64
    lr: float = 0.005
    seed: int = 0
    lam: float = 1e-5
    method: str = BASE
    mix: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_MIX))
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    lam_oe: float = 0.5
    lam_var: float = 1e-2

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown training method {self.method!r}")
        if self.lam < 0 or self.lam_oe < 0 or self.lam_var < 0:
            raise ConfigError("regularizer weights must be nonnegative")
        if self.batch_size < 1:
            raise ConfigError("batch size must be at least 1")
        if self.epochs < 0:
            raise ConfigError("epochs must be nonnegative")
        if self.lr < 0:
            raise ConfigError("learning rate must be nonnegative")
        if any(w < 0 for w in self.mix.values()) or (self.mix and sum(self.mix.values()) <= 0):
            raise ConfigError("anomaly mix weights must be nonnegative with a positive total")

    def optim_state(self) -> OptimState:
        return OptimState(
            kind=self.optimizer, lr=self.lr, beta1=self.beta1, beta2=self.beta2, eps=self.eps
        )

    def with_method(self, method: str) -> "TrainConfig":
        return replace(self, method=method)

    @classmethod
    def for_base(cls, section: TrainSection, seed: int) -> "TrainConfig":
        return cls(
            epochs=section.epochs,
            batch_size=section.batch_size,
            lr=section.lr,
            seed=seed,
            method=BASE,
            optimizer=section.optimizer,
            beta1=section.beta1,
            beta2=section.beta2,
            eps=section.eps,
        )

    @classmethod
    def for_finetune(
        cls,
        section: FinetuneSection,
        train: TrainSection,
        seed: int,
        method: str | None = None,
        lam: float | None = None,
    ) -> "TrainConfig":
        """Fine-tuning config; optimizer settings are shared with base training."""
        return cls(
            epochs=section.epochs,
            batch_size=section.batch_size,
            lr=section.lr,
            seed=seed,
            lam=section.lam if lam is None else lam,
            method=method_from_name(method or section.method),
            mix=dict(section.mix),
            optimizer=train.optimizer,
            beta1=train.beta1,
            beta2=train.beta2,
            eps=train.eps,
            lam_oe=section.lam_oe,
            lam_var=section.lam_var,
        )


@dataclass(frozen=True)
class TrainLogRow:
    epoch: int
    task_loss: float
    regularizer: float
    val_accuracy: float
    wall_time: float


@dataclass
class TrainLog:
    rows: list[TrainLogRow] = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def append(self, row: TrainLogRow):
        self.rows.append(row)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [asdict(r) for r in self.rows],
            columns=["epoch", "task_loss", "regularizer", "val_accuracy", "wall_time"],
        )

    def deterministic_view(self) -> list[tuple]:
        """Rows without wall time, for reproducibility comparisons."""
        return [(r.epoch, r.task_loss, r.regularizer, r.val_accuracy) for r in self.rows]

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False)
        return path
