"""
Run configuration: one JSON file describing every stage of a recipe.

Unknown keys are rejected at every level so a typo never silently falls back to a
default. All randomness in a run derives from the single top-level seed through
stage_seed().
"""

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from src.errors import ConfigError, ResolutionError

FORMAT_VERSION = 1

DEFAULT_SHAPES = ("circle", "square", "triangle", "star", "hexagon", "cross")
DEFAULT_COLORS = ("red", "green", "blue", "yellow", "purple", "orange")


@dataclass(frozen=True)
class WorldSection:
    shapes: tuple[str, ...] = DEFAULT_SHAPES
    colors: tuple[str, ...] = DEFAULT_COLORS
    objects: int = 6
    max_tokens: int = 8
    noise_sigma: float = 0.1
    held_out_answers: tuple[str, ...] = ("orange", "cross")
    false_premise_train_shapes: tuple[str, ...] = ("circle", "square", "triangle")
    false_premise_eval_shapes: tuple[str, ...] = ("star", "hexagon", "cross")
    ood_shift: float = 0.25
    n_id: int = 4000
    n_anomaly: int = 400
    id_fractions: tuple[float, ...] = (0.8, 0.1, 0.1)


@dataclass(frozen=True)
class ModelSection:
    hidden: int = 32
    heads: int = 2
    attention: str = "pairwise"


@dataclass(frozen=True)
class TrainSection:
    epochs: int = 40
    batch_size: int = 64
    lr: float = 0.005
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass(frozen=True)
class FinetuneSection:
    method: str = "ra"
    epochs: int = 15
    batch_size: int = 64
    lr: float = 0.002
    lam: float = 0.1
    lam_var: float = 1e-2
    lam_oe: float = 0.5
    mix: dict[str, float] = field(
        default_factory=lambda: {"T1": 1.0, "T4": 1.0, "T4/nonvisual": 1.0}
    )


@dataclass(frozen=True)
class DetectSection:
    temperatures: tuple[float, ...] = (1.0, 2.0, 5.0, 10.0, 50.0, 100.0, 1000.0)
    reduce: str = "mean"


@dataclass(frozen=True)
class EvalSection:
    data_dir: str = "data/suite"
    detectors: tuple[str, ...] = ("MSP", "MSP(T)", "MAP", "MAP(T)")
    eval_sets: tuple[str, ...] = (
        "T1/EVAL",
        "T2/EVAL",
        "T2/EVAL-oov",
        "T3/EVAL",
        "T4/EVAL",
        "T4/EVAL-nonvisual",
        "T5/EVAL",
    )
    calibration_sets: tuple[str, ...] = (
        "T1/TRAIN",
        "T2/TRAIN",
        "T3/TRAIN",
        "T4/TRAIN",
        "T4/TRAIN-nonvisual",
        "T5/TRAIN",
    )


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    world: WorldSection = field(default_factory=WorldSection)
    model: ModelSection = field(default_factory=ModelSection)
    train: TrainSection = field(default_factory=TrainSection)
    finetune: FinetuneSection = field(default_factory=FinetuneSection)
    detect: DetectSection = field(default_factory=DetectSection)
    eval: EvalSection = field(default_factory=EvalSection)

    def to_dict(self) -> dict[str, Any]:
        return _plain(asdict(self))

    def config_hash(self) -> str:
        """First 12 hex chars of the SHA-256 of the canonical JSON form."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:12]


_SECTIONS = {
    "world": WorldSection,
    "model": ModelSection,
    "train": TrainSection,
    "finetune": FinetuneSection,
    "detect": DetectSection,
    "eval": EvalSection,
}


def _plain(value):
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def _coerce(value, default, key: str):
    if isinstance(default, tuple):
        if not isinstance(value, list):
            raise ConfigError(f"{key}: expected a list")
        return tuple(value)
    if isinstance(default, dict):
        if not isinstance(value, dict):
            raise ConfigError(f"{key}: expected an object")
        return {str(k): float(v) for k, v in value.items()}
    if isinstance(default, bool) or isinstance(default, str):
        if not isinstance(value, type(default)):
            raise ConfigError(f"{key}: expected {type(default).__name__}")
        return value
    if isinstance(default, int):
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"{key}: expected an integer")
        return value
    if isinstance(default, float):
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(f"{key}: expected a number")
        return float(value)
    return value


def _build_section(cls, data: Any, prefix: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{prefix}: expected an object")
    defaults = cls()
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config key: {prefix}.{unknown[0]}")
    values = {
        name: _coerce(value, getattr(defaults, name), f"{prefix}.{name}")
        for name, value in data.items()
    }
    section = cls(**values)
    if isinstance(section, WorldSection):
        _check_id_fractions(section.id_fractions, f"{prefix}.id_fractions")
    return section


def _check_id_fractions(fractions: tuple[float, ...], key: str) -> None:
    if len(fractions) != 3:
        raise ConfigError(f"{key}: expected 3 fractions (train, calib, val), got {len(fractions)}")
    if any(not isinstance(f, (int, float)) or isinstance(f, bool) or f <= 0 for f in fractions):
        raise ConfigError(f"{key}: fractions must be positive numbers")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError(f"{key}: fractions must sum to 1, got {sum(fractions):g}")


def config_from_dict(data: dict[str, Any]) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    unknown = sorted(set(data) - set(_SECTIONS) - {"seed"})
    if unknown:
        raise ConfigError(f"unknown config key: {unknown[0]}")
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed: expected a nonnegative integer")
    sections = {
        name: _build_section(cls, data.get(name, {}), name) for name, cls in _SECTIONS.items()
    }
    return RunConfig(seed=seed, **sections)


def load_config(path: str | Path, seed: int | None = None) -> RunConfig:
    """
    Load and validate a RunConfig from a JSON file.

    Args:
        path: Config file path
        seed: Optional override of the top-level seed (CLI --seed)
    """
    path = Path(path)
    if not path.exists():
        raise ResolutionError(str(path), "config")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e.msg} at line {e.lineno})") from e
    if seed is not None:
        data = {**data, "seed": seed}
    return config_from_dict(data)


def stage_seed(seed: int, label: str) -> int:
    """Derive an independent 63-bit seed for one labelled stage of a run."""
    digest = hashlib.sha256(f"{seed}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big") & ((1 << 63) - 1)
