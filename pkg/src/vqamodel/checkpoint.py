"""
Plain-text model checkpoints.

Layout:

    # vqa-anomaly checkpoint v1
    {"config_hash": ..., "format_version": 1, "model": {...}, "run_config": {...}, "seed": ...}
    param <name> <dim>x<dim>
    <space-separated values>
    ...

Values are written with repr(), which round-trips 64-bit floats exactly.
"""

import json
from pathlib import Path
from typing import Any

import numpy as np

from src.config import FORMAT_VERSION
from src.errors import ParseError, ResolutionError
from src.vqamodel.model import Model, ModelConfig, parameter_shapes

MAGIC = f"# vqa-anomaly checkpoint v{FORMAT_VERSION}"


def save_checkpoint(
    model: Model,
    path: str | Path,
    run_config: dict[str, Any] | None = None,
    config_hash: str = "",
    seed: int = 0,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "format_version": FORMAT_VERSION,
        "seed": seed,
        "config_hash": config_hash,
        "model": model.config.to_dict(),
        "run_config": run_config,
    }
    lines = [MAGIC, json.dumps(header, sort_keys=True, separators=(",", ":"))]
    for name, value in model.params.items():
        dims = "x".join(str(n) for n in value.shape)
        lines.append(f"param {name} {dims}")
        lines.append(" ".join(repr(float(x)) for x in value.ravel()))
    path.write_text("\n".join(lines) + "\n")
    return path


def load_checkpoint(path: str | Path) -> tuple[Model, dict[str, Any]]:
    """Read a checkpoint; returns the model and its header."""
    path = Path(path)
    if not path.exists():
        raise ResolutionError(str(path), "checkpoint")

    lines = path.read_text().splitlines()
    if not lines or lines[0] != MAGIC:
        raise ParseError(f"not a checkpoint (expected {MAGIC!r})", 1)
    if len(lines) < 2:
        raise ParseError("missing header", 2)
    try:
        header = json.loads(lines[1])
        config = ModelConfig(**header["model"])
    except (json.JSONDecodeError, KeyError, TypeError) as e:
        raise ParseError(f"bad header ({e})", 2) from e

    expected = parameter_shapes(config)
    params: dict[str, np.ndarray] = {}
    number = 3
    while number <= len(lines):
        tag = lines[number - 1].split()
        if len(tag) != 3 or tag[0] != "param":
            raise ParseError("expected 'param <name> <shape>'", number)
        name, dims = tag[1], tag[2]
        if name not in expected:
            raise ParseError(f"unexpected parameter {name!r}", number)
        shape = tuple(int(n) for n in dims.split("x"))
        if shape != expected[name]:
            raise ParseError(f"parameter {name} has shape {shape}, expected {expected[name]}", number)
        if number + 1 > len(lines):
            raise ParseError(f"missing values for parameter {name}", number + 1)
        try:
            values = np.array([float(x) for x in lines[number].split()], dtype=np.float64)
        except ValueError as e:
            raise ParseError(f"bad value ({e})", number + 1) from e
        if values.size != int(np.prod(shape)):
            raise ParseError(f"parameter {name} needs {int(np.prod(shape))} values", number + 1)
        params[name] = values.reshape(shape)
        number += 2

    missing = [name for name in expected if name not in params]
    if missing:
        raise ParseError(f"missing parameter {missing[0]!r}", len(lines))
    return Model(config, {name: params[name] for name in expected}), header
