"""
Dataset persistence and the standard on-disk data suite.

A dataset file is JSON Lines: one Sample per line, fields named exactly as on the
Sample type. Suite files follow `<split>_<task>_<family>[-variant].jsonl`.
"""

import json
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from src.config import FORMAT_VERSION, stage_seed
from src.errors import ContractError, GenerationError, ParseError, ResolutionError
from src.synthgen.generators import gen_anomaly, gen_id
from src.synthgen.world import ANOMALY_TASKS, Sample, WorldSpec
from src.utils.console import log

# (task, family, variant) triples written by generate_suite, in file order.
SUITE_ANOMALIES = (
    ("T1", "TRAIN", ""),
    ("T2", "TRAIN", ""),
    ("T3", "TRAIN", ""),
    ("T4", "TRAIN", ""),
    ("T4", "TRAIN", "nonvisual"),
    ("T5", "TRAIN", ""),
    ("T1", "EVAL", ""),
    ("T2", "EVAL", ""),
    ("T2", "EVAL", "oov"),
    ("T3", "EVAL", ""),
    ("T4", "EVAL", ""),
    ("T4", "EVAL", "nonvisual"),
    ("T5", "EVAL", ""),
)
ID_SPLITS = ("train", "calib", "val")

_FIELDS = ("features", "tokens", "token_mask", "answer", "task", "family", "seed_index", "truth", "variant")


def split(
    dataset: Sequence[Any], fractions: Sequence[float], seed: int
) -> list[list[Any]]:
    """
    Shuffle deterministically and cut into len(fractions) disjoint parts.

    Sizes use largest-remainder rounding, so they always add up to len(dataset).
    """
    if not fractions or any(f <= 0 for f in fractions):
        raise ContractError("split fractions must be positive")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ContractError(f"split fractions sum to {sum(fractions)}, expected 1")

    n = len(dataset)
    exact = [f * n for f in fractions]
    sizes = [int(np.floor(x)) for x in exact]
    by_remainder = sorted(range(len(exact)), key=lambda i: (-(exact[i] - sizes[i]), i))
    for i in by_remainder[: n - sum(sizes)]:
        sizes[i] += 1
    if any(size == 0 for size in sizes):
        raise GenerationError(f"cannot split {n} records into {len(fractions)} nonempty parts")

    order = np.random.default_rng(seed).permutation(n)
    parts, start = [], 0
    for size in sizes:
        parts.append([dataset[i] for i in order[start : start + size]])
        start += size
    return parts


def write_dataset(path: str | Path, samples: Sequence[Sample]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        for sample in samples:
            f.write(json.dumps(sample.to_record(), separators=(",", ":")))
            f.write("\n")
    return path


def read_dataset(path: str | Path) -> list[Sample]:
    """Read a JSON Lines dataset; an empty file is an empty dataset."""
    path = Path(path)
    if not path.exists():
        raise ResolutionError(str(path), "dataset")

    samples = []
    with open(path) as f:
        for number, line in enumerate(f, start=1):
            if not line.strip():
                raise ParseError("blank line", number)
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"malformed record ({e.msg})", number) from e
            if not isinstance(record, dict):
                raise ParseError("record is not an object", number)
            missing = [name for name in _FIELDS if name not in record]
            if missing:
                raise ParseError(f"missing field {missing[0]!r}", number)
            try:
                samples.append(Sample.from_record(record))
            except (TypeError, ValueError) as e:
                raise ParseError(f"bad field value ({e})", number) from e
    return samples


# ---------------------------------------------------------------------------
# Suite layout
# ---------------------------------------------------------------------------


def set_name(task: str, family: str, variant: str = "") -> str:
    """Short name of an anomaly set, e.g. "T2/EVAL-oov"."""
    return f"{task}/{family}-{variant}" if variant else f"{task}/{family}"


def parse_set_name(name: str) -> tuple[str, str, str]:
    try:
        task, tag = name.split("/")
    except ValueError as e:
        raise ContractError(f"bad anomaly set name {name!r}") from e
    family, _, variant = tag.partition("-")
    if task not in ANOMALY_TASKS or family not in ("TRAIN", "EVAL"):
        raise ContractError(f"bad anomaly set name {name!r}")
    return task, family, variant


def suite_path(data_dir: str | Path, task: str, family: str, variant: str = "") -> Path:
    split_name = "train" if family == "TRAIN" else "eval"
    tag = f"{family}-{variant}" if variant else family
    return Path(data_dir) / f"{split_name}_{task}_{tag}.jsonl"


def id_path(data_dir: str | Path, split_name: str) -> Path:
    if split_name not in ID_SPLITS:
        raise ContractError(f"unknown ID split {split_name!r}")
    return Path(data_dir) / f"{split_name}_ID_TRAIN.jsonl"


def read_set(data_dir: str | Path, name: str) -> list[Sample]:
    return read_dataset(suite_path(data_dir, *parse_set_name(name)))


def read_mix_sources(data_dir: str | Path, mix: dict[str, float]) -> dict[str, list[Sample]]:
    """
    Load the TRAIN-family anomaly sources named by a fine-tuning mix.

    Mix keys are a task ("T1") or a task with variant ("T4/nonvisual").
    """
    sources = {}
    for key in sorted(mix):
        task, _, variant = key.partition("/")
        if task not in ANOMALY_TASKS:
            raise ContractError(f"unknown anomaly source {key!r}")
        sources[key] = read_dataset(suite_path(data_dir, task, "TRAIN", variant))
    return sources


def generate_suite(
    spec: WorldSpec,
    n_id: int,
    n_anomaly: int,
    seed: int,
    out_dir: str | Path,
    fractions: Sequence[float] = (0.8, 0.1, 0.1),
    config_hash: str = "",
) -> dict[str, Any]:
    """
    Write the ID splits and every anomaly set under out_dir plus manifest.json.

    Returns the manifest.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    counts: dict[str, int] = {}

    id_samples = gen_id(spec, n_id, stage_seed(seed, "gen/all/ID/TRAIN"))
    parts = split(id_samples, fractions, stage_seed(seed, "gen/split/ID/TRAIN"))
    for split_name, part in zip(ID_SPLITS, parts):
        path = write_dataset(id_path(out_dir, split_name), part)
        counts[path.name] = len(part)
        log(f"Wrote {len(part)} samples to {path.name}")

    for task, family, variant in SUITE_ANOMALIES:
        split_name = "train" if family == "TRAIN" else "eval"
        label = f"gen/{split_name}/{task}/{family}" + (f"-{variant}" if variant else "")
        samples = gen_anomaly(spec, task, family, n_anomaly, stage_seed(seed, label), variant)
        path = write_dataset(suite_path(out_dir, task, family, variant), samples)
        counts[path.name] = len(samples)
        log(f"Wrote {len(samples)} samples to {path.name}")

    manifest = {
        "format_version": FORMAT_VERSION,
        "config_hash": config_hash,
        "seed": seed,
        "world": spec.to_dict(),
        "files": counts,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest
