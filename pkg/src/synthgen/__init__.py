"""Synthetic scene/question data and the five anomaly taxonomies."""

from .dataset import (
    generate_suite,
    id_path,
    parse_set_name,
    read_dataset,
    read_mix_sources,
    read_set,
    set_name,
    split,
    suite_path,
    write_dataset,
)
from .generators import derive_answer, gen_anomaly, gen_id, infer_task
from .world import ANOMALY_TASKS, FAMILIES, TASKS, Sample, WorldSpec, world_from_config

__all__ = [
    "ANOMALY_TASKS",
    "FAMILIES",
    "TASKS",
    "Sample",
    "WorldSpec",
    "world_from_config",
    "gen_id",
    "gen_anomaly",
    "derive_answer",
    "infer_task",
    "split",
    "write_dataset",
    "read_dataset",
    "read_set",
    "read_mix_sources",
    "set_name",
    "parse_set_name",
    "suite_path",
    "id_path",
    "generate_suite",
]
