"""Shared fixtures: small worlds, random samples, tiny models and a generated suite."""

import json

import numpy as np
import pytest

from src.config import RunConfig, WorldSection, config_from_dict
from src.synthgen.dataset import generate_suite
from src.synthgen.world import Sample, WorldSpec, world_from_config
from src.vqamodel.model import ModelConfig, init_model

SMALL_CONFIG = {
    "seed": 3,
    "world": {"n_id": 120, "n_anomaly": 24},
    "model": {"hidden": 8, "heads": 2},
    "train": {"epochs": 2, "batch_size": 32},
    "finetune": {"epochs": 1, "batch_size": 32},
}


@pytest.fixture(autouse=True)
def quiet_logs(monkeypatch):
    monkeypatch.setenv("VQA_ANOMALY_QUIET", "1")


@pytest.fixture
def world() -> WorldSpec:
    return world_from_config(WorldSection())


@pytest.fixture
def small_config() -> RunConfig:
    return config_from_dict(SMALL_CONFIG)


@pytest.fixture
def small_config_file(tmp_path) -> str:
    path = tmp_path / "small.json"
    path.write_text(json.dumps(SMALL_CONFIG))
    return str(path)


@pytest.fixture(scope="session")
def suite_dir(tmp_path_factory):
    """A small generated data suite shared by evaluation tests."""
    config = config_from_dict(SMALL_CONFIG)
    out = tmp_path_factory.mktemp("suite")
    generate_suite(
        world_from_config(config.world),
        n_id=config.world.n_id,
        n_anomaly=config.world.n_anomaly,
        seed=config.seed,
        out_dir=out,
    )
    return out


def random_samples(
    rng: np.random.Generator,
    n: int,
    K: int,
    M: int,
    d: int,
    vocab_size: int,
    n_answers: int = 6,
    task: str = "ID",
) -> list[Sample]:
    """Random records with at least one unmasked token each."""
    samples = []
    for i in range(n):
        length = int(rng.integers(1, M + 1))
        tokens = tuple(int(t) for t in rng.integers(0, vocab_size, M))
        mask = tuple(j < length for j in range(M))
        samples.append(
            Sample(
                features=rng.normal(0.0, 1.0, (K, d)),
                tokens=tokens,
                token_mask=mask,
                answer=int(rng.integers(n_answers)) if task == "ID" else None,
                task=task,
                family="TRAIN",
                seed_index=i,
            )
        )
    return samples


def tiny_config(attention: str = "pairwise", heads: int = 2, seed: int = 0) -> ModelConfig:
    return ModelConfig(
        hidden=8, heads=heads, attention=attention, n_answers=6, K=4, M=5, d=3, vocab_size=7, seed=seed
    )


@pytest.fixture
def tiny_model():
    return init_model(tiny_config())
