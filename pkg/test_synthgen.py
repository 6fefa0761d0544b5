"""Tests for the synthetic scene/question generators and dataset files."""

import json
from collections import Counter

import numpy as np
import pytest

from src.errors import ContractError, GenerationError, ParseError, ResolutionError
from src.synthgen import (
    derive_answer,
    gen_anomaly,
    gen_id,
    generate_suite,
    infer_task,
    parse_set_name,
    read_dataset,
    set_name,
    split,
    suite_path,
    write_dataset,
)
from src.synthgen.generators import _id_question, decode_objects
from src.synthgen.world import INTERROGATIVES, NONVISUAL_FILLERS, WorldSpec


def _single_object_world(K: int = 1) -> WorldSpec:
    return WorldSpec(
        shapes=("circle",),
        colors=("red",),
        K=K,
        M=8,
        noise_sigma=0.0,
        held_out_answers=(),
        false_premise_pools={},
    )


def _referenced(spec, sample):
    words = spec.decode(sample.tokens, sample.token_mask)
    shapes = [w for w in words if w in spec.shapes]
    colors = [w for w in words if w in spec.colors]
    return shapes, colors


def test_forced_single_object_question():
    spec = _single_object_world()
    words, answer, features = _id_question(spec, np.random.default_rng(0), template=0)
    assert words == ["what", "color", "is", "the", "circle"]
    assert answer == "red"
    assert decode_objects(spec, features) == [("circle", "red")]


def test_referenced_attributes_occur_exactly_once(world):
    samples = gen_id(world, 1000, seed=0)
    for sample in samples:
        objects = decode_objects(world, sample.features)
        shapes, colors = _referenced(world, sample)
        for shape in shapes:
            assert sum(s == shape for s, _ in objects) == 1
        for color in colors:
            assert sum(c == color for _, c in objects) == 1


def test_stored_answers_match_scene(world):
    for sample in gen_id(world, 1000, seed=1):
        assert sample.answer is not None
        assert derive_answer(world, sample) == world.candidates[sample.answer]
        assert sample.truth == world.candidates[sample.answer]


def test_held_out_ground_truth_is_recoverable(world):
    for family in ("TRAIN", "EVAL"):
        for sample in gen_anomaly(world, "T5", family, 200, seed=2):
            assert sample.answer is None
            assert sample.truth in world.held_out_answers
            assert derive_answer(world, sample) == sample.truth


def test_held_out_answers_are_not_candidates(world):
    assert not set(world.held_out_answers) & set(world.candidates)


def test_generation_is_deterministic(world, tmp_path):
    a = write_dataset(tmp_path / "a.jsonl", gen_id(world, 50, seed=5))
    b = write_dataset(tmp_path / "b.jsonl", gen_id(world, 50, seed=5))
    assert a.read_bytes() == b.read_bytes()
    c = write_dataset(tmp_path / "c.jsonl", gen_id(world, 50, seed=6))
    assert a.read_bytes() != c.read_bytes()


@pytest.mark.parametrize("family,variant", [("TRAIN", ""), ("EVAL", ""), ("EVAL", "oov")])
def test_statements_have_no_interrogatives(world, family, variant):
    for sample in gen_anomaly(world, "T2", family, 300, seed=3, variant=variant):
        words = world.decode(sample.tokens, sample.token_mask)
        assert words
        assert not INTERROGATIVES & set(words)


@pytest.mark.parametrize("family", ["TRAIN", "EVAL"])
def test_statement_objects_are_absent_from_scene(world, family):
    for sample in gen_anomaly(world, "T2", family, 300, seed=5):
        shapes, colors = _referenced(world, sample)
        assert len(shapes) == 2 and len(colors) == 2
        objects = decode_objects(world, sample.features)
        assert not set(shapes) & {s for s, _ in objects}
        assert not set(colors) & {c for _, c in objects}
        assert infer_task(world, sample) == "T2"


def test_false_premise_shape_is_absent(world):
    for family in ("TRAIN", "EVAL"):
        pool = set(world.false_premise_pools[family])
        for sample in gen_anomaly(world, "T4", family, 500, seed=4):
            shapes, _ = _referenced(world, sample)
            assert len(shapes) == 1
            assert shapes[0] in pool
            assert shapes[0] not in {s for s, _ in decode_objects(world, sample.features)}


def test_ood_families_differ_in_feature_mean(world):
    train = np.stack([s.features for s in gen_anomaly(world, "T1", "TRAIN", 1000, seed=7)])
    evals = np.stack([s.features for s in gen_anomaly(world, "T1", "EVAL", 1000, seed=7)])
    assert abs(train.mean()) < 0.05
    assert evals.mean() - train.mean() > 0.2


def test_families_use_disjoint_pools(world):
    assert not set(world.false_premise_pools["TRAIN"]) & set(world.false_premise_pools["EVAL"])
    assert not set(NONVISUAL_FILLERS["TRAIN"]) & set(NONVISUAL_FILLERS["EVAL"])
    train_fillers = Counter(
        world.decode(s.tokens, s.token_mask)[-1]
        for s in gen_anomaly(world, "T4", "TRAIN", 100, seed=8, variant="nonvisual")
    )
    assert set(train_fillers) <= set(NONVISUAL_FILLERS["TRAIN"])


@pytest.mark.parametrize(
    "task,family,variant",
    [
        ("T1", "TRAIN", ""),
        ("T1", "EVAL", ""),
        ("T2", "TRAIN", ""),
        ("T2", "EVAL", "oov"),
        ("T3", "EVAL", ""),
        ("T4", "TRAIN", ""),
        ("T4", "EVAL", "nonvisual"),
        ("T5", "EVAL", ""),
    ],
)
def test_content_classifier_recovers_task(world, task, family, variant):
    for sample in gen_anomaly(world, task, family, 50, seed=9, variant=variant):
        assert infer_task(world, sample) == task


def test_content_classifier_on_id(world):
    assert {infer_task(world, s) for s in gen_id(world, 200, seed=9)} == {"ID"}


def test_anomaly_argument_errors(world):
    with pytest.raises(ContractError):
        gen_anomaly(world, "T6", "TRAIN", 1, seed=0)
    with pytest.raises(ContractError):
        gen_anomaly(world, "T1", "TEST", 1, seed=0)
    with pytest.raises(ContractError):
        gen_anomaly(world, "T2", "TRAIN", 1, seed=0, variant="oov")
    with pytest.raises(ContractError):
        gen_anomaly(world, "T3", "EVAL", 1, seed=0, variant="oov")
    with pytest.raises(ContractError):
        gen_id(world, 0, seed=0)


def test_vocabulary_too_small_for_uniqueness():
    with pytest.raises(GenerationError):
        gen_id(_single_object_world(K=2), 5, seed=0)


def test_overlapping_false_premise_pools(world):
    spec = WorldSpec(
        shapes=world.shapes,
        colors=world.colors,
        K=world.K,
        M=world.M,
        noise_sigma=world.noise_sigma,
        held_out_answers=world.held_out_answers,
        false_premise_pools={"TRAIN": ("circle", "star"), "EVAL": ("star",)},
    )
    with pytest.raises(GenerationError):
        gen_anomaly(spec, "T4", "TRAIN", 3, seed=0)


def test_split_sizes():
    parts = split(list(range(10)), (0.9, 0.1), seed=0)
    assert [len(p) for p in parts] == [9, 1]


def test_split_is_a_partition():
    data = list(range(37))
    parts = split(data, (0.8, 0.1, 0.1), seed=4)
    assert sorted(x for p in parts for x in p) == data
    assert sum(len(p) for p in parts) == 37


def test_split_is_deterministic():
    assert split(list(range(20)), (0.5, 0.5), seed=1) == split(list(range(20)), (0.5, 0.5), seed=1)


def test_split_errors():
    with pytest.raises(GenerationError):
        split([1, 2], (0.5, 0.3, 0.2), seed=0)
    with pytest.raises(ContractError):
        split([1, 2, 3], (0.5, 0.6), seed=0)
    with pytest.raises(ContractError):
        split([1, 2, 3], (1.2, -0.2), seed=0)


def test_dataset_round_trip(world, tmp_path):
    samples = gen_id(world, 60, seed=0) + gen_anomaly(world, "T5", "TRAIN", 40, seed=0)
    path = write_dataset(tmp_path / "set.jsonl", samples)
    assert read_dataset(path) == samples


def test_truncated_line_reports_its_number(world, tmp_path):
    path = write_dataset(tmp_path / "set.jsonl", gen_id(world, 100, seed=0))
    path.write_text(path.read_text()[:-20])
    with pytest.raises(ParseError) as info:
        read_dataset(path)
    assert info.value.line == 100
    assert "line 100" in str(info.value)


def test_missing_field_reports_its_number(world, tmp_path):
    path = write_dataset(tmp_path / "set.jsonl", gen_id(world, 3, seed=0))
    lines = path.read_text().splitlines()
    record = json.loads(lines[1])
    del record["task"]
    lines[1] = json.dumps(record)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ParseError, match="line 2"):
        read_dataset(path)


def test_empty_file_is_empty_dataset(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    assert read_dataset(path) == []


def test_missing_dataset(tmp_path):
    with pytest.raises(ResolutionError) as info:
        read_dataset(tmp_path / "nope.jsonl")
    assert info.value.exit_code == 3


def test_set_names():
    assert set_name("T2", "EVAL", "oov") == "T2/EVAL-oov"
    assert parse_set_name("T2/EVAL-oov") == ("T2", "EVAL", "oov")
    assert parse_set_name("T1/TRAIN") == ("T1", "TRAIN", "")
    assert suite_path("d", "T4", "TRAIN", "nonvisual").name == "train_T4_TRAIN-nonvisual.jsonl"
    with pytest.raises(ContractError):
        parse_set_name("ID/TRAIN")


def test_generate_suite_layout(world, tmp_path):
    manifest = generate_suite(world, n_id=50, n_anomaly=10, seed=2, out_dir=tmp_path, config_hash="abc")
    files = manifest["files"]
    assert len(files) == 16
    assert files["train_ID_TRAIN.jsonl"] == 40
    assert files["calib_ID_TRAIN.jsonl"] == 5
    assert files["val_ID_TRAIN.jsonl"] == 5
    assert files["eval_T2_EVAL-oov.jsonl"] == 10
    assert manifest["config_hash"] == "abc"
    for name in files:
        assert (tmp_path / name).exists()
    assert json.loads((tmp_path / "manifest.json").read_text()) == manifest


def test_generate_suite_is_reproducible(world, tmp_path):
    generate_suite(world, n_id=30, n_anomaly=5, seed=1, out_dir=tmp_path / "a")
    generate_suite(world, n_id=30, n_anomaly=5, seed=1, out_dir=tmp_path / "b")
    for path in sorted((tmp_path / "a").iterdir()):
        assert path.read_bytes() == (tmp_path / "b" / path.name).read_bytes()
