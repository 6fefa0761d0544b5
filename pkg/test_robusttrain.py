"""Tests for base training, fine-tuning regularizers and the uniform-optimum check."""

from dataclasses import replace

import numpy as np
import pytest

from conftest import SMALL_CONFIG, random_samples, tiny_config
from src.config import config_from_dict
from src.diffcore import Graph
from src.diffcore.optim import opt_step
from src.errors import ConfigError, ContractError, DataError, DomainError, NumericalError
from src.robusttrain import (
    BASE,
    OE,
    RA,
    RA_VAR,
    TrainConfig,
    TrainLog,
    TrainLogRow,
    attention_kl_uniform,
    finetune,
    group_sources,
    method_from_name,
    oe_loss,
    output_kl_uniform,
    ra_loss,
    ra_objective,
    ra_var_loss,
    train_base,
    verify_theorem1,
)
from src.robusttrain.trainer import _quota, _regularizer_step, _task_step
from src.synthgen.dataset import id_path, read_dataset, read_mix_sources
from src.synthgen.world import world_from_config
from src.vqamodel import ModelConfig, Traced, init_model


def _data(seed=0, n=40):
    config = tiny_config()
    rng = np.random.default_rng(seed)
    id_train = random_samples(rng, n, config.K, config.M, config.d, config.vocab_size)
    id_val = random_samples(rng, 12, config.K, config.M, config.d, config.vocab_size)
    anomalies = random_samples(rng, 20, config.K, config.M, config.d, config.vocab_size, task="T1")
    return id_train, id_val, anomalies


def _uniform_traced(shape=(1, 1, 2, 2), n_answers=4) -> Traced:
    graph = Graph()
    cells = shape[2] * shape[3]
    attention = graph.parameter("A", np.full(shape, 1.0 / cells))
    logits = graph.parameter("logits", np.zeros((shape[0], n_answers)))
    return Traced(
        logits=logits,
        attention=attention,
        attention_logits=attention,
        cell_mask=np.ones(shape, dtype=bool),
        fused=logits,
        context=logits,
    )


def test_ra_closed_form_on_uniform_attention():
    loss = ra_loss(_uniform_traced(), lam=1e-5)
    expected = -1e-5 * 4 * np.log(0.75)
    assert loss.data.item() == pytest.approx(expected, rel=1e-12)
    assert loss.data.item() == pytest.approx(1.1507e-5, abs=1e-9)


def test_ra_var_vanishes_at_uniform_attention():
    assert ra_var_loss(_uniform_traced((2, 2, 3, 4)), lam_var=1.0).data.item() == pytest.approx(0.0, abs=1e-18)


def test_oe_at_uniform_output_is_log_n():
    assert oe_loss(_uniform_traced(n_answers=6), lam_oe=0.5).data.item() == pytest.approx(0.5 * np.log(6))


def test_ra_objective_peaks_at_uniform():
    rng = np.random.default_rng(0)
    for k in (2, 3, 5, 10):
        uniform = ra_objective(np.full(k, 1.0 / k))
        for _ in range(100):
            x = rng.dirichlet(np.ones(k))
            assert ra_objective(x) < uniform


def test_ra_gradient_stays_upstream_of_attention():
    config = tiny_config()
    model = init_model(config)
    _, _, anomalies = _data()
    cfg = TrainConfig(method=RA, lam=1.0, mix={"T1": 1.0})
    _, grads = _regularizer_step(model, anomalies[:8], cfg)
    for name in ("b_o", "W_o", "W_z", "b_z", "W_c", "b_c"):
        assert np.all(grads[name] == 0.0), name
    for name in ("W_u", "embed", "W_e"):
        assert np.any(grads[name] != 0.0), name


def test_zero_learning_rate_leaves_parameters_unchanged():
    model = init_model(tiny_config())
    id_train, id_val, _ = _data()
    trained, train_log = train_base(model, id_train, id_val, TrainConfig(epochs=3, batch_size=8, lr=0.0))
    for name in model.params:
        np.testing.assert_array_equal(trained.params[name], model.params[name])
    assert len(train_log) == 3


def test_one_step_decreases_batch_loss():
    model = init_model(tiny_config(seed=1))
    id_train, _, _ = _data(seed=1)
    batch = id_train[:16]
    before, grads = _task_step(model, batch)
    model = model.with_params(opt_step(TrainConfig(lr=0.005).optim_state(), model.params, grads))
    after, _ = _task_step(model, batch)
    assert after < before


def test_training_log_has_one_row_per_epoch(tmp_path):
    model = init_model(tiny_config())
    id_train, id_val, _ = _data()
    _, train_log = train_base(model, id_train, id_val, TrainConfig(epochs=2, batch_size=16))
    assert [r.epoch for r in train_log.rows] == [1, 2]
    assert all(0.0 <= r.val_accuracy <= 1.0 for r in train_log.rows)
    frame = train_log.to_frame()
    assert list(frame.columns) == ["epoch", "task_loss", "regularizer", "val_accuracy", "wall_time"]
    path = train_log.write(tmp_path / "log.csv")
    assert len(path.read_text().splitlines()) == 3


def test_zero_lambda_matches_continued_training():
    model = init_model(tiny_config())
    id_train, id_val, anomalies = _data()
    common = dict(epochs=2, batch_size=8, lr=0.001, seed=3, mix={"T1": 1.0})
    ra_model, _ = finetune(model, id_train, anomalies, TrainConfig(method=RA, lam=0.0, **common))
    base_model, _ = finetune(model, id_train, anomalies, TrainConfig(method=BASE, **common))
    for name in model.params:
        np.testing.assert_array_equal(ra_model.params[name], base_model.params[name])


def test_ra_flattens_anomaly_attention():
    model = init_model(tiny_config())
    id_train, _, anomalies = _data()
    common = dict(epochs=4, batch_size=8, lr=0.005, seed=3, mix={"T1": 1.0})
    ra_model, _ = finetune(model, id_train, anomalies, TrainConfig(method=RA, lam=1.0, **common))
    base_model, _ = finetune(model, id_train, anomalies, TrainConfig(method=BASE, **common))
    assert attention_kl_uniform(ra_model, anomalies) < attention_kl_uniform(base_model, anomalies)
    assert attention_kl_uniform(ra_model, anomalies) >= 0.0


@pytest.mark.parametrize("method", [OE, RA, RA_VAR])
def test_finetune_is_deterministic(method):
    model = init_model(tiny_config())
    id_train, id_val, anomalies = _data()
    cfg = TrainConfig(method=method, lam=1e-2, epochs=2, batch_size=8, lr=0.001, mix={"T1": 1.0})
    a, log_a = finetune(model, id_train, anomalies, cfg, id_val)
    b, log_b = finetune(model, id_train, anomalies, cfg, id_val)
    for name in model.params:
        np.testing.assert_array_equal(a.params[name], b.params[name])
    assert log_a.deterministic_view() == log_b.deterministic_view()
    assert any(not np.array_equal(a.params[n], model.params[n]) for n in model.params)
    assert all(r.regularizer > 0 for r in log_a.rows)


def test_base_training_is_deterministic():
    model = init_model(tiny_config())
    id_train, id_val, _ = _data()
    cfg = TrainConfig(epochs=2, batch_size=8)
    a, log_a = train_base(model, id_train, id_val, cfg)
    b, log_b = train_base(model, id_train, id_val, cfg)
    for name in model.params:
        np.testing.assert_array_equal(a.params[name], b.params[name])
    assert log_a.deterministic_view() == log_b.deterministic_view()


def test_training_data_errors():
    model = init_model(tiny_config())
    id_train, id_val, anomalies = _data()
    with pytest.raises(DataError):
        train_base(model, id_train + anomalies[:1], id_val, TrainConfig(epochs=1))
    with pytest.raises(ContractError):
        train_base(model, id_train, id_val, TrainConfig(method=RA, mix={"T1": 1.0}))

    cfg = TrainConfig(method=RA, epochs=1, mix={"T1": 1.0})
    with pytest.raises(DataError):
        finetune(model, id_train, {"T1": id_train[:5]}, cfg)
    eval_family = [replace(s, family="EVAL") for s in anomalies[:5]]
    with pytest.raises(DataError):
        finetune(model, id_train, {"T1": eval_family}, cfg)
    with pytest.raises(DataError):
        finetune(model, id_train, {"T1": []}, cfg)
    with pytest.raises(DataError):
        finetune(model, id_train, anomalies, TrainConfig(method=RA, epochs=1, mix={"T4": 1.0}))


def test_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(method="SGD")
    with pytest.raises(ConfigError):
        TrainConfig(lam=-1.0)
    with pytest.raises(ConfigError):
        TrainConfig(batch_size=0)
    with pytest.raises(ConfigError):
        TrainConfig(mix={"T1": 0.0})
    with pytest.raises(ConfigError):
        method_from_name("dropout")
    assert method_from_name("RA-VAR") == RA_VAR


def test_finetune_config_from_sections(small_config):
    cfg = TrainConfig.for_finetune(small_config.finetune, small_config.train, seed=7, method="oe", lam=0.1)
    assert cfg.method == OE
    assert cfg.lam == 0.1
    assert cfg.optimizer == small_config.train.optimizer
    assert cfg.epochs == 1


def test_balanced_mix_quota():
    assert _quota({"T1": 1.0, "T4": 1.0, "T4/nonvisual": 1.0}, 64) == {
        "T1": 22,
        "T4": 21,
        "T4/nonvisual": 21,
    }
    assert _quota({"T1": 3.0, "T2": 1.0, "T3": 0.0}, 8) == {"T1": 6, "T2": 2}


def test_group_sources_by_variant(world):
    from src.synthgen import gen_anomaly

    samples = gen_anomaly(world, "T4", "TRAIN", 3, seed=0) + gen_anomaly(
        world, "T4", "TRAIN", 2, seed=0, variant="nonvisual"
    )
    groups = group_sources(samples)
    assert {k: len(v) for k, v in groups.items()} == {"T4": 3, "T4/nonvisual": 2}


def test_train_log_deterministic_view_drops_wall_time():
    train_log = TrainLog()
    train_log.append(TrainLogRow(1, 0.5, 0.0, 0.9, 12.3))
    assert train_log.deterministic_view() == [(1, 0.5, 0.0, 0.9)]


def test_uniform_optimum_two_objects():
    report = verify_theorem1(2, trials=20)
    assert report.optimum == pytest.approx(-1.386294, abs=1e-5)
    assert report.closed_form == pytest.approx(2 * np.log(0.5), abs=1e-12)
    assert report.max_deviation < 1e-3


def test_uniform_optimum_five_objects():
    assert verify_theorem1(5, trials=100).max_deviation < 1e-3


def test_uniform_optimum_many_objects():
    assert verify_theorem1(36, trials=10).max_deviation < 1e-3


@pytest.mark.slow
def test_uniform_optimum_many_objects_all_trials():
    assert verify_theorem1(36, trials=100).max_deviation < 1e-3


def test_uniform_optimum_errors():
    with pytest.raises(DomainError):
        verify_theorem1(1)
    with pytest.raises(DomainError):
        verify_theorem1(3, tol=0.0)
    with pytest.raises(NumericalError) as info:
        verify_theorem1(36, trials=5, tol=1e-9, max_iter=1)
    assert info.value.exit_code == 4


@pytest.mark.slow
def test_outlier_exposure_flattens_anomaly_outputs(suite_dir):
    config = config_from_dict({**SMALL_CONFIG, "train": {"epochs": 10, "batch_size": 32}})
    spec = world_from_config(config.world)
    id_train = read_dataset(id_path(suite_dir, "train"))
    id_val = read_dataset(id_path(suite_dir, "val"))
    model = init_model(ModelConfig.from_world(config.model, spec, config.seed))
    model, _ = train_base(model, id_train, id_val, TrainConfig.for_base(config.train, config.seed))

    sources = read_mix_sources(suite_dir, {"T1": 1.0, "T4": 1.0})
    anomalies = [s for samples in sources.values() for s in samples]
    before = output_kl_uniform(model, anomalies)
    cfg = TrainConfig(method=OE, epochs=10, batch_size=32, lr=0.005, mix={"T1": 1.0, "T4": 1.0}, lam_oe=1.0)
    tuned, _ = finetune(model, id_train, sources, cfg)
    assert output_kl_uniform(tuned, anomalies) <= 0.5 * before
