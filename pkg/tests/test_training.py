import os
import sys

sys.path.insert(1, os.path.join(sys.path[0], ".."))

import math

import numpy
import pytest
import torch

from heed.corpus.dataset import load_dataset
from heed.exceptions import CompatibilityError
from heed.exceptions import TrainingFailureError
from heed.training import finetune_motor
from heed.training import load_policies
from heed.training import load_teacher
from heed.training import precompute_attention
from heed.training import teacher_checkpoint
from heed.training import train_baseline
from heed.training import train_end_to_end
from heed.training import train_teacher
from heed.training.checkpoint import Checkpoint
from heed.training.policy_training import build_policy
from heed.training.policy_training import cell_key
from heed.training.policy_training import split_components
from heed.training.policy_training import weighted_overall
from tests.tiny import tiny_config
from tests.tiny import tiny_dataset


def _with_attention(path, value=None):
    handle = tiny_dataset(path)
    k = 16
    maps = {}
    for entry in handle.demos:
        rows = numpy.random.default_rng(entry["index"]).random((entry["length"], k)).astype(numpy.float32)
        rows /= rows.sum(axis=1, keepdims=True)
        if value is not None:
            rows[:] = value
        maps[entry["index"]] = rows
    handle.attach_attention(maps, grid=4)
    return handle


def test_teacher_training_and_precompute(tmp_path):
    config = tiny_config()
    handle = tiny_dataset(tmp_path)
    teacher, history = train_teacher(handle, config, seed=1)
    assert [(r["epoch"], r["split"]) for r in history.records] == [
        (0, "validation"),
        (1, "train"),
        (1, "validation"),
    ]
    assert all(math.isfinite(r["attention"]) for r in history.records)
    precompute_attention(teacher, handle)
    loaded = load_dataset(str(tmp_path))
    maps = loaded.attention(0)
    assert maps.shape == (loaded.demos[0]["length"], 16)
    assert numpy.allclose(maps.sum(axis=1), 1.0, atol=1e-5)


def test_teacher_checkpoint_round_trip(tmp_path):
    config = tiny_config(teacher__epochs=0)
    handle = tiny_dataset(tmp_path)
    teacher, history = train_teacher(handle, config, seed=1)
    path = str(tmp_path / "teacher.ckpt")
    teacher_checkpoint(teacher, config, history, 0).save(path)
    restored = load_teacher(Checkpoint.load(path), config, handle.vocabulary.size)
    for key, value in teacher.state_dict().items():
        assert torch.equal(value, restored.state_dict()[key])


def test_teacher_checkpoint_must_fit_the_config(tmp_path):
    config = tiny_config(teacher__epochs=0)
    handle = tiny_dataset(tmp_path)
    teacher, history = train_teacher(handle, config, seed=1)
    checkpoint = teacher_checkpoint(teacher, config, history, 0)
    wider = tiny_config(teacher__d_h=24)
    with pytest.raises(CompatibilityError):
        load_teacher(checkpoint, wider, handle.vocabulary.size)
    with pytest.raises(CompatibilityError):
        load_teacher(checkpoint, config, handle.vocabulary.size + 1)
    policies = Checkpoint.from_modules("policy", config.to_dict(), {"policy": build_policy(config, 1, "tfa_full")})
    with pytest.raises(CompatibilityError):
        load_teacher(policies, config, handle.vocabulary.size)


def test_policy_needs_attention_maps(tmp_path):
    with pytest.raises(CompatibilityError):
        train_end_to_end(tiny_dataset(tmp_path), tiny_config(), seed=1)


def test_zero_epochs_returns_the_initial_weights(tmp_path):
    config = tiny_config(train__epochs=0)
    checkpoint = train_end_to_end(_with_attention(tmp_path), config, seed=4)
    initial = build_policy(config, 4, "tfa_full")
    for key, value in initial.state_dict().items():
        assert numpy.array_equal(value.numpy(), checkpoint.state["policy"][key])
    assert [r["epoch"] for r in checkpoint.history] == [0]


def test_training_is_deterministic(tmp_path):
    handle = _with_attention(tmp_path)
    config = tiny_config()
    a = train_end_to_end(handle, config, seed=2)
    b = train_end_to_end(handle, config, seed=2)
    assert a.to_bytes() == b.to_bytes()
    c = train_end_to_end(handle, config, seed=3)
    assert c.to_bytes() != a.to_bytes()


def test_overall_is_the_weighted_sum(tmp_path):
    config = tiny_config(train__weights={"cycle": 0.5, "rec": 2.0})
    checkpoint = train_end_to_end(_with_attention(tmp_path), config, seed=5)
    train_records = [r for r in checkpoint.history if r["split"] == "train"]
    assert train_records
    for record in train_records:
        overall, components = split_components(record)
        assert "cycle" in components
        assert abs(overall - weighted_overall(components, config.train.weights)) <= 1e-10
        assert all(math.isfinite(v) for v in components.values())


def test_baseline_cells(tmp_path):
    handle = _with_attention(tmp_path)
    checkpoint = train_baseline(handle, tiny_config(), seed=1)
    assert checkpoint.variant == "baseline_no_tfa"
    assert sorted(checkpoint.state) == [cell_key("pick_up", 0, 0), cell_key("push_left", 0, 0)]
    assert checkpoint.extra["cells"] == sorted(checkpoint.state)
    policies = load_policies(checkpoint, tiny_config())
    assert all(p.vision.discriminator is None for p in policies.values())


def test_shared_baseline_sees_the_same_batches(tmp_path):
    handle = _with_attention(tmp_path)
    config = tiny_config(train__epochs=2)
    tfa = train_end_to_end(handle, config, seed=6)
    baseline = train_baseline(handle, config, seed=6, per_task=False)
    assert sorted(baseline.state) == ["policy"]
    assert baseline.extra["batch_orders"] == tfa.extra["batch_orders"]
    assert len(tfa.extra["batch_orders"]) == 4


def test_finetune_only_moves_the_motor_net(tmp_path):
    handle = _with_attention(tmp_path)
    config = tiny_config()
    trained = train_end_to_end(handle, config, seed=7)
    tuned = finetune_motor(trained, handle, config, seed=7)
    assert tuned.extra["finetune_epochs"] == 1
    assert tuned.variant == "tfa_full"
    before, after = trained.state["policy"], tuned.state["policy"]
    vision = [key for key in before if key.startswith("vision.")]
    motor = [key for key in before if key.startswith("motor.")]
    assert all(numpy.array_equal(before[key], after[key]) for key in vision)
    assert any(not numpy.array_equal(before[key], after[key]) for key in motor)


def test_mismatched_config_is_incompatible(tmp_path):
    checkpoint = train_end_to_end(_with_attention(tmp_path), tiny_config(train__epochs=0), seed=1)
    with pytest.raises(CompatibilityError):
        load_policies(checkpoint, tiny_config(vision__d_z=12))


def test_divergence_writes_a_diagnostic(tmp_path):
    handle = _with_attention(tmp_path / "data", value=float("nan"))
    diagnostic = str(tmp_path / "diagnostic.ckpt")
    with pytest.raises(TrainingFailureError) as err:
        train_end_to_end(handle, tiny_config(), seed=1, diagnostic_path=diagnostic)
    assert err.value.stage == "train_policy"
    assert err.value.epoch == 1
    assert os.path.exists(diagnostic)
    assert Checkpoint.load(diagnostic).kind == "policy"


if __name__ == "__main__":  # pragma: no cover
    from tests import run_tests

    run_tests()
