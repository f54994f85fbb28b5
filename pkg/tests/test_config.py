import os
import sys

sys.path.insert(1, os.path.join(sys.path[0], ".."))

import orjson
import pytest

from heed.config import RunConfig
from heed.exceptions import ConfigValidationError
from heed.exceptions import SchemaVersionError

CONFIGS = os.path.join(os.path.dirname(__file__), "..", "configs")


def test_defaults():
    config = RunConfig.from_dict({"schema_version": 1})
    assert config.scene.image_size == 64
    assert config.scene.link_lengths == [4.0, 3.0, 1.5]
    assert config.teacher.grid == 8
    assert config.teacher.d_psi == 64
    assert config.teacher.learning_rate == 1e-3
    assert config.teacher.epochs == 30
    assert config.teacher.batch_size == 32
    assert config.train.weights.motor == 1.0
    assert config.train.weights.cycle == 0.0
    assert config.eval.trials_per_cell == 10


def test_shipped_configs_load():
    smoke = RunConfig.load(os.path.join(CONFIGS, "smoke.json"))
    assert len(smoke.corpus.objects) == 2
    assert smoke.corpus.demos_per_pair == 10
    assert smoke.teacher.epochs == smoke.train.epochs == smoke.train.finetune_epochs == 2
    default = RunConfig.load(os.path.join(CONFIGS, "default.json"))
    assert len(default.scene.shapes) == 6
    assert len(default.scene.colors) == 4


def test_round_trip():
    config = RunConfig.load(os.path.join(CONFIGS, "smoke.json"))
    again = RunConfig.from_dict(orjson.loads(config.to_json()))
    assert again == config
    assert again.to_json() == config.to_json()


def test_unknown_top_level_key():
    with pytest.raises(ConfigValidationError) as err:
        RunConfig.from_dict({"schema_version": 1, "optimiser": {}})
    assert "Unknown Key" in err.value.errors


def test_unknown_section_key():
    with pytest.raises(ConfigValidationError) as err:
        RunConfig.from_dict({"schema_version": 1, "scene": {"image_sise": 64}})
    assert err.value.section == "scene"
    assert err.value.errors["Unknown Key"] == ["image_sise"]


def test_nested_weights_are_checked():
    with pytest.raises(ConfigValidationError) as err:
        RunConfig.from_dict({"schema_version": 1, "train": {"weights": {"rec": -1.0}}})
    assert err.value.section == "train.weights"


def test_wrong_type():
    with pytest.raises(ConfigValidationError) as err:
        RunConfig.from_dict({"schema_version": 1, "train": {"epochs": "ten"}})
    assert "Incorrect Type" in err.value.errors


def test_bool_is_not_an_int():
    with pytest.raises(ConfigValidationError):
        RunConfig.from_dict({"schema_version": 1, "train": {"epochs": True}})


def test_failed_expectation():
    with pytest.raises(ConfigValidationError) as err:
        RunConfig.from_dict({"schema_version": 1, "teacher": {"cell": "transformer"}})
    assert "Failed Expectation" in err.value.errors


def test_negative_epochs_rejected():
    with pytest.raises(ConfigValidationError):
        RunConfig.from_dict({"schema_version": 1, "teacher": {"epochs": -1}})


def test_schema_version():
    with pytest.raises(SchemaVersionError):
        RunConfig.from_dict({"schema_version": 2})
    with pytest.raises(SchemaVersionError):
        RunConfig.from_dict({})


def test_grid_must_divide_image():
    with pytest.raises(ConfigValidationError) as err:
        RunConfig.from_dict({"schema_version": 1, "scene": {"image_size": 64}, "teacher": {"grid": 6}})
    assert "Grid Does Not Divide Image" in err.value.errors


def test_object_must_be_in_catalog():
    with pytest.raises(ConfigValidationError):
        RunConfig.from_dict(
            {
                "schema_version": 1,
                "scene": {"shapes": ["bowl"], "colors": ["red"]},
                "corpus": {"objects": [["bowl", "blue"]]},
            }
        )


def test_invalid_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_bytes(b"{ not json")
    with pytest.raises(ConfigValidationError) as err:
        RunConfig.load(str(path))
    assert "Invalid JSON" in err.value.errors


if __name__ == "__main__":  # pragma: no cover
    from tests import run_tests

    run_tests()
