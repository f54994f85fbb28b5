import os
import sys

sys.path.insert(1, os.path.join(sys.path[0], ".."))

import orjson

from heed.cli import EXIT_CONFIG
from heed.cli import EXIT_INPUT
from heed.cli import EXIT_OK
from heed.cli import EXIT_USAGE
from heed.cli import RUN_MANIFEST
from heed.cli import dispatch
from heed.version import __version__
from tests.tiny import tiny_settings


def _config(tmp_path, **overrides) -> str:
    path = str(tmp_path / "config.json")
    with open(path, "wb") as handle:
        handle.write(orjson.dumps(tiny_settings(**overrides)))
    return path


def _manifest(out, name=RUN_MANIFEST) -> dict:
    with open(os.path.join(out, name), "rb") as handle:
        return orjson.loads(handle.read())


def test_help_and_version():
    assert dispatch(["--help"]) == EXIT_OK
    assert dispatch(["--version"]) == EXIT_OK
    assert dispatch(["evaluate", "--help"]) == EXIT_OK


def test_usage_errors(tmp_path):
    assert dispatch(["teleport"]) == EXIT_USAGE
    assert dispatch([]) == EXIT_USAGE
    assert dispatch(["train-teacher", "--config", _config(tmp_path), "--out", str(tmp_path)]) == EXIT_USAGE
    assert dispatch(["train-policy", "--variant", "giant"]) == EXIT_USAGE


def test_bad_config(tmp_path):
    path = str(tmp_path / "bad.json")
    with open(path, "wb") as handle:
        handle.write(b'{"schema_version": 1, "optimiser": {}}')
    assert dispatch(["generate-data", "--config", path, "--out", str(tmp_path / "out")]) == EXIT_CONFIG
    with open(path, "wb") as handle:
        handle.write(b'{"schema_version": 2}')
    assert dispatch(["generate-data", "--config", path, "--out", str(tmp_path / "out")]) == EXIT_CONFIG
    with open(path, "wb") as handle:
        handle.write(b"{not json")
    assert dispatch(["generate-data", "--config", path, "--out", str(tmp_path / "out")]) == EXIT_CONFIG


def test_missing_inputs(tmp_path):
    config = _config(tmp_path)
    missing = str(tmp_path / "nowhere")
    out = str(tmp_path / "out")
    assert dispatch(["train-teacher", "--config", config, "--data", missing, "--out", out]) == EXIT_INPUT
    assert (
        dispatch(["evaluate", "--config", config, "--suite", "benign", "--checkpoints", f"tfa={missing}", "--out", out])
        == EXIT_INPUT
    )
    assert dispatch(["generate-data", "--config", missing, "--out", out]) == EXIT_INPUT


def test_malformed_checkpoint_argument(tmp_path):
    config = _config(tmp_path)
    args = ["evaluate", "--config", config, "--suite", "benign", "--checkpoints", "tfa", "--out", str(tmp_path)]
    assert dispatch(args) == EXIT_CONFIG


def test_generate_data_writes_a_run_manifest(tmp_path):
    config = _config(tmp_path)
    first, second = str(tmp_path / "a"), str(tmp_path / "b")
    assert dispatch(["generate-data", "--config", config, "--out", first]) == EXIT_OK
    assert dispatch(["generate-data", "--config", config, "--out", second]) == EXIT_OK
    manifest = _manifest(first)
    assert manifest["stage"] == "generate-data"
    assert manifest["version"] == __version__
    assert manifest["seed"] == 11
    assert "manifest.json" in manifest["artifacts"]
    assert "dataset" in manifest["artifacts"]
    assert "config" in manifest["inputs"]
    assert manifest["arguments"]["stage"] == "generate-data"
    assert manifest["arguments"]["config"] == config
    assert manifest["arguments"]["out"] == first
    assert manifest["arguments"]["seed"] is None
    again = _manifest(second)
    assert again["arguments"]["out"] == second
    for document in (manifest, again):
        document.pop("wall_seconds")
        document["arguments"].pop("out")
    assert manifest == again


def test_seed_override(tmp_path):
    out = str(tmp_path / "out")
    assert dispatch(["generate-data", "--config", _config(tmp_path), "--out", out, "--seed", "5"]) == EXIT_OK
    assert _manifest(out)["seed"] == 5


def test_policy_before_teacher_is_an_input_error(tmp_path):
    config = _config(tmp_path)
    data = str(tmp_path / "data")
    assert dispatch(["generate-data", "--config", config, "--out", data]) == EXIT_OK
    out = str(tmp_path / "policy")
    assert dispatch(["train-policy", "--config", config, "--data", data, "--out", out]) == EXIT_INPUT


def test_pipeline(tmp_path):
    config = _config(tmp_path)
    data = str(tmp_path / "data")
    teacher = str(tmp_path / "teacher")
    policy = str(tmp_path / "policy")
    tuned = str(tmp_path / "tuned")
    report = str(tmp_path / "report")
    panels = str(tmp_path / "panels")

    assert dispatch(["generate-data", "--config", config, "--out", data]) == EXIT_OK
    assert dispatch(["train-teacher", "--config", config, "--data", data, "--out", teacher]) == EXIT_OK
    assert os.path.exists(os.path.join(teacher, "teacher.ckpt"))
    assert os.path.exists(os.path.join(teacher, "teacher_history.csv"))
    for variant in ("tfa", "baseline"):
        args = ["train-policy", "--config", config, "--data", data, "--out", policy, "--variant", variant]
        assert dispatch(args) == EXIT_OK
        assert os.path.exists(os.path.join(policy, f"{variant}.ckpt"))
        recorded = _manifest(policy, f"run_{variant}.json")
        assert recorded["arguments"]["variant"] == variant
        assert recorded["arguments"]["data"] == data
    assert _manifest(policy, "run_tfa.json")["arguments"]["variant"] == "tfa"
    tfa = os.path.join(policy, "tfa.ckpt")
    args = ["finetune-motor", "--config", config, "--data", data, "--checkpoint", tfa, "--out", tuned]
    assert dispatch(args) == EXIT_OK
    assert os.path.exists(os.path.join(tuned, "tfa_finetuned.ckpt"))
    assert _manifest(tuned, "run_tfa_finetuned.json")["arguments"]["checkpoint"] == tfa

    args = ["evaluate", "--config", config, "--suite", "benign", "--suite", "visual", "--trials", "1"]
    args += ["--checkpoints", f"tfa={tfa}", f"baseline={os.path.join(policy, 'baseline.ckpt')}", "--out", report]
    assert dispatch(args) == EXIT_OK
    for suite in ("benign", "visual"):
        assert os.path.exists(os.path.join(report, f"report_{suite}.csv"))
    assert set(_manifest(report)["inputs"]) == {"tfa", "baseline", "config"}
    assert _manifest(report)["arguments"]["suite"] == ["benign", "visual"]
    assert _manifest(report)["arguments"]["trials"] == 1

    args = ["visualize", "--config", config, "--data", data, "--teacher", os.path.join(teacher, "teacher.ckpt")]
    args += ["--checkpoint", tfa, "--out", panels]
    assert dispatch(args) == EXIT_OK
    assert os.path.exists(os.path.join(panels, "teacher_report.json"))
    assert os.path.exists(os.path.join(panels, "leakage.json"))
    assert os.path.exists(os.path.join(panels, "gorilla_hand.png"))


if __name__ == "__main__":  # pragma: no cover
    from tests import run_tests

    run_tests()
