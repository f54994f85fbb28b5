# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""
Command line entry point.

    heed generate-data  --config C --out DATA
    heed train-teacher  --config C --data DATA --out DIR
    heed train-policy   --config C --data DATA --out DIR --variant {tfa,baseline}
    heed finetune-motor --config C --data DATA --checkpoint CKPT --out DIR
    heed evaluate       --config C --suite {benign,physical,visual} --checkpoints tfa=CKPT ... --out DIR
    heed visualize      --config C --data DATA --teacher CKPT [--checkpoint CKPT] --out DIR

Every stage writes a run manifest into its output directory: its arguments, the
config snapshot, the seed, checksums of its inputs and of the files it wrote, and
the wall time. It is `run.json`, except for the stages that can share a directory:
`run_<variant>.json` for train-policy and `run_<name>_finetuned.json` for
finetune-motor.
"""

import argparse
import os
import sys
import time
from typing import Callable
from typing import Dict
from typing import List
from typing import Optional

import orjson

from heed.config import RunConfig
from heed.corpus.dataset import build_dataset
from heed.corpus.dataset import load_dataset
from heed.exceptions import CompatibilityError
from heed.exceptions import ConfigError
from heed.exceptions import DataError
from heed.exceptions import HeedError
from heed.logging import get_logger
from heed.sim.catalog import Catalog
from heed.sim.render import save_png
from heed.tools import content_hash
from heed.tools import derive_seed
from heed.version import __version__

EXIT_OK: int = 0
EXIT_USAGE: int = 2
EXIT_CONFIG: int = 3
EXIT_INPUT: int = 4
EXIT_FAILURE: int = 5

RUN_MANIFEST: str = "run.json"
VARIANTS = {"tfa": "tfa_full", "baseline": "baseline_no_tfa"}
TEACHER_PANELS: int = 4

logger = get_logger()


def _dump(document) -> bytes:
    return orjson.dumps(document, option=orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2)


def _file_checksum(path: str) -> str:
    with open(path, "rb") as handle:
        return content_hash(handle.read())


def _is_manifest(name: str) -> bool:
    return name.startswith("run") and name.endswith(".json")


def manifest_name(args) -> str:
    if args.stage == "train-policy":
        return f"run_{args.variant}.json"
    if args.stage == "finetune-motor":
        stem = os.path.splitext(os.path.basename(args.checkpoint))[0]
        return f"run_{stem}_finetuned.json"
    return RUN_MANIFEST


def _artifacts(out: str) -> Dict[str, str]:
    """Checksums of the files a stage wrote at the top of its output directory."""
    return {
        name: _file_checksum(os.path.join(out, name))
        for name in sorted(os.listdir(out))
        if not _is_manifest(name) and os.path.isfile(os.path.join(out, name))
    }


def write_run_manifest(
    out: str,
    stage: str,
    config: RunConfig,
    seed: int,
    inputs: Dict[str, str],
    extra: Optional[Dict[str, str]] = None,
    wall_seconds: float = 0.0,
    arguments: Optional[Dict] = None,
    name: str = RUN_MANIFEST,
) -> str:
    manifest = {
        "stage": stage,
        "arguments": arguments or {},
        "version": __version__,
        "seed": seed,
        "config": config.to_dict(),
        "inputs": inputs,
        "artifacts": {**_artifacts(out), **(extra or {})},
        "wall_seconds": round(wall_seconds, 3),
    }
    path = os.path.join(out, name)
    with open(path, "wb") as handle:
        handle.write(_dump(manifest))
    logger.audit({"run_manifest": path, "stage": stage, "artifacts": len(manifest["artifacts"])})
    return path


# ---------------------------------------------------------------------------------
# stages; each returns (inputs, extra artifact checksums)


def _generate_data(args, config: RunConfig, seed: int):
    handle = build_dataset(config, seed, args.out)
    return {}, {"dataset": handle.checksum}


def _train_teacher(args, config: RunConfig, seed: int):
    from heed.training.teacher_training import precompute_attention
    from heed.training.teacher_training import teacher_checkpoint
    from heed.training.teacher_training import teacher_output_paths
    from heed.training.teacher_training import train_teacher

    handle = load_dataset(args.data)
    inputs = {"dataset": handle.checksum}
    paths = teacher_output_paths(args.out)
    teacher, history = train_teacher(handle, config, seed, paths["diagnostic"])
    teacher_checkpoint(teacher, config, history, config.teacher.epochs).save(paths["checkpoint"])
    history.to_csv(paths["history"])
    precompute_attention(teacher, handle)
    return inputs, {"dataset_with_attention": handle.checksum}


def _train_policy(args, config: RunConfig, seed: int):
    from heed.training.policy_training import policy_history
    from heed.training.policy_training import train_baseline
    from heed.training.policy_training import train_end_to_end

    handle = load_dataset(args.data)
    inputs = {"dataset": handle.checksum}
    diagnostic = os.path.join(args.out, f"{args.variant}_diagnostic.ckpt")
    if args.variant == "tfa":
        checkpoint = train_end_to_end(handle, config, seed, diagnostic)
    else:
        checkpoint = train_baseline(handle, config, seed, per_task=True, diagnostic_path=diagnostic)
    checkpoint.save(os.path.join(args.out, f"{args.variant}.ckpt"))
    policy_history(checkpoint).to_csv(os.path.join(args.out, f"{args.variant}_history.csv"))
    return inputs, {}


def _finetune_motor(args, config: RunConfig, seed: int):
    from heed.training.checkpoint import Checkpoint
    from heed.training.policy_training import finetune_motor
    from heed.training.policy_training import policy_history

    handle = load_dataset(args.data)
    source = Checkpoint.load(args.checkpoint)
    inputs = {"dataset": handle.checksum, "checkpoint": source.checksum}
    name = os.path.splitext(os.path.basename(args.checkpoint))[0]
    diagnostic = os.path.join(args.out, f"{name}_finetune_diagnostic.ckpt")
    tuned = finetune_motor(source, handle, config, seed, diagnostic)
    tuned.save(os.path.join(args.out, f"{name}_finetuned.ckpt"))
    policy_history(tuned).to_csv(os.path.join(args.out, f"{name}_finetuned_history.csv"))
    return inputs, {}


def _parse_checkpoints(values: List[str]) -> Dict[str, str]:
    found = {}
    for value in values:
        name, sep, path = value.partition("=")
        if not sep or not name or not path:
            raise ConfigError(f"checkpoints are given as name=path, not `{value}`")
        found[name] = path
    return found


def _evaluate(args, config: RunConfig, seed: int):
    from heed.evaluation.harness import run_suite
    from heed.evaluation.policies import PolicyAgent
    from heed.training.checkpoint import Checkpoint

    agents, inputs = {}, {}
    for name, path in _parse_checkpoints(args.checkpoints).items():
        checkpoint = Checkpoint.load(path)
        agents[name] = PolicyAgent.from_checkpoint(checkpoint, config)
        inputs[name] = checkpoint.checksum
    trials = config.eval.trials_per_cell if args.trials is None else args.trials
    for suite in args.suite:
        report = run_suite(agents, suite, trials, seed, config, args.out)
        print(report.to_text())
    return inputs, {}


def _visualize(args, config: RunConfig, seed: int):
    from heed.evaluation.attention import evaluate_teacher
    from heed.evaluation.attention import teacher_panel
    from heed.evaluation.gorilla import gorilla_analysis
    from heed.evaluation.harness import trial_scene
    from heed.evaluation.policies import PolicyAgent
    from heed.training.checkpoint import Checkpoint
    from heed.training.teacher_training import load_teacher

    handle = load_dataset(args.data)
    source = Checkpoint.load(args.teacher)
    inputs = {"dataset": handle.checksum, "teacher": source.checksum}
    teacher = load_teacher(source, config, handle.vocabulary.size)

    report = evaluate_teacher(teacher, handle)
    with open(os.path.join(args.out, "teacher_report.json"), "wb") as handle_out:
        handle_out.write(_dump(report.to_dict()))
    for index in handle.split("validation")[:TEACHER_PANELS]:
        panel = teacher_panel(teacher, handle, index, config.eval.panel_frames)
        save_png(panel, os.path.join(args.out, f"teacher_{index:06d}.png"))

    if args.checkpoint:
        policies = Checkpoint.load(args.checkpoint)
        inputs["checkpoint"] = policies.checksum
        agent = PolicyAgent.from_checkpoint(policies, config)
        catalog = Catalog.from_config(config.scene)
        verb = config.corpus.tasks[0]
        shape, color = config.corpus.objects[0]
        pair = (catalog.shape_id(shape), catalog.color_id(color))
        scene, command, horizon = trial_scene(config, verb, pair, derive_seed(seed, "gorilla"))
        leakage = {}
        for sprite in config.eval.sprites:
            result, panel = gorilla_analysis(
                agent.select(command), scene, command, sprite, derive_seed(seed, sprite), config, horizon
            )
            save_png(panel, os.path.join(args.out, f"gorilla_{sprite}.png"))
            leakage[sprite] = result.to_dict()
        with open(os.path.join(args.out, "leakage.json"), "wb") as handle_out:
            handle_out.write(_dump(leakage))
    return inputs, {}


STAGES: Dict[str, Callable] = {
    "generate-data": _generate_data,
    "train-teacher": _train_teacher,
    "train-policy": _train_policy,
    "finetune-motor": _finetune_motor,
    "evaluate": _evaluate,
    "visualize": _visualize,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heed", description="Language-conditioned visuomotor policies with task-focused attention."
    )
    parser.add_argument("--version", action="version", version=f"heed {__version__}")
    commands = parser.add_subparsers(dest="stage", metavar="STAGE", required=True)

    def stage(name: str, help: str) -> argparse.ArgumentParser:
        sub = commands.add_parser(name, help=help)
        sub.add_argument("--config", required=True, help="run configuration (JSON)")
        sub.add_argument("--out", required=True, help="output directory")
        sub.add_argument("--seed", type=int, default=None, help="override the configured seed")
        return sub

    stage("generate-data", "record expert demonstrations")
    sub = stage("train-teacher", "train the attention teacher and precompute its maps")
    sub.add_argument("--data", required=True, help="dataset directory")
    sub = stage("train-policy", "train a visuomotor policy")
    sub.add_argument("--data", required=True, help="dataset directory")
    sub.add_argument("--variant", choices=sorted(VARIANTS), default="tfa")
    sub = stage("finetune-motor", "fine-tune the motor net with the vision net frozen")
    sub.add_argument("--data", required=True, help="dataset directory")
    sub.add_argument("--checkpoint", required=True, help="policy checkpoint")
    sub = stage("evaluate", "run evaluation suites")
    sub.add_argument("--suite", choices=["benign", "physical", "visual"], action="append", required=True)
    sub.add_argument("--checkpoints", nargs="+", required=True, metavar="NAME=PATH")
    sub.add_argument("--trials", type=int, default=None, help="trials per (task, object) cell")
    sub = stage("visualize", "teacher attention metrics and panels, distractor leakage panels")
    sub.add_argument("--data", required=True, help="dataset directory")
    sub.add_argument("--teacher", required=True, help="teacher checkpoint")
    sub.add_argument("--checkpoint", default=None, help="policy checkpoint for leakage panels")
    return parser


def dispatch(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_OK if err.code in (0, None) else EXIT_USAGE

    start = time.monotonic()
    try:
        config = RunConfig.load(args.config)
        seed = config.seed if args.seed is None else args.seed
        os.makedirs(args.out, exist_ok=True)
        logger.info({"stage": args.stage, "out": args.out, "seed": seed})
        inputs, extra = STAGES[args.stage](args, config, seed)
        inputs["config"] = _file_checksum(args.config)
        write_run_manifest(
            args.out,
            args.stage,
            config,
            seed,
            inputs,
            extra,
            time.monotonic() - start,
            arguments=vars(args),
            name=manifest_name(args),
        )
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, CompatibilityError, FileNotFoundError) as err:
        print(f"input error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except HeedError as err:
        logger.alert({"stage": args.stage, "failed": str(err)})
        print(f"stage `{args.stage}` failed: {err}", file=sys.stderr)
        return EXIT_FAILURE

    logger.info({"stage": args.stage, "finished": True, "seconds": round(time.monotonic() - start, 3)})
    return EXIT_OK


def main():  # pragma: no cover
    sys.exit(dispatch(sys.argv[1:]))
