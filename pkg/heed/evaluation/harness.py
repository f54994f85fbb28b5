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
The evaluation harness.

Three suites run every (task, object) cell for every agent over the same seeded
scenes: `benign`, `physical` (one shove or strip per episode) and `visual` (one
distractor sprite per episode). Success is read from the episode log only.
Episodes where the disturbance could not be applied are excluded, not failed.
"""

import math
import os
from dataclasses import asdict
from dataclasses import dataclass
from itertools import count
from typing import Any
from typing import Dict
from typing import List
from typing import Optional
from typing import Tuple

import orjson
import pandas

from heed.config import RunConfig
from heed.corpus.vocabulary import Vocabulary
from heed.corpus.vocabulary import grammar_sample
from heed.display import ascii_table
from heed.exceptions import DisturbanceNotApplicableError
from heed.exceptions import InfeasibleTaskError
from heed.exceptions import OcclusionError
from heed.exceptions import OverDenseSceneError
from heed.logging import get_logger
from heed.sim.catalog import Catalog
from heed.sim.disturbances import MODES
from heed.sim.disturbances import PhysicalDisturbance
from heed.sim.disturbances import add_distractor
from heed.sim.episode import expert_horizon
from heed.sim.episode import run_episode
from heed.sim.episode import task_success
from heed.sim.expert import locate_target
from heed.sim.scene import Scene
from heed.sim.scene import make_scene
from heed.tools import derive_seed
from heed.tools import retry

SUITES = ("benign", "physical", "visual")
SECTION_TITLES = {
    "benign": "Task success rate",
    "physical": "Rate of recovery after physical disturbance",
    "visual": "Task success rate with visual distractors",
}
WILSON_Z: float = 1.959963984540054

logger = get_logger()


@dataclass
class DisturbanceSpec:
    kind: str = "none"  # none | physical | visual
    mode: Optional[str] = None
    sprite: Optional[str] = None

    def describe(self) -> Dict[str, Any]:
        return {k: v for k, v in asdict(self).items() if v is not None}


@dataclass
class TrialRecord:
    variant: str
    task: str
    shape: str
    color: str
    seed: int
    disturbance: Dict[str, Any]
    success: bool
    steps_used: int
    log_path: Optional[str] = None
    excluded: bool = False
    reason: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class SuiteReport:
    suite: str
    table: pandas.DataFrame
    trials: List[TrialRecord]
    footer: List[str]

    @property
    def excluded(self) -> List[TrialRecord]:
        return [t for t in self.trials if t.excluded]

    def to_text(self) -> str:
        return ascii_table(self.table, title=SECTION_TITLES[self.suite], footer=self.footer)

    def write(self, out: str) -> Dict[str, str]:
        os.makedirs(out, exist_ok=True)
        paths = {
            "csv": os.path.join(out, f"report_{self.suite}.csv"),
            "text": os.path.join(out, f"report_{self.suite}.txt"),
            "trials": os.path.join(out, f"trials_{self.suite}.jsonl"),
        }
        self.table.to_csv(paths["csv"], index=False, float_format="%.4f", lineterminator="\n")
        with open(paths["text"], "w", encoding="utf-8") as handle:
            handle.write(self.to_text() + "\n")
        with open(paths["trials"], "wb") as handle:
            for trial in self.trials:
                handle.write(orjson.dumps(trial.to_dict(), option=orjson.OPT_SORT_KEYS) + b"\n")
        return paths


def wilson_interval(successes: int, trials: int, z: float = WILSON_Z) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion; (0, 1) when there are no trials."""
    if trials == 0:
        return 0.0, 1.0
    p = successes / trials
    denominator = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denominator
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denominator
    return max(0.0, centre - half), min(1.0, centre + half)


def run_policy_episode(
    agent,
    scene: Scene,
    command,
    disturbance: DisturbanceSpec,
    seed: int,
    config: RunConfig,
    horizon: Optional[int] = None,
    log_path: Optional[str] = None,
) -> TrialRecord:
    """
    One closed-loop rollout of `agent` on `scene`. Raises CompatibilityError when the
    agent was trained for a different scene layout; a disturbance that cannot be
    applied (or never triggers) gives an excluded record.
    """
    agent.check(scene.config)
    catalog = Catalog.from_config(scene.config)
    target = locate_target(scene, command)
    if horizon is None:
        horizon = expert_horizon(scene, command)

    record = TrialRecord(
        variant=agent.variant,
        task=command.verb,
        shape=catalog.shapes[command.shape_id],
        color=catalog.colors[command.color_id],
        seed=seed,
        disturbance=disturbance.describe(),
        success=False,
        steps_used=0,
        log_path=log_path,
    )

    physical = None
    try:
        if disturbance.kind == "physical":
            physical = PhysicalDisturbance(disturbance.mode, derive_seed(seed, "disturbance"))
        elif disturbance.kind == "visual":
            scene = add_distractor(
                scene,
                disturbance.sprite,
                target,
                horizon,
                derive_seed(seed, "sprite"),
                config.eval.sprite_speed,
                config.eval.sprite_attempts,
            )
        controller = agent.controller(scene, command, derive_seed(seed, "controller"))
        episode = run_episode(scene, command, controller, horizon, disturbance=physical)
    except (DisturbanceNotApplicableError, OcclusionError) as err:
        record.excluded, record.reason = True, str(err)
        logger.warning({"excluded": record.to_dict()})
        return record

    if log_path:
        os.makedirs(os.path.dirname(log_path) or ".", exist_ok=True)
        episode.log.write(log_path)

    record.success = task_success(episode.log, command)
    record.steps_used = episode.steps
    if physical is not None:
        if physical.applied is None:
            record.excluded, record.reason = True, "disturbance never triggered"
            logger.warning({"excluded": record.to_dict()})
        else:
            record.disturbance["step"] = physical.applied["step"]
    return record


def trial_scene(config: RunConfig, verb: str, pair: Tuple[int, int], seed: int):
    """A scene with the commanded object in which the expert can finish, and its command."""
    catalog = Catalog.from_config(config.scene)
    vocabulary = Vocabulary.from_catalog(catalog)
    attempts = count()

    @retry(
        max_tries=config.corpus.resample_attempts,
        retry_exceptions=(OverDenseSceneError, InfeasibleTaskError),
    )
    def _attempt():
        scene_seed = derive_seed(seed, next(attempts))
        scene = make_scene(config.scene, scene_seed, required=[pair])
        command = grammar_sample(scene.objects[0], verb, scene_seed, catalog, vocabulary)
        return scene, command, expert_horizon(scene, command)

    return _attempt()


def suite_disturbance(suite: str, verb: str, trial: int, sprites: List[str]) -> DisturbanceSpec:
    """Physical trials alternate the two modes; push tasks are never held, so they are shoved."""
    if suite == "physical":
        mode = MODES[trial % len(MODES)] if verb == "pick_up" else "pre_grasp_shove"
        return DisturbanceSpec(kind="physical", mode=mode)
    if suite == "visual":
        return DisturbanceSpec(kind="visual", sprite=sprites[trial % len(sprites)])
    return DisturbanceSpec()


def summarise(trials: List[TrialRecord], variants: List[str]) -> pandas.DataFrame:
    columns = ["task", "object", "variant", "trials", "successes", "success_rate"]
    counted = [t for t in trials if not t.excluded]
    if not counted:
        return pandas.DataFrame(columns=columns)
    frame = pandas.DataFrame(
        [
            {
                "task": t.task,
                "object": f"{t.color} {t.shape}",
                "variant": t.variant,
                "success": int(t.success),
            }
            for t in counted
        ]
    )
    cells = (
        frame.groupby(["task", "object", "variant"], sort=False)["success"]
        .agg(trials="count", successes="sum")
        .reset_index()
    )
    overall = (
        cells.groupby(["task", "variant"], sort=False)[["trials", "successes"]].sum().reset_index()
    )
    overall.insert(1, "object", "Overall")
    table = pandas.concat([cells, overall], ignore_index=True)
    order = {name: i for i, name in enumerate(variants)}
    table["_variant"] = table["variant"].map(order)
    table["_overall"] = table["object"] == "Overall"
    table = table.sort_values(["task", "_overall", "object", "_variant"], kind="stable")
    table["success_rate"] = 100.0 * table["successes"] / table["trials"]
    return table[columns].reset_index(drop=True)


def report_footer(table: pandas.DataFrame, excluded: int) -> List[str]:
    footer = []
    for row in table[table["object"] == "Overall"].itertuples(index=False):
        low, high = wilson_interval(int(row.successes), int(row.trials))
        footer.append(
            f"{row.task} / {row.variant}: {row.successes}/{row.trials} "
            f"({row.success_rate:.1f}%), 95% CI [{100 * low:.1f}%, {100 * high:.1f}%]"
        )
    footer.append(f"excluded trials: {excluded}")
    return footer


def run_suite(
    agents: Dict[str, Any],
    suite: str,
    trials_per_cell: int,
    seed: int,
    config: RunConfig,
    out: Optional[str] = None,
) -> SuiteReport:
    """
    Every agent runs the same seeded scene for each (task, object, trial), so benign
    and disturbed episodes of one variant match up to the disturbance step.
    """
    if suite not in SUITES:
        raise ValueError(f"unknown suite `{suite}`, expected one of {SUITES}")
    catalog = Catalog.from_config(config.scene)
    trials: List[TrialRecord] = []

    for verb in config.corpus.tasks:
        for shape, color in config.corpus.objects:
            pair = (catalog.shape_id(shape), catalog.color_id(color))
            for trial in range(trials_per_cell):
                trial_seed = derive_seed(seed, "trial", verb, shape, color, trial)
                disturbance = suite_disturbance(suite, verb, trial, config.eval.sprites)
                for name, agent in agents.items():
                    # each agent gets its own fresh copy of the scene
                    scene, command, horizon = trial_scene(config, verb, pair, trial_seed)
                    log_path = None
                    if out:
                        log_path = os.path.join(
                            out, "episodes", suite, name, f"{verb}_{shape}_{color}_{trial:03d}.jsonl"
                        )
                    record = run_policy_episode(
                        agent, scene, command, disturbance, trial_seed, config, horizon, log_path
                    )
                    record.variant = name
                    trials.append(record)
            logger.info({"suite": suite, "task": verb, "object": [shape, color], "trials": trials_per_cell})

    table = summarise(trials, list(agents))
    report = SuiteReport(
        suite=suite,
        table=table,
        trials=trials,
        footer=report_footer(table, sum(t.excluded for t in trials)),
    )
    if out:
        report.write(out)
    return report
