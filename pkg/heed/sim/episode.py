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
Episode rollouts and their logs.

An episode log is a header plus one record per step (the initial state is step 0).
Success is decided from the log alone, never from the controller that produced it.
"""

from dataclasses import dataclass
from dataclasses import field
from typing import Any
from typing import Dict
from typing import List
from typing import Optional

import numpy
import orjson

from heed.exceptions import InfeasibleTaskError
from heed.sim.expert import ExpertController
from heed.sim.expert import locate_target
from heed.sim.physics import step
from heed.sim.render import RenderResult
from heed.sim.render import render
from heed.sim.scene import Scene

EXPERT_STEP_LIMIT: int = 250


@dataclass
class EpisodeLog:
    header: Dict[str, Any]
    records: List[Dict[str, Any]] = field(default_factory=list)

    @classmethod
    def start(cls, scene: Scene, command, target: int) -> "EpisodeLog":
        header = {
            "verb": command.verb,
            "text": " ".join(command.text),
            "target": target,
            "objects": [[o.shape_id, o.color_id] for o in scene.objects],
            "h_lift": scene.config.h_lift,
            "d_push": scene.config.d_push,
            "scene_seed": scene.rng_seed,
        }
        return cls(header=header)

    def record(self, scene: Scene, events: Optional[List[dict]] = None):
        self.records.append(
            {
                "step": scene.step_index,
                "joints": scene.arm.joints.tolist(),
                "objects": [[*o.position.tolist(), o.held] for o in scene.objects],
                "sprites": [d.position.tolist() for d in scene.distractors],
                "events": list(events or []),
            }
        )

    def add_event(self, event: dict):
        self.records[-1]["events"].append(event)

    def events(self, kind: Optional[str] = None) -> List[dict]:
        found = [e for r in self.records for e in r["events"]]
        return [e for e in found if kind is None or e.get("event") == kind]

    def last_grasp_step(self, target: int) -> Optional[int]:
        grasps = [e["step"] for e in self.events("grasp") if e["object"] == target]
        return grasps[-1] if grasps else None

    def dumps(self) -> bytes:
        lines = [orjson.dumps({"header": self.header})]
        lines.extend(orjson.dumps(record) for record in self.records)
        return b"\n".join(lines) + b"\n"

    def write(self, path):
        with open(path, "wb") as handle:
            handle.write(self.dumps())

    @classmethod
    def read(cls, path) -> "EpisodeLog":
        with open(path, "rb") as handle:
            lines = [orjson.loads(line) for line in handle.read().splitlines() if line]
        return cls(header=lines[0]["header"], records=lines[1:])


def _target_index(log: EpisodeLog, command) -> int:
    objects = log.header["objects"]
    matches = [
        i for i, (s, c) in enumerate(objects) if s == command.shape_id and c == command.color_id
    ]
    return matches[0] if len(matches) == 1 else log.header["target"]


def task_success(log: EpisodeLog, command) -> bool:
    """
    Pick-up succeeds if the target is held at or above h_lift at any step; push
    succeeds if the target ends at least d_push left of where it started, or of
    where the last disturbance left it.
    """
    if not log.records:
        return False
    target = _target_index(log, command)
    if command.verb == "pick_up":
        h_lift = log.header["h_lift"]
        return any(
            r["objects"][target][2] and r["objects"][target][1] >= h_lift for r in log.records
        )
    start = 0
    for i, record in enumerate(log.records):
        if any(e.get("event") == "disturbance" for e in record["events"]):
            start = i
    start_x = log.records[start]["objects"][target][0]
    end_x = log.records[-1]["objects"][target][0]
    return start_x - end_x >= log.header["d_push"]


@dataclass
class Episode:
    log: EpisodeLog
    frames: List[numpy.ndarray]
    target_masks: List[numpy.ndarray]
    joints: List[numpy.ndarray]
    scene: Scene
    success: bool

    @property
    def steps(self) -> int:
        return len(self.log.records) - 1


def run_episode(
    scene: Scene,
    command,
    controller,
    horizon: int,
    disturbance=None,
    stop_on_success: bool = True,
) -> Episode:
    """
    Closed loop: render, ask the controller for a joint command, step the world.

    `controller.act(scene, frame)` receives the ground-truth scene as well as the
    rendered frame; learned policies only read the frame. A `disturbance` is
    consulted after every step and may replace the scene.
    """
    target = locate_target(scene, command)
    log = EpisodeLog.start(scene, command, target)
    log.record(scene)
    frame: RenderResult = render(scene)
    frames, masks, joints = [frame.image], [frame.masks[target]], [scene.arm.joints.copy()]
    success = False

    for _ in range(horizon):
        events: List[dict] = []
        scene = step(scene, controller.act(scene, frame), events)
        if disturbance is not None:
            scene = disturbance.maybe_inject(scene, target, log, events)
        log.record(scene, events)
        frame = render(scene)
        frames.append(frame.image)
        masks.append(frame.masks[target])
        joints.append(scene.arm.joints.copy())
        success = task_success(log, command)
        if success and stop_on_success:
            break

    return Episode(
        log=log, frames=frames, target_masks=masks, joints=joints, scene=scene, success=success
    )


@dataclass
class Demonstration:
    command: Any
    frames: numpy.ndarray  # T x H x W x 3 float32
    joints: numpy.ndarray  # T x J float64, the arm state at each frame
    scene_seed: int
    masks: numpy.ndarray  # T x H x W bool, target footprint, never a network input

    def __len__(self) -> int:
        return len(self.joints)


def scripted_expert(scene: Scene, command, step_limit: int = EXPERT_STEP_LIMIT) -> Demonstration:
    """
    Roll the expert out until the task succeeds. The joint vector recorded with
    frame t is the arm state in that frame, so frame t is supervised by joints t+1.
    """
    controller = ExpertController(scene, command)
    episode = run_episode(scene, command, controller, horizon=step_limit)
    if not episode.success:
        raise InfeasibleTaskError(f"the expert did not finish within {step_limit} steps")
    return Demonstration(
        command=command,
        frames=numpy.stack(episode.frames),
        joints=numpy.stack(episode.joints),
        scene_seed=scene.rng_seed,
        masks=numpy.stack(episode.target_masks),
    )


def expert_horizon(scene: Scene, command) -> int:
    """Episode horizon: twice the number of steps the expert needs in this scene."""
    return 2 * (len(scripted_expert(scene, command)) - 1)
