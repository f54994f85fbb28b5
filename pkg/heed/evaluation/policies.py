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
Controllers for closed-loop rollouts, and the agents that hand them out.

A controller answers `act(scene, frame)` with a joint command. Learned controllers
only read `frame`; the ground-truth scene is passed for the scripted ones.
"""

from dataclasses import dataclass
from typing import Dict
from typing import Sequence

import numpy
import torch

from heed.config import RunConfig
from heed.config import SceneConfig
from heed.exceptions import CompatibilityError
from heed.models.motor import mdn_sample
from heed.models.policy import VisuomotorPolicy
from heed.sim.episode import scripted_expert
from heed.sim.expert import ExpertController
from heed.sim.render import RenderResult
from heed.sim.scene import Scene
from heed.training.checkpoint import Checkpoint
from heed.training.policy_training import TFA_MODULE
from heed.training.policy_training import cell_key
from heed.training.policy_training import load_policies

# scene fields a policy's input and output layout depend on
LAYOUT_FIELDS = ("image_size", "workspace", "shapes", "colors", "link_lengths")


class PolicyController:
    """render -> encode (mean) -> motor step -> sample one command."""

    def __init__(self, policy: VisuomotorPolicy, command, seed: int, deterministic: bool = False):
        self.policy = policy
        self.rng = numpy.random.default_rng(seed)
        self.deterministic = deterministic
        self.state = None
        self.s = self.c = None
        if policy.vision.conditioned:
            self.s = torch.from_numpy(command.shape_onehot)[None]
            self.c = torch.from_numpy(command.color_onehot)[None]

    def latent(self, frame: RenderResult) -> torch.Tensor:
        x = torch.from_numpy(frame.image.astype(numpy.float32))[None]
        mu, _ = self.policy.vision.encoder(x, self.s, self.c)
        return mu

    def act(self, scene: Scene, frame: RenderResult) -> numpy.ndarray:
        with torch.no_grad():
            z = self.latent(frame)
            mixture, self.state = self.policy.motor(z[:, None], self.state)
        return mdn_sample(mixture.step(0), self.rng, self.deterministic)


class ZeroController:
    """Always commands the current joints: the arm never moves."""

    def act(self, scene: Scene, frame=None) -> numpy.ndarray:
        return scene.arm.joints.copy()


class ReplayController:
    """Plays back a fixed command sequence, then holds the last command."""

    def __init__(self, commands: Sequence[numpy.ndarray]):
        self.commands = [numpy.asarray(c, dtype=numpy.float64) for c in commands]
        self.position = 0

    def act(self, scene: Scene, frame=None) -> numpy.ndarray:
        if not self.commands:
            return scene.arm.joints.copy()
        command = self.commands[min(self.position, len(self.commands) - 1)]
        self.position += 1
        return command.copy()


def check_layout(expected: Dict, scene_config: SceneConfig):
    found = scene_config.to_dict()
    for name in LAYOUT_FIELDS:
        if expected.get(name) != found.get(name):
            raise CompatibilityError(
                f"`scene.{name}` is {found.get(name)} here but {expected.get(name)} in the checkpoint"
            )


@dataclass
class PolicyAgent:
    """The trained policies of one checkpoint; per-task checkpoints pick by command."""

    variant: str
    policies: Dict[str, VisuomotorPolicy]
    scene: Dict
    deterministic: bool = False

    @classmethod
    def from_checkpoint(cls, checkpoint: Checkpoint, config: RunConfig) -> "PolicyAgent":
        check_layout(checkpoint.config["scene"], config.scene)
        return cls(
            variant=checkpoint.variant,
            policies=load_policies(checkpoint, config),
            scene=checkpoint.config["scene"],
            deterministic=config.motor.deterministic,
        )

    def check(self, scene_config: SceneConfig):
        check_layout(self.scene, scene_config)

    def select(self, command) -> VisuomotorPolicy:
        if TFA_MODULE in self.policies:
            return self.policies[TFA_MODULE]
        key = cell_key(command.verb, command.shape_id, command.color_id)
        if key not in self.policies:
            raise CompatibilityError(f"no policy was trained for `{key}`")
        return self.policies[key]

    def controller(self, scene: Scene, command, seed: int) -> PolicyController:
        return PolicyController(self.select(command), command, seed, self.deterministic)


class ExpertAgent:
    """Replays the scripted expert's commands, bypassing any network."""

    variant = "expert_replay"

    def check(self, scene_config: SceneConfig):
        pass

    def controller(self, scene: Scene, command, seed: int) -> ReplayController:
        demo = scripted_expert(scene, command)
        return ReplayController(demo.joints[1:])


class ClosedLoopExpertAgent:
    """The expert itself, re-planning every step, so it also recovers from disturbances."""

    variant = "expert"

    def check(self, scene_config: SceneConfig):
        pass

    def controller(self, scene: Scene, command, seed: int) -> ExpertController:
        return ExpertController(scene, command)


class ZeroAgent:
    variant = "zero"

    def check(self, scene_config: SceneConfig):
        pass

    def controller(self, scene: Scene, command, seed: int) -> ZeroController:
        return ZeroController()

