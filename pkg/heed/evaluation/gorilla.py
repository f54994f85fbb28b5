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
Distractor leakage ("gorilla") analysis.

A policy is rolled out with a moving sprite in view. The same arm trajectory is
then replayed without the sprite, which gives the matched clean frame for every
step; sprites only change pixels. Both frames are reconstructed through
G(E(x, s, c)) and compared inside the sprite, the target and the background.
"""

from dataclasses import dataclass
from dataclasses import field
from typing import List
from typing import Optional
from typing import Tuple

import numpy
import torch

from heed.config import RunConfig
from heed.evaluation.attention import attention_overlay
from heed.evaluation.policies import PolicyController
from heed.evaluation.policies import ReplayController
from heed.models.policy import VisuomotorPolicy
from heed.sim.disturbances import add_distractor
from heed.sim.episode import expert_horizon
from heed.sim.episode import run_episode
from heed.sim.expert import locate_target
from heed.sim.render import sprite_mask
from heed.sim.scene import Scene
from heed.tools import derive_seed

SPRITE_LEAKAGE_FACTOR: float = 2.0
TARGET_ERROR_FACTOR: float = 1.5


@dataclass
class LeakageReport:
    sprite_delta: List[float] = field(default_factory=list)
    background_delta: List[float] = field(default_factory=list)
    target_error: List[float] = field(default_factory=list)
    target_error_clean: List[float] = field(default_factory=list)
    sprite_visible: List[bool] = field(default_factory=list)

    def passing(self) -> List[bool]:
        """Per frame with the sprite in view: sprite leakage and target error both within bounds."""
        return [
            s < SPRITE_LEAKAGE_FACTOR * b and t <= TARGET_ERROR_FACTOR * c
            for s, b, t, c, visible in zip(
                self.sprite_delta,
                self.background_delta,
                self.target_error,
                self.target_error_clean,
                self.sprite_visible,
            )
            if visible
        ]

    def passing_fraction(self) -> float:
        checks = self.passing()
        return sum(checks) / len(checks) if checks else 1.0

    def to_dict(self):
        return {
            "frames": len(self.sprite_delta),
            "sprite_delta": self.sprite_delta,
            "background_delta": self.background_delta,
            "target_error": self.target_error,
            "target_error_clean": self.target_error_clean,
            "sprite_visible": self.sprite_visible,
            "passing_fraction": self.passing_fraction(),
        }


def _masked_mean(values: numpy.ndarray, mask: numpy.ndarray) -> float:
    return float(values[mask].mean()) if mask.any() else 0.0


def _reconstruct(policy: VisuomotorPolicy, frames: numpy.ndarray, command):
    vision = policy.vision
    x = torch.from_numpy(numpy.asarray(frames, dtype=numpy.float32))
    s = c = None
    if vision.conditioned:
        s = torch.from_numpy(command.shape_onehot)[None].repeat(len(frames), 1)
        c = torch.from_numpy(command.color_onehot)[None].repeat(len(frames), 1)
    with torch.no_grad():
        output = vision.reconstruct(x, s, c)
    p = output.p_prime.numpy() if output.p_prime is not None else None
    return output.x_prime.numpy().astype(numpy.float64), p


def gorilla_analysis(
    policy: VisuomotorPolicy,
    scene: Scene,
    command,
    sprite: Optional[str],
    seed: int,
    config: RunConfig,
    horizon: Optional[int] = None,
) -> Tuple[LeakageReport, numpy.ndarray]:
    """
    Returns the per-frame leakage report and the panel image: input frames on top,
    their reconstructions in the middle, the reconstructed attention applied to
    the input at the bottom. With no sprite every delta is zero.
    """
    target = locate_target(scene, command)
    if horizon is None:
        horizon = expert_horizon(scene, command)
    disturbed = scene
    if sprite is not None:
        disturbed = add_distractor(
            scene,
            sprite,
            target,
            horizon,
            derive_seed(seed, "sprite"),
            config.eval.sprite_speed,
            config.eval.sprite_attempts,
        )
    controller = PolicyController(
        policy, command, derive_seed(seed, "controller"), config.motor.deterministic
    )
    rollout = run_episode(disturbed, command, controller, horizon)
    clean = rollout
    if sprite is not None:
        clean = run_episode(
            scene, command, ReplayController(rollout.joints[1:]), rollout.steps, stop_on_success=False
        )

    x_disturbed = numpy.stack(rollout.frames)
    x_clean = numpy.stack(clean.frames)
    rec_disturbed, p_disturbed = _reconstruct(policy, x_disturbed, command)
    rec_clean, _ = _reconstruct(policy, x_clean, command)

    size, workspace = scene.config.image_size, scene.config.workspace
    delta = numpy.abs(rec_disturbed - rec_clean).mean(axis=-1)
    error_disturbed = numpy.abs(rec_disturbed - x_clean).mean(axis=-1)
    error_clean = numpy.abs(rec_clean - x_clean).mean(axis=-1)

    report = LeakageReport()
    for t, record in enumerate(rollout.log.records):
        covered = numpy.zeros((size, size), dtype=bool)
        for placed, position in zip(disturbed.distractors, record["sprites"]):
            covered |= sprite_mask(placed, position, size, workspace)
        target_mask = clean.target_masks[t]
        report.sprite_delta.append(_masked_mean(delta[t], covered))
        report.background_delta.append(_masked_mean(delta[t], ~covered & ~target_mask))
        report.target_error.append(_masked_mean(error_disturbed[t], target_mask))
        report.target_error_clean.append(_masked_mean(error_clean[t], target_mask))
        report.sprite_visible.append(bool(covered.any()))

    columns = config.eval.panel_frames
    picks = numpy.linspace(0, len(x_disturbed) - 1, num=min(columns, len(x_disturbed)))
    picks = picks.round().astype(int)
    rows = [x_disturbed[picks], rec_disturbed[picks]]
    if p_disturbed is not None:
        rows.append(
            numpy.stack(
                [attention_overlay(x_disturbed[t], p_disturbed[t], policy.vision.generator.grid) for t in picks]
            )
        )
    else:
        rows.append(numpy.zeros_like(x_disturbed[picks]))
    panel = numpy.concatenate([numpy.concatenate(list(row), axis=1) for row in rows], axis=0)
    return report, numpy.clip(panel, 0.0, 1.0)
