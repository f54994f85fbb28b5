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
Physical and visual disturbances.

Physical disturbances move the commanded object: a shove just before the grasp, or
taking the object out of a closed gripper shortly after the grasp. Visual
disturbances add a moving sprite which changes pixels only.
"""

from dataclasses import dataclass
from dataclasses import field
from typing import List
from typing import Optional

import numpy

from heed.exceptions import DisturbanceNotApplicableError
from heed.exceptions import OcclusionError
from heed.logging import get_logger
from heed.sim.render import glyph_mask
from heed.sim.render import mask_centroid
from heed.sim.render import sprite_mask
from heed.sim.scene import PLACEMENT_GAP
from heed.sim.scene import DistractorSprite
from heed.sim.scene import Scene
from heed.sim.scene import inverse_kinematics
from heed.tools import retry

MODES = ("pre_grasp_shove", "post_grasp_strip")
STRIP_CLEARANCE: float = 1.5

logger = get_logger()


@dataclass
class RolloutContext:
    scene: Scene
    target: int
    events: List[dict] = field(default_factory=list)


def _free_spot(scene: Scene, index: int, x: float) -> bool:
    """Object `index` could rest at x: on the table, clear of the others and reachable."""
    obj = scene.objects[index]
    if not obj.size <= x <= scene.config.workspace - obj.size:
        return False
    for i, other in enumerate(scene.objects):
        if i != index and not other.held:
            if abs(other.position[0] - x) < obj.size + other.size + PLACEMENT_GAP:
                return False
    return inverse_kinematics((x, obj.size), scene.arm.link_lengths, scene.base) is not None


def inject_physical_disturbance(ctx: RolloutContext, mode: str, seed: int) -> Scene:
    """
    Return a new scene with the target moved, and append a `disturbance` event to
    `ctx.events`. Raises DisturbanceNotApplicableError when the precondition of the
    mode does not hold or no valid landing spot exists.
    """
    if mode not in MODES:
        raise DisturbanceNotApplicableError(mode, "unknown disturbance mode")
    scene = ctx.scene
    config = scene.config
    obj = scene.objects[ctx.target]
    rng = numpy.random.default_rng(seed)
    tip = scene.tip

    if mode == "pre_grasp_shove":
        if obj.held:
            raise DisturbanceNotApplicableError(mode, "the target is already held")
        if float(numpy.hypot(*(obj.position - tip))) > config.approach_radius:
            raise DisturbanceNotApplicableError(mode, "the gripper is not approaching the target")
        low, high = config.shove_band
        magnitude = float(rng.uniform(low, high)) * obj.size
        signs = [1.0, -1.0] if rng.random() < 0.5 else [-1.0, 1.0]
        landing = [obj.position[0] + sign * magnitude for sign in signs]
    else:
        if not obj.held:
            raise DisturbanceNotApplicableError(mode, "the target is not held")
        landing = [
            float(x)
            for x in rng.uniform(obj.size, config.workspace - obj.size, config.placement_attempts)
            if abs(x - tip[0]) >= STRIP_CLEARANCE
        ]

    for x in landing:
        if _free_spot(scene, ctx.target, x):
            break
    else:
        raise DisturbanceNotApplicableError(mode, "no reachable free spot for the target")

    disturbed = scene.copy()
    moved = disturbed.objects[ctx.target]
    before = moved.position.copy()
    moved.held = False
    moved.position = numpy.array([x, moved.size])
    event = {
        "event": "disturbance",
        "step": scene.step_index,
        "mode": mode,
        "displacement": (moved.position - before).tolist(),
    }
    ctx.events.append(event)
    logger.debug(event)
    return disturbed


@dataclass
class PhysicalDisturbance:
    """
    Fires one physical disturbance per episode when its trigger is met: a shove when
    the open gripper comes within the approach radius of the target, a strip when
    the target has been held for `strip_delay` steps and is still below h_lift.
    """

    mode: str
    seed: int
    applied: Optional[dict] = None

    def triggered(self, scene: Scene, target: int, grasp_step: Optional[int]) -> bool:
        obj = scene.objects[target]
        config = scene.config
        if self.mode == "pre_grasp_shove":
            near = float(numpy.hypot(*(obj.position - scene.tip))) <= config.approach_radius
            return near and not obj.held and not scene.arm.closed
        if not obj.held or grasp_step is None:
            return False
        return scene.step_index - grasp_step >= config.strip_delay and obj.position[1] < config.h_lift

    def maybe_inject(self, scene: Scene, target: int, log, events: List[dict]) -> Scene:
        if self.applied is not None:
            return scene
        grasps = [e["step"] for e in events if e["event"] == "grasp" and e["object"] == target]
        grasp_step = grasps[-1] if grasps else log.last_grasp_step(target)
        if not self.triggered(scene, target, grasp_step):
            return scene
        ctx = RolloutContext(scene=scene, target=target, events=events)
        disturbed = inject_physical_disturbance(ctx, self.mode, self.seed)
        self.applied = ctx.events[-1]
        return disturbed


def sample_sprite(
    scene: Scene, sprite_id: str, rng: numpy.random.Generator, speed: float
) -> DistractorSprite:
    """A sprite entering from a random side edge, crossing the frame horizontally."""
    workspace = scene.config.workspace
    from_left = bool(rng.random() < 0.5)
    size = float(rng.uniform(1.0, 1.6))
    x = -size if from_left else workspace + size
    y = float(rng.uniform(size, workspace - size))
    drift = float(rng.uniform(-0.1, 0.1)) * speed
    velocity = (speed if from_left else -speed, drift)
    z_order = "in_front" if rng.random() < 0.5 else "behind_arm"
    return DistractorSprite(sprite_id, (x, y), velocity, z_order=z_order, size=size)


def inject_visual_distractor(
    scene: Scene, sprite: DistractorSprite, target: int, horizon: int
) -> Scene:
    """
    Add the sprite to a copy of the scene. Raises OcclusionError if at any step up to
    `horizon` the sprite covers the pixel at the target's mask centroid.
    """
    size, workspace = scene.config.image_size, scene.config.workspace
    obj = scene.objects[target]
    shape = scene.config.shapes[obj.shape_id]
    row, col = mask_centroid(glyph_mask(shape, obj.position, obj.size, size, workspace))
    for steps in range(horizon + 1):
        position = sprite.position_at(steps)
        if row >= 0 and sprite_mask(sprite, position, size, workspace)[row, col]:
            raise OcclusionError(sprite.sprite_id, steps)
    disturbed = scene.copy()
    disturbed.distractors.append(sprite)
    return disturbed


def add_distractor(
    scene: Scene, sprite_id: str, target: int, horizon: int, seed: int, speed: float, attempts: int
) -> Scene:
    """Sample sprites until one passes the occlusion check, up to `attempts` draws."""
    rng = numpy.random.default_rng(seed)

    @retry(max_tries=attempts, retry_exceptions=(OcclusionError,))
    def _attempt():
        return inject_visual_distractor(
            scene, sample_sprite(scene, sprite_id, rng, speed), target, horizon
        )

    return _attempt()
