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
One control step of the world.

There is no dynamics model: joints slew toward the command at a bounded rate, a
gripper that closes on a free object holds it, a held object follows the tip, and a
closed tip pushes resting objects sideways out of contact. Objects never touch one
another.
"""

import math
from typing import List
from typing import Optional

import numpy

from heed.exceptions import ShapeError
from heed.sim.scene import CLOSED_APERTURE
from heed.sim.scene import JOINT_LIMITS
from heed.sim.scene import TIP_RADIUS
from heed.sim.scene import Scene


def clamp_command(command: numpy.ndarray) -> numpy.ndarray:
    return numpy.clip(command, JOINT_LIMITS[:, 0], JOINT_LIMITS[:, 1])


def step(scene: Scene, joint_command, log: Optional[List[dict]] = None) -> Scene:
    """
    Advance the scene by one control step and return the new scene.

    The input scene is not modified. Out-of-limit commands are clamped and, when a
    `log` list is given, a `clamped` event is appended to it, as are `grasp` and
    `release` events.
    """
    command = numpy.asarray(joint_command, dtype=numpy.float64)
    if command.shape != (4,):
        raise ShapeError("joint_command", (4,), tuple(command.shape))

    nxt = scene.copy()
    config = scene.config
    events: List[dict] = []

    clamped = clamp_command(command)
    if not numpy.array_equal(clamped, command):
        events.append({"event": "clamped", "command": command.tolist()})

    rates = numpy.array([config.joint_rate_limit] * 3 + [config.gripper_rate_limit])
    previous = scene.arm.joints
    nxt.arm.joints = clamp_command(previous + numpy.clip(clamped - previous, -rates, rates))

    tip = nxt.tip
    was_open = previous[3] > CLOSED_APERTURE
    held = nxt.held_index

    if held is not None:
        obj = nxt.objects[held]
        if not nxt.arm.closed:
            obj.held = False
            obj.position = rest_position(nxt, tip[0], obj.size)
            events.append({"event": "release", "object": held})
        else:
            obj.position = numpy.clip(tip, 0.0, config.workspace)
    elif nxt.arm.closed and was_open:
        # closing is the only moment a grasp can happen
        candidates = [
            (float(numpy.linalg.norm(obj.position - tip)), i) for i, obj in enumerate(nxt.objects)
        ]
        candidates = [(d, i) for d, i in candidates if d <= config.grasp_radius]
        if candidates:
            _, index = min(candidates)
            nxt.objects[index].held = True
            nxt.objects[index].position = numpy.clip(tip, 0.0, config.workspace)
            events.append({"event": "grasp", "object": index})
    elif nxt.arm.closed:
        push_objects(nxt, tip)

    for sprite in nxt.distractors:
        sprite.position = sprite.position + sprite.velocity

    nxt.step_index = scene.step_index + 1
    if log is not None:
        for event in events:
            event["step"] = nxt.step_index
            log.append(event)
    return nxt


def rest_position(scene: Scene, x: float, size: float) -> numpy.ndarray:
    """Where an object released at horizontal position x comes to rest."""
    return numpy.array([min(max(x, size), scene.config.workspace - size), size])


def push_objects(scene: Scene, tip: numpy.ndarray):
    """Move resting objects overlapping the tip sideways until they just touch it."""
    for obj in scene.objects:
        if obj.held:
            continue
        reach = obj.size + TIP_RADIUS
        offset = obj.position - tip
        if float(numpy.hypot(*offset)) >= reach:
            continue
        clearance = math.sqrt(max(reach**2 - offset[1] ** 2, 0.0))
        direction = 1.0 if offset[0] >= 0 else -1.0
        x = tip[0] + direction * clearance
        obj.position = rest_position(scene, x, obj.size)
