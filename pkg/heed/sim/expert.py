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
Scripted expert.

A closed-loop controller that looks at the ground-truth scene every step and picks
its next joint command from the target's current pose. Because it never commits
to a plan it re-grasps a stripped object and follows a shoved one, which the
physical disturbance suite relies on.
"""

import numpy

from heed.exceptions import InfeasibleTaskError
from heed.sim.scene import TIP_RADIUS
from heed.sim.scene import Scene
from heed.sim.scene import inverse_kinematics

APPROACH_HEIGHT: float = 2.0
ALIGN_TOLERANCE: float = 0.3
WAYPOINT_STEP: float = 0.6
LANE_TOLERANCE: float = 0.35
SWEEP_STEP: float = 0.3
PUSH_MARGIN: float = 0.1
LIFT_MARGIN: float = 1.0


def locate_target(scene: Scene, command) -> int:
    matches = scene.find(command.shape_id, command.color_id)
    if len(matches) != 1:
        raise InfeasibleTaskError(
            f"the commanded object matches {len(matches)} objects in the scene, expected 1"
        )
    return matches[0]


class ExpertController:
    """
    Pick-up: open, move above the target, descend, close, lift past h_lift.
    Push: move above the point just right of the target, descend into the lane,
    close, then sweep left until the target has moved d_push.
    """

    def __init__(self, scene: Scene, command):
        self.command = command
        self.target = locate_target(scene, command)
        self.config = scene.config
        self.origin_x = float(scene.objects[self.target].position[0])
        self.check_feasible(scene)

    def check_feasible(self, scene: Scene):
        obj = scene.objects[self.target]
        links, base = scene.arm.link_lengths, scene.base
        if inverse_kinematics(obj.position, links, base) is None:
            raise InfeasibleTaskError(
                f"target at {obj.position.round(2).tolist()} is outside the arm's reach"
            )
        if self.command.verb == "push_left":
            final_x = self.origin_x - self.config.d_push - PUSH_MARGIN
            if final_x < obj.size:
                raise InfeasibleTaskError("not enough table to the left of the target to push it")
            lane = (obj.position[0] + obj.size + TIP_RADIUS + ALIGN_TOLERANCE, obj.position[1])
            if inverse_kinematics(lane, links, base) is None:
                raise InfeasibleTaskError("the push start point is outside the arm's reach")

    def _toward(self, scene: Scene, point, aperture: float) -> numpy.ndarray:
        """Joints for a waypoint at most WAYPOINT_STEP along the line to `point`."""
        links, base, current = scene.arm.link_lengths, scene.base, scene.arm.joints
        tip = scene.tip
        offset = numpy.asarray(point, dtype=numpy.float64) - tip
        distance = float(numpy.hypot(*offset))
        if distance > WAYPOINT_STEP:
            offset = offset * (WAYPOINT_STEP / distance)
        joints = inverse_kinematics(tip + offset, links, base, current)
        if joints is None:
            # far from a pointing-down pose the waypoint may be unreachable
            joints = inverse_kinematics(point, links, base, current)
        if joints is None:
            joints = current[:3]
        return numpy.append(joints, aperture)

    def _hold(self, scene: Scene, aperture: float) -> numpy.ndarray:
        return numpy.append(scene.arm.joints[:3], aperture)

    def act(self, scene: Scene, frame=None) -> numpy.ndarray:
        if self.command.verb == "pick_up":
            return self._pick(scene)
        return self._push(scene)

    def _pick(self, scene: Scene) -> numpy.ndarray:
        obj = scene.objects[self.target]
        tip = scene.tip
        if obj.held:
            return self._toward(scene, (tip[0], self.config.h_lift + LIFT_MARGIN), 0.0)
        if float(numpy.hypot(*(obj.position - tip))) <= 0.8 * self.config.grasp_radius:
            return self._toward(scene, obj.position, 0.0)
        if abs(tip[0] - obj.position[0]) < ALIGN_TOLERANCE and tip[1] > obj.position[1] - 0.2:
            return self._toward(scene, obj.position, 1.0)
        return self._toward(scene, (obj.position[0], obj.position[1] + APPROACH_HEIGHT), 1.0)

    def _push(self, scene: Scene) -> numpy.ndarray:
        obj = scene.objects[self.target]
        tip = scene.tip
        final_x = self.origin_x - self.config.d_push - PUSH_MARGIN
        if obj.position[0] <= final_x:
            return self._hold(scene, 0.0)

        contact = obj.size + TIP_RADIUS
        start = (obj.position[0] + contact + ALIGN_TOLERANCE * 0.75, obj.position[1])
        in_lane = (
            abs(tip[1] - obj.position[1]) < LANE_TOLERANCE
            and obj.position[0] < tip[0] < obj.position[0] + contact + 3 * ALIGN_TOLERANCE
        )
        if in_lane:
            if not scene.arm.closed:
                return self._hold(scene, 0.0)
            return self._toward(scene, (tip[0] - SWEEP_STEP, obj.position[1]), 0.0)
        if abs(tip[0] - start[0]) < ALIGN_TOLERANCE and tip[1] > obj.position[1]:
            return self._toward(scene, start, 1.0)
        return self._toward(scene, (start[0], start[1] + APPROACH_HEIGHT), 1.0)
