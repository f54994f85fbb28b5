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
Scene state and arm kinematics.

The camera looks at the arm's plane of motion: x runs left to right across the
table and y is height above the table surface (y = 0). The arm base sits at the
middle of the table edge. Objects rest on the table, so a resting object's centre
is at y = size.
"""

import copy
import math
from dataclasses import dataclass
from dataclasses import field
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy

from heed.config import SceneConfig
from heed.exceptions import OverDenseSceneError
from heed.sim.catalog import Catalog

JOINT_LIMITS = numpy.array(
    [[0.0, math.pi], [-math.pi, math.pi], [-math.pi, math.pi], [0.0, 1.0]], dtype=numpy.float64
)
HOME_JOINTS = (math.pi / 2, 0.0, 0.0, 1.0)
CLOSED_APERTURE: float = 0.3
TIP_RADIUS: float = 0.3
PLACEMENT_GAP: float = 0.2


@dataclass
class SceneObject:
    shape_id: int
    color_id: int
    position: numpy.ndarray
    size: float
    held: bool = False

    def __post_init__(self):
        self.position = numpy.asarray(self.position, dtype=numpy.float64)


@dataclass
class ArmState:
    """Three revolute joints (radians) and a gripper aperture in [0, 1]."""

    joints: numpy.ndarray
    link_lengths: numpy.ndarray

    def __post_init__(self):
        self.joints = numpy.asarray(self.joints, dtype=numpy.float64)
        self.link_lengths = numpy.asarray(self.link_lengths, dtype=numpy.float64)

    @property
    def aperture(self) -> float:
        return float(self.joints[3])

    @property
    def closed(self) -> bool:
        return self.aperture <= CLOSED_APERTURE

    def within_limits(self) -> bool:
        return bool(
            numpy.all(self.joints >= JOINT_LIMITS[:, 0]) and numpy.all(self.joints <= JOINT_LIMITS[:, 1])
        )


@dataclass
class DistractorSprite:
    sprite_id: str
    position: numpy.ndarray
    velocity: numpy.ndarray
    z_order: str = "in_front"
    size: float = 1.2

    def __post_init__(self):
        self.position = numpy.asarray(self.position, dtype=numpy.float64)
        self.velocity = numpy.asarray(self.velocity, dtype=numpy.float64)

    def position_at(self, steps: int) -> numpy.ndarray:
        return self.position + steps * self.velocity


@dataclass
class Scene:
    objects: List[SceneObject]
    arm: ArmState
    config: SceneConfig
    distractors: List[DistractorSprite] = field(default_factory=list)
    rng_seed: int = 0
    step_index: int = 0

    @property
    def base(self) -> numpy.ndarray:
        return numpy.array([self.config.workspace / 2.0, 0.0])

    @property
    def tip(self) -> numpy.ndarray:
        return forward_kinematics(self.arm, self.base)

    @property
    def held_index(self) -> Optional[int]:
        for index, obj in enumerate(self.objects):
            if obj.held:
                return index
        return None

    def find(self, shape_id: int, color_id: int) -> List[int]:
        return [
            i
            for i, obj in enumerate(self.objects)
            if obj.shape_id == shape_id and obj.color_id == color_id
        ]

    def copy(self) -> "Scene":
        # the config is shared, everything else is copied
        return Scene(
            objects=copy.deepcopy(self.objects),
            arm=copy.deepcopy(self.arm),
            config=self.config,
            distractors=copy.deepcopy(self.distractors),
            rng_seed=self.rng_seed,
            step_index=self.step_index,
        )

    def in_workspace(self, position: Sequence[float]) -> bool:
        w = self.config.workspace
        return 0.0 <= position[0] <= w and 0.0 <= position[1] <= w


def forward_kinematics(arm: ArmState, base: Sequence[float] = (0.0, 0.0)) -> numpy.ndarray:
    """End effector position: link vectors summed at cumulative joint angles."""
    return joint_positions(arm, base)[-1]


def joint_positions(arm: ArmState, base: Sequence[float] = (0.0, 0.0)) -> numpy.ndarray:
    """The base and every link end, shape (links + 1, 2)."""
    angles = numpy.cumsum(arm.joints[: len(arm.link_lengths)])
    steps = numpy.stack(
        [arm.link_lengths * numpy.cos(angles), arm.link_lengths * numpy.sin(angles)], axis=1
    )
    return numpy.vstack([numpy.asarray(base, dtype=numpy.float64), steps]).cumsum(axis=0)


def wrap_angle(angle: float) -> float:
    return (angle + math.pi) % (2 * math.pi) - math.pi


def inverse_kinematics(
    tip: Sequence[float],
    link_lengths: Sequence[float],
    base: Sequence[float] = (0.0, 0.0),
    current: Optional[Sequence[float]] = None,
) -> Optional[numpy.ndarray]:
    """
    Joint angles placing the tip at `tip` with the last link pointing straight down.

    Of the two elbow solutions inside the joint limits, the one nearest `current` is
    returned. None when the point is out of reach.
    """
    l1, l2, l3 = (float(v) for v in link_lengths)
    wx = tip[0] - base[0]
    wy = tip[1] - base[1] + l3
    reach = math.hypot(wx, wy)
    if reach > l1 + l2 or reach < abs(l1 - l2) or reach == 0:
        return None

    cos_q2 = max(-1.0, min(1.0, (reach**2 - l1**2 - l2**2) / (2 * l1 * l2)))
    solutions = []
    for sign in (1.0, -1.0):
        q2 = sign * math.acos(cos_q2)
        q1 = math.atan2(wy, wx) - math.atan2(l2 * math.sin(q2), l1 + l2 * math.cos(q2))
        q1 = wrap_angle(q1)
        q3 = wrap_angle(-math.pi / 2 - q1 - q2)
        candidate = numpy.array([q1, q2, q3])
        if numpy.all(candidate >= JOINT_LIMITS[:3, 0]) and numpy.all(
            candidate <= JOINT_LIMITS[:3, 1]
        ):
            solutions.append(candidate)

    if not solutions:
        return None
    if current is None:
        return solutions[0]
    reference = numpy.asarray(current, dtype=numpy.float64)[:3]
    return min(solutions, key=lambda q: float(numpy.sum((q - reference) ** 2)))


def home_arm(config: SceneConfig) -> ArmState:
    return ArmState(joints=numpy.array(HOME_JOINTS), link_lengths=numpy.array(config.link_lengths))


def make_scene(
    config: SceneConfig,
    seed: int,
    required: Sequence[Tuple[int, int]] = (),
    count: Optional[int] = None,
) -> Scene:
    """
    Place objects on the table at seeded positions without overlap.

    `required` (shape_id, color_id) pairs are placed first; the rest of the `count`
    objects (default `config.objects_per_scene`) get distinct random catalog
    entries. Raises OverDenseSceneError when an object cannot be placed within
    `config.placement_attempts` draws.
    """
    catalog = Catalog.from_config(config)
    rng = numpy.random.default_rng(seed)
    count = config.objects_per_scene if count is None else count
    count = max(count, len(required))

    identities = list(required)
    available = [
        (s, c) for s in range(catalog.n) for c in range(catalog.m) if (s, c) not in identities
    ]
    while len(identities) < count:
        if not available:
            available = [(s, c) for s in range(catalog.n) for c in range(catalog.m)]
        pick = int(rng.integers(len(available)))
        identities.append(available.pop(pick))

    size = config.object_size
    low, high = size, config.workspace - size
    objects: List[SceneObject] = []
    for placed, (shape_id, color_id) in enumerate(identities):
        for _ in range(config.placement_attempts if high > low else 0):
            x = float(rng.uniform(low, high))
            if all(abs(x - o.position[0]) >= 2 * size + PLACEMENT_GAP for o in objects):
                break
        else:
            raise OverDenseSceneError(placed, len(identities), config.placement_attempts)
        objects.append(SceneObject(shape_id, color_id, numpy.array([x, size]), size))

    return Scene(objects=objects, arm=home_arm(config), config=config, rng_seed=seed)
