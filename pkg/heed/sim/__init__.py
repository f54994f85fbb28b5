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
The tabletop world: scenes, the arm, the renderer, the scripted expert and the
disturbances applied to rollouts.
"""

from heed.sim.catalog import Catalog
from heed.sim.disturbances import PhysicalDisturbance
from heed.sim.disturbances import RolloutContext
from heed.sim.disturbances import add_distractor
from heed.sim.disturbances import inject_physical_disturbance
from heed.sim.disturbances import inject_visual_distractor
from heed.sim.episode import Demonstration
from heed.sim.episode import Episode
from heed.sim.episode import EpisodeLog
from heed.sim.episode import expert_horizon
from heed.sim.episode import run_episode
from heed.sim.episode import scripted_expert
from heed.sim.episode import task_success
from heed.sim.expert import ExpertController
from heed.sim.physics import step
from heed.sim.render import RenderResult
from heed.sim.render import render
from heed.sim.scene import ArmState
from heed.sim.scene import DistractorSprite
from heed.sim.scene import Scene
from heed.sim.scene import SceneObject
from heed.sim.scene import forward_kinematics
from heed.sim.scene import inverse_kinematics
from heed.sim.scene import make_scene

__all__ = (
    "ArmState",
    "Catalog",
    "Demonstration",
    "DistractorSprite",
    "Episode",
    "EpisodeLog",
    "ExpertController",
    "PhysicalDisturbance",
    "RenderResult",
    "RolloutContext",
    "Scene",
    "SceneObject",
    "add_distractor",
    "expert_horizon",
    "forward_kinematics",
    "inject_physical_disturbance",
    "inject_visual_distractor",
    "inverse_kinematics",
    "make_scene",
    "render",
    "run_episode",
    "scripted_expert",
    "step",
    "task_success",
)
