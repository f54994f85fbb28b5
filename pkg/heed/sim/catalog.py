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

from dataclasses import dataclass
from dataclasses import field
from typing import Dict
from typing import List
from typing import Tuple

from heed.config import COLORS
from heed.config import SHAPES
from heed.config import SceneConfig

COLOR_RGB: Dict[str, Tuple[float, float, float]] = {
    "red": (0.86, 0.12, 0.12),
    "blue": (0.12, 0.25, 0.86),
    "white": (0.97, 0.97, 0.95),
    "black": (0.07, 0.07, 0.08),
}

SPRITE_RGB: Dict[str, Tuple[float, float, float]] = {
    "hand": (0.93, 0.74, 0.58),
    "gorilla": (0.28, 0.19, 0.12),
    "blob": (0.78, 0.22, 0.78),
}

BACKGROUND_RGB: Tuple[float, float, float] = (0.55, 0.62, 0.56)
TABLE_RGB: Tuple[float, float, float] = (0.62, 0.5, 0.38)
ARM_RGB: Tuple[float, float, float] = (0.35, 0.35, 0.4)
GRIPPER_RGB: Tuple[float, float, float] = (0.95, 0.8, 0.2)


@dataclass
class Catalog:
    """The shapes and colours objects are drawn from; n and m are their sizes."""

    shapes: List[str] = field(default_factory=lambda: list(SHAPES))
    colors: List[str] = field(default_factory=lambda: list(COLORS))

    @classmethod
    def from_config(cls, config: SceneConfig) -> "Catalog":
        return cls(shapes=list(config.shapes), colors=list(config.colors))

    @property
    def n(self) -> int:
        return len(self.shapes)

    @property
    def m(self) -> int:
        return len(self.colors)

    def shape_id(self, name: str) -> int:
        return self.shapes.index(name)

    def color_id(self, name: str) -> int:
        return self.colors.index(name)

    def rgb(self, color_id: int) -> Tuple[float, float, float]:
        return COLOR_RGB[self.colors[color_id]]

    def describe(self, shape_id: int, color_id: int) -> str:
        return f"{self.colors[color_id]} {self.shapes[shape_id]}"

    def to_dict(self) -> Dict[str, List[str]]:
        return {"shapes": list(self.shapes), "colors": list(self.colors)}
