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
Raster renderer.

Every primitive is a boolean mask over pixel centres, computed in workspace units,
so the renderer is exact and deterministic. Images are quantised to 8-bit levels
before they are returned so a PNG round trip is lossless.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable
from typing import Dict
from typing import List
from typing import Tuple

import numpy
from PIL import Image

from heed.sim.catalog import ARM_RGB
from heed.sim.catalog import BACKGROUND_RGB
from heed.sim.catalog import COLOR_RGB
from heed.sim.catalog import GRIPPER_RGB
from heed.sim.catalog import SPRITE_RGB
from heed.sim.catalog import TABLE_RGB
from heed.sim.catalog import Catalog
from heed.sim.scene import DistractorSprite
from heed.sim.scene import Scene
from heed.sim.scene import joint_positions

ARM_WIDTH: float = 0.35
FINGER_LENGTH: float = 0.45


@dataclass
class RenderResult:
    image: numpy.ndarray  # H x W x 3 float32 in [0, 1]
    masks: List[numpy.ndarray]  # per object, H x W bool
    sprite_masks: List[numpy.ndarray]  # per distractor, H x W bool


@lru_cache(8)
def pixel_grid(image_size: int, workspace: float) -> Tuple[numpy.ndarray, numpy.ndarray]:
    """Workspace coordinates of every pixel centre; row 0 is the top of the frame."""
    scale = workspace / image_size
    centres = (numpy.arange(image_size) + 0.5) * scale
    xs, ys = numpy.meshgrid(centres, workspace - centres)
    xs.setflags(write=False)
    ys.setflags(write=False)
    return xs, ys


def to_pixel(position, image_size: int, workspace: float) -> Tuple[int, int]:
    """(row, col) of the pixel containing a workspace position."""
    scale = image_size / workspace
    col = int(numpy.clip(numpy.floor(position[0] * scale), 0, image_size - 1))
    row = int(numpy.clip(numpy.floor((workspace - position[1]) * scale), 0, image_size - 1))
    return row, col


def quantize(image: numpy.ndarray) -> numpy.ndarray:
    return numpy.round(numpy.clip(image, 0.0, 1.0) * 255).astype(numpy.uint8)


def dequantize(pixels: numpy.ndarray) -> numpy.ndarray:
    return pixels.astype(numpy.float32) / numpy.float32(255)


# glyphs: u, v are pixel offsets from the object centre divided by its size


def _bowl(u, v):
    return ((u**2 + v**2) <= 1.0) & (v <= 0.15)


def _plate(u, v):
    return (u**2 + (v / 0.35) ** 2) <= 1.0


def _ring(u, v):
    r2 = u**2 + v**2
    return (r2 <= 1.0) & (r2 >= 0.3)


def _box(u, v):
    return (numpy.abs(u) <= 0.85) & (numpy.abs(v) <= 0.85)


def _towel(u, v):
    return (numpy.abs(u) <= 0.95) & (numpy.abs(v) <= 0.7) & (numpy.abs(v) >= 0.18)


def _dumbbell(u, v):
    bells = ((numpy.abs(u) - 0.6) ** 2 + v**2) <= 0.16
    bar = (numpy.abs(u) <= 0.6) & (numpy.abs(v) <= 0.14)
    return bells | bar


GLYPHS: Dict[str, Callable] = {
    "bowl": _bowl,
    "plate": _plate,
    "ring": _ring,
    "box": _box,
    "towel": _towel,
    "dumbbell": _dumbbell,
}


def _hand(u, v):
    palm = (numpy.abs(u) <= 0.45) & (v >= -0.8) & (v <= 0.1)
    fingers = numpy.zeros_like(palm)
    for offset in (-0.36, -0.12, 0.12, 0.36):
        fingers |= (numpy.abs(u - offset) <= 0.08) & (v > 0.1) & (v <= 0.8)
    thumb = (u > 0.45) & (u <= 0.8) & (numpy.abs(v + 0.25) <= 0.1)
    return palm | fingers | thumb


def _gorilla(u, v):
    body = ((u / 0.6) ** 2 + ((v + 0.2) / 0.6) ** 2) <= 1.0
    head = (u**2 + (v - 0.6) ** 2) <= 0.09
    arms = (numpy.abs(u) >= 0.5) & (numpy.abs(u) <= 0.85) & (v >= -0.9) & (v <= 0.2)
    return body | head | arms


def _blob(u, v):
    return (u**2 + (v / 0.8) ** 2) <= 1.0


SPRITES: Dict[str, Callable] = {"hand": _hand, "gorilla": _gorilla, "blob": _blob}


def glyph_mask(shape: str, centre, size: float, image_size: int, workspace: float):
    xs, ys = pixel_grid(image_size, workspace)
    return GLYPHS[shape]((xs - centre[0]) / size, (ys - centre[1]) / size)


def sprite_mask(sprite: DistractorSprite, position, image_size: int, workspace: float):
    xs, ys = pixel_grid(image_size, workspace)
    return SPRITES[sprite.sprite_id]((xs - position[0]) / sprite.size, (ys - position[1]) / sprite.size)


def segment_mask(start, end, width: float, image_size: int, workspace: float):
    """Pixels within width/2 of the segment start-end."""
    xs, ys = pixel_grid(image_size, workspace)
    start = numpy.asarray(start, dtype=numpy.float64)
    direction = numpy.asarray(end, dtype=numpy.float64) - start
    length2 = float(direction @ direction)
    px, py = xs - start[0], ys - start[1]
    if length2 == 0:
        t = numpy.zeros_like(xs)
    else:
        t = numpy.clip((px * direction[0] + py * direction[1]) / length2, 0.0, 1.0)
    dx = px - t * direction[0]
    dy = py - t * direction[1]
    return (dx**2 + dy**2) <= (width / 2) ** 2


def arm_masks(scene: Scene, image_size: int) -> Tuple[numpy.ndarray, numpy.ndarray]:
    """Masks of the links and of the gripper fingers."""
    workspace = scene.config.workspace
    points = joint_positions(scene.arm, scene.base)
    links = numpy.zeros((image_size, image_size), dtype=bool)
    for start, end in zip(points[:-1], points[1:]):
        links |= segment_mask(start, end, ARM_WIDTH, image_size, workspace)

    # fingers open sideways from the tip, perpendicular to the last link
    tip = points[-1]
    heading = points[-1] - points[-2]
    heading = heading / max(float(numpy.hypot(*heading)), 1e-9)
    side = numpy.array([-heading[1], heading[0]])
    spread = 0.15 + 0.35 * scene.arm.aperture
    fingers = numpy.zeros_like(links)
    for sign in (1.0, -1.0):
        root = tip + sign * spread * side
        fingers |= segment_mask(
            root, root + FINGER_LENGTH * heading, ARM_WIDTH * 0.6, image_size, workspace
        )
    fingers |= segment_mask(
        tip + spread * side, tip - spread * side, ARM_WIDTH * 0.6, image_size, workspace
    )
    return links, fingers


def render(scene: Scene) -> RenderResult:
    """
    Draw the scene: background and table, sprites behind the arm, objects, the arm,
    then sprites in front. Masks are the full glyph footprints, drawn or not.
    """
    config = scene.config
    size, workspace = config.image_size, config.workspace
    catalog = Catalog.from_config(config)
    xs, ys = pixel_grid(size, workspace)

    image = numpy.empty((size, size, 3), dtype=numpy.float64)
    image[:] = BACKGROUND_RGB
    image[ys < 0.15] = TABLE_RGB

    sprite_masks = [
        sprite_mask(sprite, sprite.position, size, workspace) for sprite in scene.distractors
    ]
    for sprite, mask in zip(scene.distractors, sprite_masks):
        if sprite.z_order == "behind_arm":
            image[mask] = SPRITE_RGB[sprite.sprite_id]

    masks = []
    for obj in scene.objects:
        mask = glyph_mask(catalog.shapes[obj.shape_id], obj.position, obj.size, size, workspace)
        image[mask] = COLOR_RGB[catalog.colors[obj.color_id]]
        masks.append(mask)

    links, fingers = arm_masks(scene, size)
    image[links] = ARM_RGB
    image[fingers] = GRIPPER_RGB

    for sprite, mask in zip(scene.distractors, sprite_masks):
        if sprite.z_order != "behind_arm":
            image[mask] = SPRITE_RGB[sprite.sprite_id]

    return RenderResult(image=dequantize(quantize(image)), masks=masks, sprite_masks=sprite_masks)


def save_png(image: numpy.ndarray, path):
    pixels = image if image.dtype == numpy.uint8 else quantize(image)
    Image.fromarray(pixels).save(path, format="PNG", optimize=False)


def load_png(path) -> numpy.ndarray:
    with Image.open(path) as handle:
        return dequantize(numpy.asarray(handle.convert("RGB")))


def mask_centroid(mask: numpy.ndarray) -> Tuple[int, int]:
    rows, cols = numpy.nonzero(mask)
    if len(rows) == 0:
        return -1, -1
    return int(numpy.round(rows.mean())), int(numpy.round(cols.mean()))


def region_mass(mask: numpy.ndarray, grid: int) -> numpy.ndarray:
    """Fraction of each grid cell covered by the mask, flattened row-major to k."""
    size = mask.shape[0]
    cell = size // grid
    return mask.reshape(grid, cell, grid, cell).mean(axis=(1, 3)).reshape(-1)
