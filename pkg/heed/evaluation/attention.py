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
Measurements of the attention teacher against the renderer's ground truth, and
attention overlays for inspection.
"""

from dataclasses import asdict
from dataclasses import dataclass
from typing import Dict
from typing import List
from typing import Optional
from typing import Tuple

import numpy
import torch

from heed.corpus.dataset import DatasetHandle
from heed.corpus.vocabulary import Command
from heed.corpus.vocabulary import grammar_sample
from heed.exceptions import OverDenseSceneError
from heed.models.teacher import AttentionTeacher
from heed.models.text_encoder import pad_sentences
from heed.sim.catalog import Catalog
from heed.sim.render import RenderResult
from heed.sim.render import region_mass
from heed.sim.render import render
from heed.sim.scene import make_scene

WORD_THRESHOLD: float = 0.5


def mask_cells(mask: numpy.ndarray, grid: int) -> numpy.ndarray:
    """k booleans: grid cells the mask touches."""
    return region_mass(mask, grid) > 0


def target_attention_mass(p: numpy.ndarray, mask: numpy.ndarray, grid: int) -> float:
    return float(p[mask_cells(mask, grid)].sum())


def attention_overlay(frame: numpy.ndarray, p: numpy.ndarray, grid: int) -> numpy.ndarray:
    """The frame dimmed by the map: each cell scaled by its probability over the largest one."""
    size = frame.shape[0]
    cell = size // grid
    weights = (p / max(float(p.max()), 1e-12)).reshape(grid, grid)
    weights = numpy.repeat(numpy.repeat(weights, cell, axis=0), cell, axis=1)
    return (frame * weights[:, :, None]).astype(frame.dtype)


def color_swap_pair(handle: DatasetHandle, index: int) -> Optional[Tuple[RenderResult, Command, Command]]:
    """
    A two-object scene for demonstration `index`: its commanded object and one of the
    same shape in another colour. Returns the frame, the command for the first
    object and the same sentence with only the colour word swapped; None when the
    catalog has a single colour or the pair cannot be placed.
    """
    command = handle.command(index)
    catalog: Catalog = handle.catalog
    if catalog.m < 2:
        return None
    seed = handle.demos[index]["scene_seed"]
    other = (command.color_id + 1 + seed % (catalog.m - 1)) % catalog.m
    required = [(command.shape_id, command.color_id), (command.shape_id, other)]
    try:
        scene = make_scene(handle.scene_config, seed, required=required, count=2)
    except OverDenseSceneError:
        return None
    original = grammar_sample(scene.objects[0], command.verb, seed, catalog, handle.vocabulary)
    swapped = grammar_sample(scene.objects[1], command.verb, seed, catalog, handle.vocabulary)
    return render(scene), original, swapped


@dataclass
class TeacherReport:
    frames: int
    target_mass: float
    word_accuracy: float
    swap_pairs: int
    color_swap: float

    def to_dict(self) -> Dict:
        return asdict(self)


def _run(teacher: AttentionTeacher, images: numpy.ndarray, sentences, vocabulary):
    onehots, lengths = pad_sentences(sentences, vocabulary)
    with torch.no_grad():
        outputs = teacher(torch.from_numpy(images.astype(numpy.float32)), onehots, lengths)
    return outputs["p"].numpy(), outputs["x_hat"].numpy()


def evaluate_teacher(
    teacher: AttentionTeacher, handle: DatasetHandle, split: str = "validation", limit: Optional[int] = None
) -> TeacherReport:
    """
    Over the frames of `split`: the mean attention mass inside the commanded object's
    cells, and how often the thresholded word prediction equals the word set. For each
    demonstration a two-object scene of one shape in two colours is rendered, and the
    argmax cell is checked to sit on the commanded object, then to move to the
    other object when only the colour word of the command changes.
    """
    teacher.eval()
    grid = teacher.grid
    masses: List[float] = []
    exact: List[bool] = []
    swaps: List[bool] = []

    for index in handle.split(split)[:limit]:
        command = handle.command(index)
        frames = handle.frames(index).astype(numpy.float32) / numpy.float32(255)
        masks = handle.masks(index)
        p, x_hat = _run(teacher, frames, [command.text] * len(frames), handle.vocabulary)
        masses.extend(target_attention_mass(p[t], masks[t], grid) for t in range(len(frames)))
        predicted = x_hat > WORD_THRESHOLD
        exact.extend(bool(numpy.array_equal(row, command.word_set > 0.5)) for row in predicted)

        pair = color_swap_pair(handle, index)
        if pair is None:
            continue
        frame, original, swapped = pair
        p_pair, _ = _run(
            teacher, numpy.stack([frame.image, frame.image]), [original.text, swapped.text], handle.vocabulary
        )
        swaps.append(
            bool(mask_cells(frame.masks[0], grid)[int(p_pair[0].argmax())])
            and bool(mask_cells(frame.masks[1], grid)[int(p_pair[1].argmax())])
        )

    return TeacherReport(
        frames=len(masses),
        target_mass=float(numpy.mean(masses)) if masses else 0.0,
        word_accuracy=float(numpy.mean(exact)) if exact else 0.0,
        swap_pairs=len(swaps),
        color_swap=float(numpy.mean(swaps)) if swaps else 0.0,
    )


def teacher_panel(teacher: AttentionTeacher, handle: DatasetHandle, index: int, columns: int) -> numpy.ndarray:
    """Two rows over evenly spaced frames of one demonstration: input, and input under the map."""
    command = handle.command(index)
    frames = handle.frames(index).astype(numpy.float32) / numpy.float32(255)
    picks = numpy.linspace(0, len(frames) - 1, num=min(columns, len(frames))).round().astype(int)
    chosen = frames[picks]
    p, _ = _run(teacher, chosen, [command.text] * len(chosen), handle.vocabulary)
    overlays = [attention_overlay(f, m, teacher.grid) for f, m in zip(chosen, p)]
    return numpy.concatenate([numpy.concatenate(list(chosen), 1), numpy.concatenate(overlays, 1)], 0)
