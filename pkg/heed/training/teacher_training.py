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
Offline training of the attention teacher on (frame, sentence) pairs, and the
precomputation of its attention maps for every dataset frame.
"""

import os
from typing import Dict
from typing import Optional
from typing import Tuple

import numpy
import torch

from heed.config import RunConfig
from heed.corpus.dataset import DatasetHandle
from heed.corpus.dataset import FrameBatch
from heed.corpus.dataset import iterate_frames
from heed.exceptions import CompatibilityError
from heed.exceptions import TrainingFailureError
from heed.models.losses import attention_loss
from heed.models.teacher import AttentionTeacher
from heed.models.text_encoder import pad_sentences
from heed.tools import derive_seed
from heed.tools import seed_everything
from heed.training.checkpoint import Checkpoint
from heed.training.history import LossHistory
from heed.training.history import RunningMeans
from heed.training.history import all_finite

PRECOMPUTE_BATCH: int = 64


def build_teacher(config: RunConfig, vocabulary_size: int) -> AttentionTeacher:
    return AttentionTeacher(config.teacher, config.scene, vocabulary_size)


def teacher_outputs(teacher: AttentionTeacher, batch: FrameBatch, vocabulary) -> Dict[str, torch.Tensor]:
    onehots, lengths = pad_sentences(batch.tokens, vocabulary)
    return teacher(torch.from_numpy(batch.frames), onehots, lengths)


def teacher_loss(teacher: AttentionTeacher, batch: FrameBatch, vocabulary) -> torch.Tensor:
    outputs = teacher_outputs(teacher, batch, vocabulary)
    return attention_loss(
        outputs["x_hat"], torch.from_numpy(batch.word_sets), literal=teacher.literal_loss
    )


def validation_loss(teacher: AttentionTeacher, handle: DatasetHandle, batch_size: int) -> Dict[str, float]:
    means = RunningMeans()
    teacher.eval()
    with torch.no_grad():
        for batch in iterate_frames(handle, "validation", batch_size, seed=0):
            means.add({"attention": float(teacher_loss(teacher, batch, handle.vocabulary))}, len(batch.keys))
    teacher.train()
    return means.means()


def teacher_checkpoint(teacher: AttentionTeacher, config: RunConfig, history: LossHistory, epoch: int) -> Checkpoint:
    return Checkpoint.from_modules(
        "teacher",
        config.to_dict(),
        {"teacher": teacher},
        epoch=epoch,
        variant=config.teacher.trunk,
        history=list(history.records),
    )


def load_teacher(checkpoint: Checkpoint, config: RunConfig, vocabulary_size: int) -> AttentionTeacher:
    if "teacher" not in checkpoint.state:
        raise CompatibilityError(f"a `{checkpoint.kind}` checkpoint holds no attention teacher")
    teacher = build_teacher(config, vocabulary_size)
    try:
        checkpoint.load_into("teacher", teacher)
    except RuntimeError as err:
        raise CompatibilityError(f"teacher parameters do not fit this config ({err})") from err
    teacher.eval()
    return teacher


def train_teacher(
    handle: DatasetHandle,
    config: RunConfig,
    seed: int,
    diagnostic_path: Optional[str] = None,
) -> Tuple[AttentionTeacher, LossHistory]:
    """
    Adam on the word-set loss over shuffled single frames. The validation loss is
    recorded before training (epoch 0) and after every epoch.
    """
    seed_everything(derive_seed(seed, "teacher"))
    teacher = build_teacher(config, handle.vocabulary.size)
    trainable = [p for p in teacher.parameters() if p.requires_grad]
    optimizer = torch.optim.Adam(trainable, lr=config.teacher.learning_rate)
    history = LossHistory("teacher")
    history.record(0, "validation", validation_loss(teacher, handle, config.teacher.batch_size))

    for epoch in range(1, config.teacher.epochs + 1):
        means = RunningMeans()
        order_seed = derive_seed(seed, "teacher", epoch)
        for number, batch in enumerate(
            iterate_frames(handle, "train", config.teacher.batch_size, order_seed)
        ):
            loss = teacher_loss(teacher, batch, handle.vocabulary)
            losses = {"attention": float(loss)}
            if not all_finite(losses):
                if diagnostic_path:
                    teacher_checkpoint(teacher, config, history, epoch).save(diagnostic_path)
                raise TrainingFailureError("teacher", epoch, batch.keys, losses, diagnostic_path)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            means.add(losses, len(batch.keys))
        history.record(epoch, "train", means.means())
        history.record(epoch, "validation", validation_loss(teacher, handle, config.teacher.batch_size))

    teacher.eval()
    return teacher, history


def precompute_attention(teacher: AttentionTeacher, handle: DatasetHandle):
    """Run the trained teacher over every frame and attach the maps to the dataset."""
    teacher.eval()
    maps: Dict[int, numpy.ndarray] = {}
    with torch.no_grad():
        for entry in handle.demos:
            index = entry["index"]
            command = handle.command(index)
            frames = handle.frames(index).astype(numpy.float32) / numpy.float32(255)
            chunks = []
            for start in range(0, len(frames), PRECOMPUTE_BATCH):
                chunk = torch.from_numpy(frames[start : start + PRECOMPUTE_BATCH])
                onehots, lengths = pad_sentences([command.text] * len(chunk), handle.vocabulary)
                chunks.append(teacher(chunk, onehots, lengths)["p"].numpy())
            maps[index] = numpy.concatenate(chunks) if chunks else numpy.zeros((0, teacher.k))
    handle.attach_attention(maps, teacher.grid)


def teacher_output_paths(out: str) -> Dict[str, str]:
    return {
        "checkpoint": os.path.join(out, "teacher.ckpt"),
        "history": os.path.join(out, "teacher_history.csv"),
        "diagnostic": os.path.join(out, "teacher_diagnostic.ckpt"),
    }
