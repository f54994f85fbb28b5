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

"""The visuomotor policy: a vision net whose latent z drives the motor net."""

from typing import Dict
from typing import Optional

import torch
from torch import nn

from heed.config import RunConfig
from heed.models.motor import MotorNet
from heed.models.vision import VisionNet


class VisuomotorPolicy(nn.Module):
    def __init__(self, config: RunConfig, variant: Optional[str] = None):
        super().__init__()
        self.variant = variant or config.train.model_variant
        scene = config.scene
        n, m = len(scene.shapes), len(scene.colors)
        self.vision = VisionNet(
            scene.image_size,
            n,
            m,
            config.vision.d_z,
            config.vision.channels,
            config.teacher.grid,
            self.variant,
        )
        self.motor = MotorNet(
            config.vision.d_z,
            config.motor.hidden,
            config.motor.components,
            len(scene.link_lengths) + 1,
        )

    def parameter_groups(self) -> Dict[str, list]:
        """Discriminator parameters apart from the encoder, generator and motor net."""
        groups = {
            "encoder_generator": list(self.vision.encoder.parameters())
            + list(self.vision.generator.parameters()),
            "motor": list(self.motor.parameters()),
        }
        if self.vision.discriminator is not None:
            groups["discriminator"] = list(self.vision.discriminator.parameters())
        return groups

    def latent(
        self, frames: torch.Tensor, s=None, c=None, generator: Optional[torch.Generator] = None
    ):
        """B x T x H x W x 3 frames to the B x T x d_z latent sequence and its encoding."""
        b, t = frames.shape[:2]
        flat = frames.reshape(b * t, *frames.shape[2:])
        if s is not None:
            s = s.repeat_interleave(t, dim=0)
            c = c.repeat_interleave(t, dim=0)
        encoding = self.vision.encode(flat, s, c, generator)
        return encoding, s, c
