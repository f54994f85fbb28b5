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
Task-focused attention teacher.

A convolutional trunk turns the frame into k region feature vectors. The sentence
encoding u and each region vector are mapped into a joint space and summed,

    psi = tanh(phi W_f + u W_u),    p = softmax(psi W_p)

and the attention-pooled features s = sum_i p_i phi_i must reconstruct the set of
words in the sentence through the word classifier tau. Nothing tells the teacher
where the object is; attending to the named object is the only way to predict its
colour and shape words.
"""

import math
from typing import Dict

import torch
from torch import nn

from heed.config import SceneConfig
from heed.config import TeacherConfig
from heed.exceptions import MissingDependencyError
from heed.exceptions import NumericError
from heed.exceptions import ShapeError
from heed.models.text_encoder import TextEncoder

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


def channels_first(images: torch.Tensor, image_size: int, channels: int = 3) -> torch.Tensor:
    """B x H x W x C to B x C x H x W, checking the frame size."""
    expected = (image_size, image_size, channels)
    if images.ndim != 4 or tuple(images.shape[1:]) != expected:
        raise ShapeError("images", ("B",) + expected, tuple(images.shape))
    return images.permute(0, 3, 1, 2)


class CompactTrunk(nn.Module):
    """
    Convolution stages that halve the resolution until it equals the grid. Replicate
    padding keeps a constant image constant at the borders too.
    """

    def __init__(self, image_size: int, grid: int, d_phi: int, width: int = 32):
        super().__init__()
        stages = int(round(math.log2(image_size // grid)))
        layers = []
        channels = 3
        for stage in range(stages):
            out = width * (2 ** min(stage, 2))
            layers += [
                nn.Conv2d(channels, out, 3, padding=1, padding_mode="replicate"),
                nn.ReLU(),
                nn.AvgPool2d(2),
            ]
            channels = out
        layers += [nn.Conv2d(channels, d_phi, 1)]
        self.net = nn.Sequential(*layers)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)


class VGGTrunk(nn.Module):
    """Frozen VGG19 convolutions up to the third pooling stage plus a trained 1x1 projection."""

    def __init__(self, image_size: int, grid: int, d_phi: int):
        super().__init__()
        if image_size // grid != 8:
            raise ShapeError("teacher.grid", image_size // 8, grid)
        try:
            from torchvision.models import VGG19_Weights
            from torchvision.models import vgg19
        except ImportError as err:  # pragma: no cover
            raise MissingDependencyError("torchvision") from err
        features = vgg19(weights=VGG19_Weights.DEFAULT).features[:19]
        for parameter in features.parameters():
            parameter.requires_grad_(False)
        self.features = features.eval()
        self.project = nn.Conv2d(256, d_phi, 1)
        self.register_buffer("mean", torch.tensor(IMAGENET_MEAN).view(1, 3, 1, 1))
        self.register_buffer("std", torch.tensor(IMAGENET_STD).view(1, 3, 1, 1))

    def train(self, mode: bool = True):
        super().train(mode)
        self.features.eval()
        return self

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.project(self.features((x - self.mean) / self.std))


class AttentionHead(nn.Module):
    """The attention combination, pooling and word classifier, without the trunk."""

    def __init__(self, d_phi: int, d_h: int, d_psi: int, vocabulary_size: int, tau_hidden: int):
        super().__init__()
        self.W_f = nn.Linear(d_phi, d_psi, bias=False)
        self.W_u = nn.Linear(d_h, d_psi, bias=False)
        self.W_p = nn.Linear(d_psi, 1, bias=False)
        self.tau = nn.Sequential(
            nn.Linear(d_phi, tau_hidden), nn.ReLU(), nn.Linear(tau_hidden, vocabulary_size)
        )

    def attend(self, phi: torch.Tensor, u: torch.Tensor) -> torch.Tensor:
        """phi: B x k x d_phi, u: B x d_h -> p: B x k."""
        if not (bool(torch.isfinite(phi).all()) and bool(torch.isfinite(u).all())):
            raise NumericError("attention inputs")
        psi = torch.tanh(self.W_f(phi) + self.W_u(u).unsqueeze(1))
        return torch.softmax(self.W_p(psi).squeeze(-1), dim=-1)

    @staticmethod
    def pool(phi: torch.Tensor, p: torch.Tensor) -> torch.Tensor:
        return torch.einsum("bk,bkd->bd", p, phi)

    def predict_words(self, s: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(self.tau(s))


class AttentionTeacher(nn.Module):
    def __init__(self, teacher: TeacherConfig, scene: SceneConfig, vocabulary_size: int):
        super().__init__()
        self.image_size = scene.image_size
        self.grid = teacher.grid
        self.literal_loss = teacher.loss == "literal"
        if teacher.trunk == "vgg19":
            self.trunk = VGGTrunk(scene.image_size, teacher.grid, teacher.d_phi)
        else:
            self.trunk = CompactTrunk(scene.image_size, teacher.grid, teacher.d_phi)
        self.text = TextEncoder(vocabulary_size, teacher.d_x, teacher.d_h, teacher.max_len, teacher.cell)
        self.head = AttentionHead(
            teacher.d_phi, teacher.d_h, teacher.d_psi, vocabulary_size, teacher.tau_hidden
        )

    @property
    def k(self) -> int:
        return self.grid * self.grid

    def region_features(self, images: torch.Tensor) -> torch.Tensor:
        """B x H x W x 3 frames in [0, 1] to B x k x d_phi, regions row-major."""
        features = self.trunk(channels_first(images, self.image_size))
        if tuple(features.shape[-2:]) != (self.grid, self.grid):
            raise ShapeError("region grid", (self.grid, self.grid), tuple(features.shape[-2:]))
        return features.flatten(2).transpose(1, 2)

    def forward(
        self, images: torch.Tensor, onehots: torch.Tensor, lengths: torch.Tensor
    ) -> Dict[str, torch.Tensor]:
        phi = self.region_features(images)
        u = self.text(onehots, lengths)
        p = self.head.attend(phi, u)
        s = self.head.pool(phi, p)
        return {"p": p, "s": s, "x_hat": self.head.predict_words(s), "u": u}
