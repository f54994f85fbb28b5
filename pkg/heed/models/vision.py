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
Conditional VAE-GAN vision net.

E(x, s, c) -> z,  G(z, s, c) -> (x', p'),  D(x, p) -> (shape logits, colour logits).

The object one-hots (s, c) are projected and broadcast-added to a mid-level feature
map of E and G. D sees the attention map as a fourth image channel, upsampled from
the grid by repeating each cell. The baseline variant builds E and G without the
conditioning and without the attention head, and has no discriminator.
"""

from dataclasses import dataclass
from typing import Optional

import torch
from torch import nn
from torch.nn import functional

from heed.exceptions import ShapeError
from heed.models.teacher import channels_first


@dataclass
class LatentEncoding:
    mu: torch.Tensor
    log_var: torch.Tensor
    sample: torch.Tensor
    epsilon: torch.Tensor


@dataclass
class GeneratorOutput:
    x_prime: torch.Tensor  # B x H x W x 3
    p_prime: Optional[torch.Tensor]  # B x k, None for the baseline


@dataclass
class DiscriminatorOutput:
    shape_logits: torch.Tensor  # B x (n + 1)
    color_logits: torch.Tensor  # B x (m + 1)
    features: torch.Tensor  # B x f, the last convolution flattened


def weights_init(module: nn.Module):
    if isinstance(module, (nn.Conv2d, nn.ConvTranspose2d)):
        nn.init.normal_(module.weight, 0.0, 0.02)
        nn.init.zeros_(module.bias)


class Conditioning(nn.Module):
    """Projects the concatenated one-hots to a per-channel offset."""

    def __init__(self, n: int, m: int, channels: int):
        super().__init__()
        self.n, self.m = n, m
        self.project = nn.Linear(n + m, channels)

    def forward(self, features: torch.Tensor, s: torch.Tensor, c: torch.Tensor) -> torch.Tensor:
        found = None if s is None or c is None else (s.shape[-1], c.shape[-1])
        if found != (self.n, self.m):
            raise ShapeError("object one-hots", (self.n, self.m), found)
        offset = self.project(torch.cat([s, c], dim=-1).to(features.dtype))
        return features + offset[:, :, None, None]


class Encoder(nn.Module):
    def __init__(self, image_size: int, n: int, m: int, d_z: int, width: int, conditioned: bool):
        super().__init__()
        self.image_size = image_size
        self.block1 = nn.Sequential(nn.Conv2d(3, width, 4, 2, 1), nn.LeakyReLU(0.2))
        self.block2 = nn.Sequential(nn.Conv2d(width, 2 * width, 4, 2, 1), nn.LeakyReLU(0.2))
        self.block3 = nn.Sequential(nn.Conv2d(2 * width, 4 * width, 4, 2, 1), nn.LeakyReLU(0.2))
        self.condition = Conditioning(n, m, 2 * width) if conditioned else None
        base = image_size // 8
        self.out = nn.Linear(4 * width * base * base, 2 * d_z)

    def forward(self, x: torch.Tensor, s=None, c=None):
        h = self.block2(self.block1(channels_first(x, self.image_size)))
        if self.condition is not None:
            h = self.condition(h, s, c)
        h = self.block3(h).flatten(1)
        mu, log_var = self.out(h).chunk(2, dim=-1)
        return mu, log_var


class Generator(nn.Module):
    def __init__(
        self, image_size: int, n: int, m: int, d_z: int, width: int, grid: int, conditioned: bool
    ):
        super().__init__()
        self.width = width
        self.base = image_size // 8
        self.grid = grid
        self.fc = nn.Linear(d_z, 4 * width * self.base * self.base)
        self.condition = Conditioning(n, m, 4 * width) if conditioned else None
        self.up = nn.Sequential(
            nn.ConvTranspose2d(4 * width, 2 * width, 4, 2, 1),
            nn.ReLU(),
            nn.ConvTranspose2d(2 * width, width, 4, 2, 1),
            nn.ReLU(),
            nn.ConvTranspose2d(width, 3, 4, 2, 1),
        )
        self.attention = nn.Conv2d(4 * width, 1, 3, padding=1) if conditioned else None

    def forward(self, z: torch.Tensor, s=None, c=None) -> GeneratorOutput:
        h = functional.relu(self.fc(z)).view(-1, 4 * self.width, self.base, self.base)
        if self.condition is not None:
            h = self.condition(h, s, c)
        x_prime = torch.sigmoid(self.up(h)).permute(0, 2, 3, 1)
        p_prime = None
        if self.attention is not None:
            scores = self.attention(h)
            if self.base != self.grid:
                scores = functional.adaptive_avg_pool2d(scores, self.grid)
            p_prime = torch.softmax(scores.flatten(1), dim=-1)
        return GeneratorOutput(x_prime=x_prime, p_prime=p_prime)


def rasterize_map(p: torch.Tensor, grid: int, image_size: int) -> torch.Tensor:
    """B x k map to B x 1 x H x W by repeating each cell."""
    cell = image_size // grid
    square = p.view(-1, 1, grid, grid)
    return square.repeat_interleave(cell, dim=2).repeat_interleave(cell, dim=3)


class Discriminator(nn.Module):
    def __init__(self, image_size: int, n: int, m: int, width: int, grid: int):
        super().__init__()
        self.image_size = image_size
        self.grid = grid
        self.convs = nn.Sequential(
            nn.Conv2d(4, width, 4, 2, 1),
            nn.LeakyReLU(0.2),
            nn.Conv2d(width, 2 * width, 4, 2, 1),
            nn.LeakyReLU(0.2),
            nn.Conv2d(2 * width, 4 * width, 4, 2, 1),
            nn.LeakyReLU(0.2),
        )
        features = 4 * width * (image_size // 8) ** 2
        self.shape_head = nn.Linear(features, n + 1)
        self.color_head = nn.Linear(features, m + 1)

    def forward(self, x: torch.Tensor, p: torch.Tensor) -> DiscriminatorOutput:
        if p.shape[-1] != self.grid * self.grid:
            raise ShapeError("attention map", self.grid * self.grid, p.shape[-1])
        image = channels_first(x, self.image_size)
        stacked = torch.cat([image, rasterize_map(p, self.grid, self.image_size).to(image.dtype)], 1)
        features = self.convs(stacked).flatten(1)
        return DiscriminatorOutput(
            shape_logits=self.shape_head(features),
            color_logits=self.color_head(features),
            features=features,
        )


class VisionNet(nn.Module):
    def __init__(
        self,
        image_size: int,
        n: int,
        m: int,
        d_z: int,
        width: int,
        grid: int,
        variant: str = "tfa_full",
    ):
        super().__init__()
        self.variant = variant
        self.d_z = d_z
        self.n, self.m = n, m
        conditioned = variant == "tfa_full"
        self.encoder = Encoder(image_size, n, m, d_z, width, conditioned)
        self.generator = Generator(image_size, n, m, d_z, width, grid, conditioned)
        self.discriminator = (
            Discriminator(image_size, n, m, width, grid) if conditioned else None
        )
        self.apply(weights_init)

    @property
    def conditioned(self) -> bool:
        return self.variant == "tfa_full"

    def encode(
        self, x, s=None, c=None, generator: Optional[torch.Generator] = None
    ) -> LatentEncoding:
        """Reparameterised sample mu + exp(log_var / 2) * epsilon, epsilon drawn from `generator`."""
        mu, log_var = self.encoder(x, s, c)
        epsilon = torch.randn(mu.shape, generator=generator, dtype=mu.dtype, device=mu.device)
        sample = mu + torch.exp(0.5 * log_var) * epsilon
        return LatentEncoding(mu=mu, log_var=log_var, sample=sample, epsilon=epsilon)

    def generate(self, z, s=None, c=None) -> GeneratorOutput:
        if z.shape[-1] != self.d_z:
            raise ShapeError("z", self.d_z, z.shape[-1])
        return self.generator(z, s, c)

    def discriminate(self, x, p) -> DiscriminatorOutput:
        return self.discriminator(x, p)

    def reconstruct(self, x, s=None, c=None) -> GeneratorOutput:
        """G(E(x).mu), the noise-free reconstruction."""
        mu, _ = self.encoder(x, s, c)
        return self.generate(mu, s, c)
