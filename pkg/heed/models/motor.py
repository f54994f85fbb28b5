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
Recurrent mixture density motor net.

Three stacked LSTM layers; every layer also sees the input z, and the head sees z
and all three hidden states. The head emits, per step, N mixing weights, N means
over the J-dimensional joint command and N isotropic scales.
"""

import math
from dataclasses import dataclass
from typing import List
from typing import Optional
from typing import Tuple

import numpy
import torch
from torch import nn

from heed.exceptions import ShapeError

LAYERS: int = 3

State = List[Tuple[torch.Tensor, torch.Tensor]]


@dataclass
class MixtureParams:
    alpha: torch.Tensor  # ... x N
    mu: torch.Tensor  # ... x N x J
    sigma: torch.Tensor  # ... x N
    log_alpha: Optional[torch.Tensor] = None

    def log_weights(self) -> torch.Tensor:
        return self.log_alpha if self.log_alpha is not None else torch.log(self.alpha)

    def step(self, t: int, row: int = 0) -> "MixtureParams":
        """The mixture of one batch row at one step."""
        return MixtureParams(
            alpha=self.alpha[row, t], mu=self.mu[row, t], sigma=self.sigma[row, t]
        )


class MotorNet(nn.Module):
    def __init__(self, d_z: int, hidden: int, components: int, joints: int):
        super().__init__()
        self.d_z = d_z
        self.hidden = hidden
        self.components = components
        self.joints = joints
        self.layers = nn.ModuleList(
            [nn.LSTM(d_z if i == 0 else d_z + hidden, hidden, batch_first=True) for i in range(LAYERS)]
        )
        features = d_z + LAYERS * hidden
        self.alpha = nn.Linear(features, components)
        self.mu = nn.Linear(features, components * joints)
        self.log_sigma = nn.Linear(features, components)

    def forward(
        self, z: torch.Tensor, state: Optional[State] = None
    ) -> Tuple[MixtureParams, State]:
        """z: B x T x d_z. `state` is None at the start of an episode."""
        if z.ndim != 3 or z.shape[-1] != self.d_z:
            raise ShapeError("z sequence", ("B", "T", self.d_z), tuple(z.shape))
        state = state or [None] * LAYERS
        outputs, new_state = [], []
        inputs = z
        for layer, carried in zip(self.layers, state):
            out, carry = layer(inputs, carried)
            outputs.append(out)
            new_state.append(carry)
            inputs = torch.cat([z, out], dim=-1)

        features = torch.cat([z] + outputs, dim=-1)
        logits = self.alpha(features)
        mixture = MixtureParams(
            alpha=torch.softmax(logits, dim=-1),
            mu=self.mu(features).view(*z.shape[:2], self.components, self.joints),
            sigma=torch.exp(self.log_sigma(features)),
            log_alpha=torch.log_softmax(logits, dim=-1),
        )
        return mixture, new_state


def component_log_density(params: MixtureParams, target: torch.Tensor) -> torch.Tensor:
    """log g_i(target) for every component, isotropic Gaussians."""
    joints = target.shape[-1]
    squared = ((target.unsqueeze(-2) - params.mu) ** 2).sum(dim=-1)
    return (
        -0.5 * joints * math.log(2 * math.pi)
        - joints * torch.log(params.sigma)
        - squared / (2 * params.sigma**2)
    )


def mdn_loss(
    params: MixtureParams, target: torch.Tensor, valid: Optional[torch.Tensor] = None
) -> torch.Tensor:
    """
    -log sum_i alpha_i g_i(target), averaged over the valid steps. Computed with
    log-sum-exp so it stays finite however far the target is from every mean.
    """
    nll = -torch.logsumexp(params.log_weights() + component_log_density(params, target), dim=-1)
    if valid is None:
        return nll.mean()
    valid = valid.to(nll.dtype)
    return (nll * valid).sum() / valid.sum().clamp(min=1.0)


def mdn_sample(
    params: MixtureParams,
    rng: numpy.random.Generator,
    deterministic: bool = False,
    count: Optional[int] = None,
) -> numpy.ndarray:
    """
    Draw a component from alpha, then a command from that component. One step's
    mixture (alpha: N, mu: N x J, sigma: N). `deterministic` returns the mean of
    the heaviest component. With `count`, returns count x J draws.
    """
    alpha = params.alpha.detach().cpu().double().numpy()
    mu = params.mu.detach().cpu().double().numpy()
    sigma = params.sigma.detach().cpu().double().numpy()
    if deterministic:
        return mu[int(numpy.argmax(alpha))].copy()
    alpha = alpha / alpha.sum()
    draws = 1 if count is None else count
    picks = rng.choice(len(alpha), size=draws, p=alpha)
    samples = mu[picks] + sigma[picks, None] * rng.standard_normal((draws, mu.shape[-1]))
    return samples[0] if count is None else samples
