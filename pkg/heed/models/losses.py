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
Loss functions for the attention teacher and the vision net.

Every probability that goes into a log is clipped at EPSILON. Batch losses are
means over the batch. The discriminator heads have n + 1 and m + 1 classes; the
last class of each head is "fake".
"""

import torch

EPSILON: float = 1e-7


def _log(p: torch.Tensor) -> torch.Tensor:
    return torch.log(p.clamp(min=EPSILON))


def attention_loss(x_hat: torch.Tensor, x: torch.Tensor, literal: bool = False) -> torch.Tensor:
    """
    Binary cross-entropy between predicted and true word sets, averaged over the
    vocabulary. `literal` keeps only the positive term, -X log X_hat, which is
    minimised by predicting every word.
    """
    x_hat = x_hat.clamp(EPSILON, 1.0 - EPSILON)
    per_word = x * torch.log(x_hat)
    if not literal:
        per_word = per_word + (1.0 - x) * torch.log(1.0 - x_hat)
    return (-per_word.sum(dim=-1) / x.shape[-1]).mean()


def _class_nll(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    probabilities = torch.softmax(logits, dim=-1)
    return -_log(probabilities.gather(-1, labels.long().unsqueeze(-1)).squeeze(-1))


def loss_real(shape_logits, color_logits, shape_ids, color_ids) -> torch.Tensor:
    """Real images must be classified as their object's shape and colour."""
    return (_class_nll(shape_logits, shape_ids) + _class_nll(color_logits, color_ids)).mean()


def _not_fake(logits: torch.Tensor) -> torch.Tensor:
    fake = torch.softmax(logits, dim=-1)[..., -1]
    return -_log(1.0 - fake)


def loss_fake(shape_logits, color_logits) -> torch.Tensor:
    """-log(1 - p(fake)) on both heads, for reconstructions G(E(x))."""
    return (_not_fake(shape_logits) + _not_fake(color_logits)).mean()


def loss_noise(shape_logits, color_logits) -> torch.Tensor:
    """The same form as loss_fake, for generations G(z) from prior samples."""
    return loss_fake(shape_logits, color_logits)


def discriminator_loss(real, fake, noise) -> torch.Tensor:
    return real + fake + noise


def generator_adversarial_loss(shape_logits, color_logits, shape_ids, color_ids) -> torch.Tensor:
    """
    Non-saturating generator objective: generated images should be classified as
    the true object. Callers concatenate reconstructions and prior generations.
    """
    return loss_real(shape_logits, color_logits, shape_ids, color_ids)


def loss_feature_matching(real_features, fake_features, mode: str = "batch") -> torch.Tensor:
    """
    `batch`: squared distance between the batch means of the discriminator features.
    `pair`: mean squared distance between paired real and fake features.
    """
    if mode == "pair":
        return ((real_features - fake_features) ** 2).sum(dim=-1).mean()
    return ((real_features.mean(dim=0) - fake_features.mean(dim=0)) ** 2).sum()


def loss_reconstruction(x_prime, x) -> torch.Tensor:
    return ((x_prime - x) ** 2).mean()


def loss_prior(mu, log_var) -> torch.Tensor:
    """KL(N(mu, exp(log_var)) || N(0, 1)), summed over the latent, averaged over the batch."""
    return (-0.5 * (1.0 + log_var - mu**2 - torch.exp(log_var)).sum(dim=-1)).mean()


def loss_attention_reconstruction(p_prime, p_teacher) -> torch.Tensor:
    """Cross-entropy of the generator's attention map against the teacher's."""
    return (-(p_teacher * _log(p_prime)).sum(dim=-1)).mean()


def loss_cycle(mu_again, z) -> torch.Tensor:
    return ((mu_again - z) ** 2).sum(dim=-1).mean()
