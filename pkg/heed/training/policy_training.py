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
Policy training.

The TFA policy is trained end to end: every batch takes one discriminator step on
L_D = L_real + L_fake + L_noise, then one step of the encoder, generator and motor
net on

    L_prior + L_GD + L_fea + L_rec + L_att + L_cycle + L_motor

each term scaled by its weight in `train.weights`. The motor net is then fine-tuned
alone on the means of the frozen encoder. The baseline is a plain VAE with the same
motor net, trained on L_rec + L_prior + L_motor, one policy per (task, object).
"""

from dataclasses import dataclass
from typing import Dict
from typing import List
from typing import Optional
from typing import Tuple

import torch

from heed.config import RunConfig
from heed.corpus.dataset import Batch
from heed.corpus.dataset import DatasetHandle
from heed.corpus.dataset import iterate
from heed.exceptions import CompatibilityError
from heed.exceptions import TrainingFailureError
from heed.models import losses
from heed.models.motor import mdn_loss
from heed.models.policy import VisuomotorPolicy
from heed.tools import derive_seed
from heed.tools import seed_everything
from heed.training.checkpoint import Checkpoint
from heed.training.history import LossHistory
from heed.training.history import RunningMeans
from heed.training.history import all_finite

TFA_MODULE: str = "policy"


@dataclass
class Tensors:
    """A sequence batch as tensors, with the valid steps flattened out for the vision losses."""

    frames: torch.Tensor  # B x T x H x W x 3
    targets: torch.Tensor  # B x T x J
    valid: torch.Tensor  # B x T
    flat_valid: torch.Tensor  # B*T
    s: torch.Tensor  # B x n
    c: torch.Tensor  # B x m
    shape_ids: torch.Tensor  # B*T
    color_ids: torch.Tensor  # B*T
    attention: Optional[torch.Tensor]  # B*T x k

    @classmethod
    def from_batch(cls, batch: Batch) -> "Tensors":
        b, t = batch.valid.shape
        s = torch.from_numpy(batch.shape_onehot)
        c = torch.from_numpy(batch.color_onehot)
        attention = None
        if batch.attention is not None:
            attention = torch.from_numpy(batch.attention).reshape(b * t, -1)
        return cls(
            frames=torch.from_numpy(batch.frames),
            targets=torch.from_numpy(batch.targets),
            valid=torch.from_numpy(batch.valid),
            flat_valid=torch.from_numpy(batch.valid).reshape(-1),
            s=s,
            c=c,
            shape_ids=s.argmax(dim=-1).repeat_interleave(t),
            color_ids=c.argmax(dim=-1).repeat_interleave(t),
            attention=attention,
        )


def cell_key(verb: str, shape_id: int, color_id: int) -> str:
    return f"{verb}/{shape_id}/{color_id}"


def build_policy(config: RunConfig, seed: int, variant: str, label: str = "") -> VisuomotorPolicy:
    """A freshly initialised policy; the same (config, seed, variant, label) gives the same weights."""
    torch.manual_seed(derive_seed(seed, "init", variant, label))
    return VisuomotorPolicy(config, variant)


def weighted_overall(components: Dict[str, float], weights) -> float:
    return sum(getattr(weights, name) * value for name, value in components.items())


class _Diverged(Exception):
    def __init__(self, losses: Dict[str, float]):
        self.losses = losses


def _check(values: Dict[str, torch.Tensor]) -> Dict[str, float]:
    floats = {name: float(value) for name, value in values.items()}
    if not all_finite(floats):
        raise _Diverged(floats)
    return floats


def _vision_outputs(policy: VisuomotorPolicy, data: Tensors, generator: torch.Generator):
    """Encode every frame and decode the valid ones."""
    s = data.s if policy.vision.conditioned else None
    c = data.c if policy.vision.conditioned else None
    encoding, s_flat, c_flat = policy.latent(data.frames, s, c, generator)
    keep = data.flat_valid
    s_keep = s_flat[keep] if s_flat is not None else None
    c_keep = c_flat[keep] if c_flat is not None else None
    reconstruction = policy.vision.generate(encoding.sample[keep], s_keep, c_keep)
    return encoding, reconstruction, s_keep, c_keep


def tfa_discriminator_step(policy, data: Tensors, optimizer, weights, generator) -> Dict[str, float]:
    vision = policy.vision
    keep = data.flat_valid
    real = data.frames.reshape(-1, *data.frames.shape[2:])[keep]
    with torch.no_grad():
        _, reconstruction, s, c = _vision_outputs(policy, data, generator)
        prior = torch.randn(reconstruction.x_prime.shape[0], vision.d_z, generator=generator)
        noise = vision.generate(prior, s, c)

    d_real = vision.discriminate(real, data.attention[keep])
    d_fake = vision.discriminate(reconstruction.x_prime, reconstruction.p_prime)
    d_noise = vision.discriminate(noise.x_prime, noise.p_prime)
    terms = {
        "real": losses.loss_real(
            d_real.shape_logits, d_real.color_logits, data.shape_ids[keep], data.color_ids[keep]
        ),
        "fake": losses.loss_fake(d_fake.shape_logits, d_fake.color_logits),
        "noise": losses.loss_noise(d_noise.shape_logits, d_noise.color_logits),
    }
    total = losses.discriminator_loss(terms["real"], terms["fake"], terms["noise"])
    floats = _check(terms)
    optimizer.zero_grad()
    (weights.d * total).backward()
    optimizer.step()
    return {"d": floats["real"] + floats["fake"] + floats["noise"]}


def tfa_generator_step(
    policy, data: Tensors, optimizer, weights, generator, feature_matching: str
) -> Dict[str, float]:
    vision = policy.vision
    b, t = data.valid.shape
    keep = data.flat_valid
    real = data.frames.reshape(-1, *data.frames.shape[2:])[keep]
    ids_s, ids_c = data.shape_ids[keep], data.color_ids[keep]

    encoding, reconstruction, s, c = _vision_outputs(policy, data, generator)
    prior = torch.randn(reconstruction.x_prime.shape[0], vision.d_z, generator=generator)
    noise = vision.generate(prior, s, c)

    with torch.no_grad():
        real_features = vision.discriminate(real, data.attention[keep]).features
    d_fake = vision.discriminate(reconstruction.x_prime, reconstruction.p_prime)
    d_noise = vision.discriminate(noise.x_prime, noise.p_prime)

    mixture, _ = policy.motor(encoding.sample.view(b, t, -1))
    terms = {
        "prior": losses.loss_prior(encoding.mu[keep], encoding.log_var[keep]),
        "gd": losses.generator_adversarial_loss(
            torch.cat([d_fake.shape_logits, d_noise.shape_logits]),
            torch.cat([d_fake.color_logits, d_noise.color_logits]),
            torch.cat([ids_s, ids_s]),
            torch.cat([ids_c, ids_c]),
        ),
        "fea": losses.loss_feature_matching(real_features, d_fake.features, feature_matching),
        "rec": losses.loss_reconstruction(reconstruction.x_prime, real),
        "attention": losses.loss_attention_reconstruction(
            reconstruction.p_prime, data.attention[keep]
        ),
        "motor": mdn_loss(mixture, data.targets, data.valid),
    }
    if weights.cycle > 0:
        again, _ = vision.encoder(noise.x_prime, s, c)
        terms["cycle"] = losses.loss_cycle(again, prior)

    floats = _check(terms)
    total = sum(getattr(weights, name) * value for name, value in terms.items())
    optimizer.zero_grad()
    total.backward()
    optimizer.step()
    return floats


def baseline_step(policy, data: Tensors, optimizer, weights, generator) -> Dict[str, float]:
    b, t = data.valid.shape
    keep = data.flat_valid
    real = data.frames.reshape(-1, *data.frames.shape[2:])[keep]
    encoding, reconstruction, _, _ = _vision_outputs(policy, data, generator)
    mixture, _ = policy.motor(encoding.sample.view(b, t, -1))
    terms = {
        "prior": losses.loss_prior(encoding.mu[keep], encoding.log_var[keep]),
        "rec": losses.loss_reconstruction(reconstruction.x_prime, real),
        "motor": mdn_loss(mixture, data.targets, data.valid),
    }
    floats = _check(terms)
    total = sum(getattr(weights, name) * value for name, value in terms.items())
    optimizer.zero_grad()
    total.backward()
    optimizer.step()
    return floats


def validation_losses(policy: VisuomotorPolicy, handle, config: RunConfig, only=None) -> Dict[str, float]:
    """Reconstruction, prior and motor losses on the validation split, encoder means only."""
    means = RunningMeans()
    policy.eval()
    with torch.no_grad():
        for batch in iterate(handle, "validation", config.train.batch_size, seed=0, only=only):
            data = Tensors.from_batch(batch)
            b, t = data.valid.shape
            s = data.s if policy.vision.conditioned else None
            c = data.c if policy.vision.conditioned else None
            encoding, s_flat, c_flat = policy.latent(data.frames, s, c)
            keep = data.flat_valid
            real = data.frames.reshape(-1, *data.frames.shape[2:])[keep]
            reconstruction = policy.vision.generate(
                encoding.mu[keep],
                s_flat[keep] if s_flat is not None else None,
                c_flat[keep] if c_flat is not None else None,
            )
            mixture, _ = policy.motor(encoding.mu.view(b, t, -1))
            means.add(
                {
                    "rec": float(losses.loss_reconstruction(reconstruction.x_prime, real)),
                    "prior": float(losses.loss_prior(encoding.mu[keep], encoding.log_var[keep])),
                    "motor": float(mdn_loss(mixture, data.targets, data.valid)),
                },
                int(keep.sum()),
            )
    policy.train()
    return means.means()


def _fail(stage, epoch, batch, err: _Diverged, checkpoint: Checkpoint, diagnostic_path):
    if diagnostic_path:
        checkpoint.save(diagnostic_path)
    raise TrainingFailureError(stage, epoch, batch.indices, err.losses, diagnostic_path)


def train_end_to_end(
    handle: DatasetHandle, config: RunConfig, seed: int, diagnostic_path: Optional[str] = None
) -> Checkpoint:
    if not handle.has_attention:
        raise CompatibilityError("the dataset has no teacher attention maps, run train-teacher first")
    seed_everything(derive_seed(seed, "policy"))
    policy = build_policy(config, seed, "tfa_full")
    groups = policy.parameter_groups()
    rate = config.train.learning_rate
    d_optimizer = torch.optim.Adam(groups["discriminator"], lr=rate, betas=(0.5, 0.999))
    g_optimizer = torch.optim.Adam(
        groups["encoder_generator"] + groups["motor"], lr=rate, betas=(0.5, 0.999)
    )
    generator = torch.Generator().manual_seed(derive_seed(seed, "epsilon"))
    weights = config.train.weights
    history = LossHistory("train_policy")
    history.record(0, "validation", validation_losses(policy, handle, config))
    orders: List[List[int]] = []

    def snapshot(epoch: int) -> Checkpoint:
        return Checkpoint.from_modules(
            "policy",
            config.to_dict(),
            {TFA_MODULE: policy},
            epoch=epoch,
            variant="tfa_full",
            history=list(history.records),
            extra={"batch_orders": orders},
        )

    for epoch in range(1, config.train.epochs + 1):
        means = RunningMeans()
        for batch in iterate(handle, "train", config.train.batch_size, derive_seed(seed, "order", epoch)):
            orders.append(batch.indices)
            data = Tensors.from_batch(batch)
            try:
                components = tfa_discriminator_step(policy, data, d_optimizer, weights, generator)
                components.update(
                    tfa_generator_step(
                        policy, data, g_optimizer, weights, generator, config.vision.feature_matching
                    )
                )
            except _Diverged as err:
                _fail("train_policy", epoch, batch, err, snapshot(epoch), diagnostic_path)
            components["overall"] = weighted_overall(components, weights)
            means.add(components, len(batch.indices))
        history.record(epoch, "train", means.means())
        history.record(epoch, "validation", validation_losses(policy, handle, config))

    return snapshot(config.train.epochs)


def _baseline_cells(handle: DatasetHandle) -> Dict[str, List[int]]:
    cells: Dict[str, List[int]] = {}
    for entry in handle.demos:
        command = entry["command"]
        key = cell_key(command["verb"], command["shape_id"], command["color_id"])
        cells.setdefault(key, []).append(entry["index"])
    return dict(sorted(cells.items()))


def train_baseline(
    handle: DatasetHandle,
    config: RunConfig,
    seed: int,
    per_task: bool = True,
    diagnostic_path: Optional[str] = None,
) -> Checkpoint:
    """
    Plain VAE plus motor net. With `per_task` one policy is trained per (task, object)
    on that cell's demonstrations only; otherwise one policy on everything, which
    then sees exactly the batch order of the TFA run with the same seed.
    """
    seed_everything(derive_seed(seed, "policy"))
    cells = _baseline_cells(handle) if per_task else {"all": None}
    weights = config.train.weights
    policies: Dict[str, VisuomotorPolicy] = {}
    history = LossHistory("train_baseline")
    orders: List[List[int]] = []

    def snapshot(epoch: int) -> Checkpoint:
        return Checkpoint.from_modules(
            "policy",
            config.to_dict(),
            policies,
            epoch=epoch,
            variant="baseline_no_tfa",
            history=list(history.records),
            extra={"batch_orders": orders, "cells": sorted(policies)},
        )

    for key, only in cells.items():
        policy = build_policy(config, seed, "baseline_no_tfa", key)
        policies[key if per_task else TFA_MODULE] = policy
        optimizer = torch.optim.Adam(policy.parameters(), lr=config.train.learning_rate)
        generator = torch.Generator().manual_seed(derive_seed(seed, "epsilon", key))
        stage = f"train_baseline[{key}]"
        history.record(0, "validation", {"cell": key, **validation_losses(policy, handle, config, only)})
        for epoch in range(1, config.train.epochs + 1):
            means = RunningMeans()
            order_seed = derive_seed(seed, "order", epoch)
            for batch in iterate(handle, "train", config.train.batch_size, order_seed, only=only):
                orders.append(batch.indices)
                try:
                    components = baseline_step(policy, Tensors.from_batch(batch), optimizer, weights, generator)
                except _Diverged as err:
                    _fail(stage, epoch, batch, err, snapshot(epoch), diagnostic_path)
                components["overall"] = weighted_overall(components, weights)
                means.add(components, len(batch.indices))
            history.record(epoch, "train", {"cell": key, **means.means()})
            history.record(
                epoch, "validation", {"cell": key, **validation_losses(policy, handle, config, only)}
            )

    return snapshot(config.train.epochs)


def load_policies(checkpoint: Checkpoint, config: RunConfig) -> Dict[str, VisuomotorPolicy]:
    """Every policy in a checkpoint, keyed `policy` or by (task, object) cell."""
    policies = {}
    for name in sorted(checkpoint.state):
        policy = VisuomotorPolicy(config, checkpoint.variant)
        try:
            checkpoint.load_into(name, policy)
        except RuntimeError as err:
            raise CompatibilityError(f"parameters of `{name}` do not fit this config ({err})") from err
        policy.eval()
        policies[name] = policy
    return policies


def finetune_motor(
    checkpoint: Checkpoint,
    handle: DatasetHandle,
    config: RunConfig,
    seed: int,
    diagnostic_path: Optional[str] = None,
) -> Checkpoint:
    """
    Train only the motor nets on L_motor with z the frozen encoder's mean. Vision
    parameters are left untouched.
    """
    seed_everything(derive_seed(seed, "finetune"))
    policies = load_policies(checkpoint, config)
    history = LossHistory("finetune_motor")
    cells = _baseline_cells(handle)

    def snapshot(epoch: int) -> Checkpoint:
        return Checkpoint.from_modules(
            "policy",
            config.to_dict(),
            policies,
            epoch=checkpoint.epoch,
            variant=checkpoint.variant,
            history=list(checkpoint.history) + list(history.records),
            extra={**checkpoint.extra, "finetune_epochs": epoch},
        )

    for name, policy in policies.items():
        only = cells.get(name) if name != TFA_MODULE else None
        for parameter in policy.vision.parameters():
            parameter.requires_grad_(False)
        policy.vision.eval()
        policy.motor.train()
        optimizer = torch.optim.Adam(policy.motor.parameters(), lr=config.train.finetune_learning_rate)
        history.record(0, "validation", {"cell": name, **validation_losses(policy, handle, config, only)})
        for epoch in range(1, config.train.finetune_epochs + 1):
            means = RunningMeans()
            order_seed = derive_seed(seed, "finetune", epoch)
            for batch in iterate(handle, "train", config.train.batch_size, order_seed, only=only):
                data = Tensors.from_batch(batch)
                b, t = data.valid.shape
                with torch.no_grad():
                    s = data.s if policy.vision.conditioned else None
                    c = data.c if policy.vision.conditioned else None
                    encoding, _, _ = policy.latent(data.frames, s, c)
                mixture, _ = policy.motor(encoding.mu.view(b, t, -1))
                loss = mdn_loss(mixture, data.targets, data.valid)
                try:
                    floats = _check({"motor": loss})
                except _Diverged as err:
                    _fail("finetune_motor", epoch, batch, err, snapshot(epoch), diagnostic_path)
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
                means.add(floats, len(batch.indices))
            history.record(epoch, "train", {"cell": name, **means.means()})
            history.record(
                epoch, "validation", {"cell": name, **validation_losses(policy, handle, config, only)}
            )
        policy.eval()

    return snapshot(config.train.finetune_epochs)


def policy_history(checkpoint: Checkpoint) -> LossHistory:
    return LossHistory(stage=checkpoint.kind, records=list(checkpoint.history))


def split_components(record: Dict[str, float]) -> Tuple[float, Dict[str, float]]:
    """The overall loss of a history record and its components."""
    components = {k: v for k, v in record.items() if k not in ("stage", "epoch", "split", "cell", "overall")}
    return record["overall"], components
