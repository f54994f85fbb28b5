import os
import sys

sys.path.insert(1, os.path.join(sys.path[0], ".."))

import pytest
import torch

from heed.exceptions import ShapeError
from heed.models.losses import loss_attention_reconstruction
from heed.models.losses import loss_cycle
from heed.models.losses import loss_fake
from heed.models.losses import loss_feature_matching
from heed.models.losses import loss_noise
from heed.models.losses import loss_prior
from heed.models.losses import loss_real
from heed.models.losses import loss_reconstruction
from heed.models.policy import VisuomotorPolicy
from heed.models.vision import VisionNet
from heed.models.vision import rasterize_map
from tests.finite_differences import check_parameter_gradients
from tests.tiny import tiny_config


def _net(variant="tfa_full"):
    torch.manual_seed(0)
    return VisionNet(32, n=6, m=4, d_z=8, width=4, grid=4, variant=variant)


def _objects(batch=2):
    s = torch.zeros(batch, 6)
    s[:, 1] = 1.0
    c = torch.zeros(batch, 4)
    c[:, 0] = 1.0
    return s, c


def test_encode_generate_discriminate():
    net = _net()
    s, c = _objects()
    x = torch.rand(2, 32, 32, 3)
    encoding = net.encode(x, s, c)
    assert encoding.mu.shape == encoding.log_var.shape == encoding.sample.shape == (2, 8)
    out = net.generate(encoding.sample, s, c)
    assert out.x_prime.shape == (2, 32, 32, 3)
    assert bool(((out.x_prime >= 0) & (out.x_prime <= 1)).all())
    assert out.p_prime.shape == (2, 16)
    assert torch.allclose(out.p_prime.sum(dim=-1), torch.ones(2))
    judged = net.discriminate(x, out.p_prime)
    assert judged.shape_logits.shape == (2, 7)
    assert judged.color_logits.shape == (2, 5)
    assert judged.features.shape[0] == 2


def test_seeded_sampling():
    net = _net()
    s, c = _objects(1)
    x = torch.rand(1, 32, 32, 3)
    a = net.encode(x, s, c, torch.Generator().manual_seed(5))
    b = net.encode(x, s, c, torch.Generator().manual_seed(5))
    assert torch.equal(a.sample, b.sample)
    assert torch.allclose(a.sample, a.mu + torch.exp(0.5 * a.log_var) * a.epsilon)


def test_reconstruct_uses_the_mean():
    net = _net()
    s, c = _objects(1)
    x = torch.rand(1, 32, 32, 3)
    mu = net.encode(x, s, c).mu
    assert torch.equal(net.reconstruct(x, s, c).x_prime, net.generate(mu, s, c).x_prime)


def test_conditioning_is_required():
    with pytest.raises(ShapeError):
        _net().encode(torch.rand(1, 32, 32, 3))


def test_baseline_has_no_discriminator():
    net = _net("baseline_no_tfa")
    assert net.discriminator is None
    assert not net.conditioned
    out = net.reconstruct(torch.rand(2, 32, 32, 3))
    assert out.p_prime is None
    groups = VisuomotorPolicy(tiny_config(), "baseline_no_tfa").parameter_groups()
    assert "discriminator" not in groups
    assert "discriminator" in VisuomotorPolicy(tiny_config(), "tfa_full").parameter_groups()


def test_vision_loss_gradients_on_a_miniature_net():
    torch.manual_seed(4)
    net = VisionNet(8, n=2, m=2, d_z=4, width=2, grid=2).double()
    x = torch.rand(2, 8, 8, 3, dtype=torch.float64)
    s = torch.eye(2, dtype=torch.float64)
    c = torch.eye(2, dtype=torch.float64).flip(0)
    p_teacher = torch.softmax(torch.randn(2, 4, dtype=torch.float64), dim=-1)
    prior = torch.randn(2, 4, dtype=torch.float64)
    shape_ids = torch.tensor([0, 1])
    color_ids = torch.tensor([1, 0])

    def loss():
        encoding = net.encode(x, s, c, torch.Generator().manual_seed(0))
        rebuilt = net.generate(encoding.sample, s, c)
        dreamt = net.generate(prior, s, c)
        real = net.discriminate(x, p_teacher)
        fake = net.discriminate(rebuilt.x_prime, rebuilt.p_prime)
        noise = net.discriminate(dreamt.x_prime, dreamt.p_prime)
        mu_again, _ = net.encoder(rebuilt.x_prime, s, c)
        return (
            loss_real(real.shape_logits, real.color_logits, shape_ids, color_ids)
            + loss_fake(fake.shape_logits, fake.color_logits)
            + loss_noise(noise.shape_logits, noise.color_logits)
            + loss_feature_matching(real.features, fake.features, "batch")
            + loss_feature_matching(real.features, fake.features, "pair")
            + loss_reconstruction(rebuilt.x_prime, x)
            + loss_prior(encoding.mu, encoding.log_var)
            + loss_attention_reconstruction(rebuilt.p_prime, p_teacher)
            + loss_cycle(mu_again, encoding.sample)
        )

    assert check_parameter_gradients(net, loss) >= len(list(net.parameters()))


def test_wrong_latent_width():
    with pytest.raises(ShapeError):
        _net().generate(torch.randn(1, 7), *_objects(1))


def test_wrong_attention_width():
    with pytest.raises(ShapeError):
        _net().discriminate(torch.rand(1, 32, 32, 3), torch.full((1, 9), 1 / 9))


def test_rasterize_map():
    p = torch.arange(4, dtype=torch.float32).view(1, 4)
    image = rasterize_map(p, grid=2, image_size=4)
    assert image.shape == (1, 1, 4, 4)
    assert image[0, 0].tolist() == [[0, 0, 1, 1], [0, 0, 1, 1], [2, 2, 3, 3], [2, 2, 3, 3]]


def test_policy_latent_sequence():
    config = tiny_config()
    policy = VisuomotorPolicy(config)
    frames = torch.rand(2, 3, 32, 32, 3)
    s, c = _objects(2)
    encoding, s_flat, c_flat = policy.latent(frames, s, c)
    assert encoding.mu.shape == (6, config.vision.d_z)
    assert s_flat.shape == (6, 6)
    assert torch.equal(s_flat[0], s_flat[2])


if __name__ == "__main__":  # pragma: no cover
    from tests import run_tests

    run_tests()
