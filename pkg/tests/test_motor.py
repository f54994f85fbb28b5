import os
import sys

sys.path.insert(1, os.path.join(sys.path[0], ".."))

import math

import numpy
import pytest
import torch

from heed.exceptions import ShapeError
from heed.models.motor import MixtureParams
from heed.models.motor import MotorNet
from heed.models.motor import mdn_loss
from heed.models.motor import mdn_sample
from tests.finite_differences import check_parameter_gradients


def _net():
    torch.manual_seed(0)
    return MotorNet(d_z=6, hidden=8, components=3, joints=4)


def test_mixture_shapes():
    mixture, state = _net()(torch.randn(2, 5, 6))
    assert mixture.alpha.shape == (2, 5, 3)
    assert mixture.mu.shape == (2, 5, 3, 4)
    assert mixture.sigma.shape == (2, 5, 3)
    assert torch.allclose(mixture.alpha.sum(dim=-1), torch.ones(2, 5))
    assert bool((mixture.sigma > 0).all())
    assert len(state) == 3


def test_stepping_with_state_matches_the_whole_sequence():
    net = _net()
    z = torch.randn(1, 6, 6)
    whole, _ = net(z)
    state = None
    for t in range(6):
        step, state = net(z[:, t : t + 1], state)
        assert torch.allclose(step.mu[0, 0], whole.mu[0, t], atol=1e-6)
        assert torch.allclose(step.alpha[0, 0], whole.alpha[0, t], atol=1e-6)


def test_wrong_latent_width():
    with pytest.raises(ShapeError):
        _net()(torch.randn(1, 3, 5))


def test_mdn_loss_matches_a_loop():
    rng = numpy.random.default_rng(0)
    for _ in range(100):
        components = int(rng.integers(1, 5))
        joints = int(rng.integers(1, 5))
        weights = rng.random(components) + 0.05
        alpha = torch.tensor(weights / weights.sum()).view(1, 1, components)
        mu = torch.tensor(rng.normal(size=(1, 1, components, joints)))
        sigma = torch.tensor(rng.uniform(0.3, 2.0, size=(1, 1, components)))
        target = torch.tensor(rng.normal(size=(1, 1, joints)))
        density = 0.0
        for i in range(components):
            s = float(sigma[0, 0, i])
            squared = sum((float(target[0, 0, j]) - float(mu[0, 0, i, j])) ** 2 for j in range(joints))
            density += float(alpha[0, 0, i]) * math.exp(-squared / (2 * s * s)) / (2 * math.pi * s * s) ** (joints / 2)
        loss = mdn_loss(MixtureParams(alpha=alpha, mu=mu, sigma=sigma), target)
        assert math.isclose(float(loss), -math.log(density), rel_tol=1e-9)


def test_single_component_loss_constants():
    for joints in (1, 3, 7):
        mu = torch.randn(1, 1, 1, joints, dtype=torch.float64)
        one = torch.ones(1, 1, 1, dtype=torch.float64)
        at_mean = MixtureParams(alpha=one, mu=mu, sigma=one)
        loss = float(mdn_loss(at_mean, mu[:, :, 0]))
        assert math.isclose(loss, joints / 2 * math.log(2 * math.pi), rel_tol=1e-12)
        wider = MixtureParams(alpha=at_mean.alpha, mu=mu, sigma=at_mean.sigma * 10)
        assert math.isclose(float(mdn_loss(wider, mu[:, :, 0])) - loss, joints * math.log(10), rel_tol=1e-9)


def test_mdn_loss_is_finite_far_from_the_means():
    alpha = torch.tensor([[[0.5, 0.5]]])
    mu = torch.zeros(1, 1, 2, 4)
    sigma = torch.full((1, 1, 2), 0.01)
    loss = mdn_loss(MixtureParams(alpha=alpha, mu=mu, sigma=sigma), torch.full((1, 1, 4), 1000.0))
    assert math.isfinite(float(loss))


def test_mdn_loss_ignores_padding():
    net = _net()
    mixture, _ = net(torch.randn(1, 4, 6))
    target = torch.randn(1, 4, 4)
    valid = torch.tensor([[True, True, False, False]])
    padded = target.clone()
    padded[0, 2:] = 1e6
    assert torch.allclose(mdn_loss(mixture, target, valid), mdn_loss(mixture, padded, valid))
    first_two = MixtureParams(alpha=mixture.alpha[:, :2], mu=mixture.mu[:, :2], sigma=mixture.sigma[:, :2])
    assert torch.allclose(mdn_loss(mixture, target, valid), mdn_loss(first_two, target[:, :2]), atol=1e-6)


def test_deterministic_sample_is_the_heaviest_mean():
    params = MixtureParams(
        alpha=torch.tensor([0.1, 0.7, 0.2]),
        mu=torch.tensor([[0.0, 0.0], [1.0, 2.0], [3.0, 4.0]]),
        sigma=torch.tensor([1.0, 1.0, 1.0]),
    )
    sample = mdn_sample(params, numpy.random.default_rng(0), deterministic=True)
    assert sample.tolist() == [1.0, 2.0]


def test_samples_follow_the_mixture():
    params = MixtureParams(
        alpha=torch.tensor([0.25, 0.75]),
        mu=torch.tensor([[-10.0], [10.0]]),
        sigma=torch.tensor([0.1, 0.1]),
    )
    draws = mdn_sample(params, numpy.random.default_rng(1), count=4000)
    assert draws.shape == (4000, 1)
    assert abs((draws[:, 0] > 0).mean() - 0.75) < 0.03
    single = mdn_sample(params, numpy.random.default_rng(1))
    assert single.shape == (1,)
    # the same seed gives the same draw
    assert numpy.array_equal(single, mdn_sample(params, numpy.random.default_rng(1)))


def test_sample_mean_is_the_mixture_mean():
    rng = numpy.random.default_rng(3)
    alpha = rng.random(3) + 0.1
    alpha = alpha / alpha.sum()
    mu = rng.normal(size=(3, 2)) * 2
    sigma = rng.uniform(0.2, 1.5, size=3)
    params = MixtureParams(alpha=torch.tensor(alpha), mu=torch.tensor(mu), sigma=torch.tensor(sigma))
    count = 100_000
    draws = mdn_sample(params, numpy.random.default_rng(4), count=count)
    mean = (alpha[:, None] * mu).sum(axis=0)
    variance = (alpha[:, None] * (sigma[:, None] ** 2 + mu**2)).sum(axis=0) - mean**2
    error = numpy.sqrt(variance / count)
    assert numpy.all(numpy.abs(draws.mean(axis=0) - mean) < 4 * error)


def test_zeroed_recurrence_leaves_a_linear_mean_head():
    net = _net().double()
    with torch.no_grad():
        for parameter in net.layers.parameters():
            parameter.zero_()

    def means(z):
        mixture, _ = net(z.view(1, 1, -1))
        return mixture.mu.reshape(-1)

    jacobian = torch.autograd.functional.jacobian(means, torch.randn(6, dtype=torch.float64))
    assert bool((jacobian != 0).any())
    assert torch.allclose(jacobian, net.mu.weight[:, : net.d_z].detach(), atol=1e-12)


def test_mixture_weights_and_widths_are_valid_everywhere():
    net = _net()
    with torch.no_grad():
        mixture, _ = net(torch.randn(100, 100, 6) * 5)
    assert torch.allclose(mixture.alpha.sum(dim=-1), torch.ones(100, 100), atol=1e-5)
    assert bool((mixture.sigma > 0).all())


def test_mdn_loss_gradients():
    net = _net().double()
    z = torch.randn(2, 3, 6, dtype=torch.float64)
    target = torch.randn(2, 3, 4, dtype=torch.float64)
    valid = torch.tensor([[True, True, True], [True, True, False]])

    def loss():
        mixture, _ = net(z)
        return mdn_loss(mixture, target, valid)

    assert check_parameter_gradients(net, loss) > 0


if __name__ == "__main__":  # pragma: no cover
    from tests import run_tests

    run_tests()
