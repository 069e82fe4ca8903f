import math

import pytest
import torch

from delivery_detect.evidential import cross_entropy_loss, dirichlet_stats, nll_loss

D = torch.float64


def test_gamma_zero_is_plain_nll():
    d = dirichlet_stats(torch.tensor([[5.0, 2.0], [0.5, 4.0]], dtype=D))
    y = torch.tensor([1, 1])
    assert torch.equal(nll_loss(d, y, 0.0), nll_loss(d, y))


def test_focal_modulation_arithmetic():
    d = dirichlet_stats(torch.tensor([[3.0, 1.0]], dtype=D))
    base = nll_loss(d, torch.tensor([0])).item()
    assert nll_loss(d, torch.tensor([0]), 1.0).item() == pytest.approx(base / 3)
    assert nll_loss(d, torch.tensor([0]), 2.0).item() == pytest.approx(base / 9)


def test_focal_downweights_easy_examples_more():
    easy = dirichlet_stats(torch.tensor([[30.0, 0.0]], dtype=D))
    hard = dirichlet_stats(torch.tensor([[1.0, 1.0]], dtype=D))
    y = torch.tensor([0])
    r_easy = nll_loss(easy, y, 1.0) / nll_loss(easy, y)
    r_hard = nll_loss(hard, y, 1.0) / nll_loss(hard, y)
    assert r_easy < r_hard


def test_modulating_factor_carries_gradient():
    h = torch.tensor([[0.7, 0.1]], dtype=D, requires_grad=True)
    d = dirichlet_stats(h.exp())
    nll_loss(d, torch.tensor([0]), 1.0).sum().backward()
    g_focal = h.grad.clone()
    h.grad = None
    d = dirichlet_stats(h.exp())
    p_true = d.prob[0, 0].detach()
    ((1 - p_true) * nll_loss(d, torch.tensor([0]))).sum().backward()
    assert not torch.allclose(g_focal, h.grad)


def test_softmax_cross_entropy_baseline():
    h = torch.tensor([[2.0, -1.0], [0.0, 0.5]], dtype=D)
    y = torch.tensor([0, 1])
    p = torch.softmax(h, -1)
    want = -(math.log(p[0, 0]) + math.log(p[1, 1])) / 2
    assert cross_entropy_loss(h, y).item() == pytest.approx(want)
    want_f = -((1 - p[0, 0]) * math.log(p[0, 0]) + (1 - p[1, 1]) * math.log(p[1, 1])) / 2
    assert cross_entropy_loss(h, y, 1.0).item() == pytest.approx(float(want_f))
