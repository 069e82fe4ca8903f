import math

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import digamma, gammaln

from delivery_detect.evidential import (EVIDENCE_KINDS, LossConfig, avu, avu_from_counts,
                                        calibration_loss, dirichlet_stats, evidence,
                                        kl_regularizer, kl_weight, lambda_schedule, nll_loss,
                                        total_loss)

D = torch.float64


def t(*rows):
    return torch.tensor(rows, dtype=D)


def test_evidence_functions():
    assert evidence(t([-1.0, 3.0]), "relu").tolist() == [[0.0, 3.0]]
    assert evidence(t([0.0, 0.0]), "softplus").numpy() == pytest.approx(np.log(2.0), abs=1e-12)
    assert evidence(t([0.0, 1.0]), "exp").numpy() == pytest.approx(np.array([[1.0, math.e]]))
    assert evidence(t([50.0]), "exp").item() == pytest.approx(math.exp(10.0))
    with pytest.raises(ValueError):
        evidence(t([0.0]), "sigmoid")


def test_dirichlet_stats_examples():
    d = dirichlet_stats(t([0.0, 0.0]))
    assert d.alpha.tolist() == [[1.0, 1.0]] and d.uncertainty.item() == 1.0
    assert d.prob.tolist() == [[0.5, 0.5]]

    d = dirichlet_stats(t([3.0, 1.0]))
    assert d.strength.item() == 6.0
    assert d.uncertainty.item() == pytest.approx(1 / 3, abs=1e-12)
    assert d.belief.numpy() == pytest.approx(np.array([[0.5, 1 / 6]]))
    assert d.prob.numpy() == pytest.approx(np.array([[2 / 3, 1 / 3]]))
    assert d.pred.item() == 0 and d.p_pred.item() == pytest.approx(2 / 3)

    d = dirichlet_stats(t([9.0, 9.0]))
    assert d.uncertainty.item() == pytest.approx(0.1)
    assert d.pred.item() == 0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1e4), min_size=2, max_size=6))
def test_mass_invariants(e):
    d = dirichlet_stats(torch.tensor(e, dtype=D))
    assert d.uncertainty.item() + d.belief.sum().item() == pytest.approx(1.0, abs=1e-9)
    assert d.prob.sum().item() == pytest.approx(1.0, abs=1e-9)
    assert 0 < d.uncertainty.item() <= 1


def test_uncertainty_decreases_with_evidence():
    us = [dirichlet_stats(t([s, s / 2])).uncertainty.item() for s in np.linspace(0, 50, 30)]
    assert all(a > b for a, b in zip(us, us[1:]))


def test_nll_examples():
    y = torch.tensor([0])
    d = dirichlet_stats(t([3.0, 1.0]))
    assert nll_loss(d, y).item() == pytest.approx(math.log(1.5), abs=1e-6)
    assert nll_loss(dirichlet_stats(t([0.0, 0.0])), y).item() == pytest.approx(math.log(2), abs=1e-6)
    assert nll_loss(d, y, 1.0).item() == pytest.approx(math.log(1.5) / 3, abs=1e-6)
    assert nll_loss(d, torch.tensor([[1, 0]])).item() == pytest.approx(math.log(1.5))
    with pytest.raises(ValueError):
        nll_loss(d, torch.tensor([[1, 1]]))


def test_nll_literal_identity():
    rng = np.random.default_rng(0)
    for _ in range(20):
        e = rng.uniform(0, 10, 4)
        y = int(rng.integers(4))
        a = e + 1
        want = math.log(a.sum()) - math.log(a[y])
        got = nll_loss(dirichlet_stats(torch.tensor(e)), torch.tensor([y])).item()
        assert got == pytest.approx(want, rel=1e-12)


def kl_oracle(a):
    """KL(Dir(a) || Dir(1)) from scipy special functions."""
    a = np.asarray(a, float)
    K, S = a.size, a.sum()
    return gammaln(S) - gammaln(K) - gammaln(a).sum() + ((a - 1) * (digamma(a) - digamma(S))).sum()


def test_kl_examples():
    y = torch.tensor([0])
    assert kl_regularizer(t([7.0, 0.0]), y).item() == pytest.approx(0.0, abs=1e-12)
    assert kl_regularizer(t([7.0, 1.0]), y).item() == pytest.approx(0.1931, abs=1e-4)
    assert kl_regularizer(t([7.0, 1.0]), y).item() == pytest.approx(math.log(2) - 0.5, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 20), min_size=2, max_size=5), st.integers(0, 4))
def test_kl_matches_scipy_and_nonnegative(e, y):
    y = y % len(e)
    a = np.array(e) + 1
    a[y] = 1
    got = kl_regularizer(torch.tensor(e, dtype=D), torch.tensor([y])).item()
    assert got == pytest.approx(kl_oracle(a), abs=1e-9)
    assert got >= -1e-12


def test_calibration_examples():
    # accurate: class 0 predicted with p=0.9, u=0.1 (K=2 -> S=20 -> alpha=(18, 2))
    d = dirichlet_stats(t([17.0, 1.0]))
    assert d.p_pred.item() == pytest.approx(0.9) and d.uncertainty.item() == pytest.approx(0.1)
    got = calibration_loss(d, torch.tensor([0]), 0.5).item()
    assert got == pytest.approx(-0.5 * 0.9 * math.log(0.9), abs=1e-6)
    assert got == pytest.approx(0.0474, abs=1e-4)
    # inaccurate: p=0.6, u=0.5 -> S=4, alpha=(2.4, 1.6)
    d = dirichlet_stats(t([1.4, 0.6]))
    got = calibration_loss(d, torch.tensor([1]), 0.5).item()
    assert got == pytest.approx(-0.5 * 0.4 * math.log(0.5), abs=1e-6)
    assert got == pytest.approx(0.1386, abs=1e-4)
    # confident and correct: vanishing penalty
    d = dirichlet_stats(t([1e9, 0.0]))
    assert calibration_loss(d, torch.tensor([0]), 1.0).item() < 1e-8


def test_lambda_schedule():
    assert lambda_schedule(0, 50) == pytest.approx(0.01)
    assert lambda_schedule(50, 50) == pytest.approx(1.0)
    assert lambda_schedule(25, 50) == pytest.approx(0.1)
    vals = [lambda_schedule(n, 50) for n in range(51)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    for bad in (0.0, 1.0, 1.5):
        with pytest.raises(ValueError):
            lambda_schedule(1, 10, bad)
    with pytest.raises(ValueError):
        lambda_schedule(11, 10)


def test_avu():
    assert avu_from_counts(8, 1, 1, 2) == pytest.approx(10 / 12)
    u = [0.1] * 8 + [0.9] + [0.1] + [0.9] * 2
    pred = [1] * 8 + [1] + [0] + [0] * 2
    lab = [1] * 8 + [1] + [1] + [1] * 2
    r = avu(u, pred, lab)
    assert (r["n_AC"], r["n_AU"], r["n_IC"], r["n_IU"]) == (8, 1, 1, 2)
    assert r["AvU"] == pytest.approx(10 / 12, abs=1e-6)
    assert avu([0.1] * 3, [1] * 3, [1] * 3)["AvU"] == 1.0
    assert avu([0.1] * 3, [0] * 3, [1] * 3)["AvU"] == 0.0
    with pytest.raises(ValueError):
        avu([], [], [])


def test_total_loss_composition():
    h = t([0.3, -1.2])
    y = torch.tensor([1])
    assert kl_weight(0) == 0 and kl_weight(10) == 1 and kl_weight(25) == 1
    br0 = total_loss(h, y, 0, 20)
    assert br0.rho_n == 0.0 and br0.total.item() == pytest.approx(br0.nll.item() + br0.cal.item())
    br = total_loss(h, y, 12, 20)
    e = evidence(h, "softplus")
    d = dirichlet_stats(e)
    want = (nll_loss(d, y, 1.0) + kl_regularizer(e, y) + calibration_loss(d, y, lambda_schedule(12, 20)))
    assert br.total.item() == pytest.approx(want.item(), rel=1e-12)
    assert br.rho_n == 1.0


@pytest.mark.parametrize("kind", EVIDENCE_KINDS)
def test_gradient_finite_difference(kind):
    torch.manual_seed(0)
    h = torch.randn(4, 2, dtype=D) * 0.8 + 0.5
    y = torch.tensor([0, 1, 1, 0])
    h.requires_grad_(True)
    total_loss(h, y, 12, 20, LossConfig(evidence=kind)).total.backward()
    eps = 1e-5
    num = torch.zeros_like(h)
    with torch.no_grad():
        for idx in np.ndindex(*h.shape):
            hp, hm = h.clone(), h.clone()
            hp[idx] += eps
            hm[idx] -= eps
            num[idx] = (total_loss(hp, y, 12, 20, LossConfig(evidence=kind)).total
                        - total_loss(hm, y, 12, 20, LossConfig(evidence=kind)).total) / (2 * eps)
    rel = (h.grad - num).norm() / num.norm()
    assert rel < 1e-4
