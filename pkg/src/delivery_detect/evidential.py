"""Evidential (Dirichlet) classification head and its training objective.

All tensor functions take a leading batch dimension: raw outputs and
evidence are (B, K), labels are one-hot (B, K) or integer (B,).
"""
import math
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F

EPS = 1e-12
EVIDENCE_KINDS = ("relu", "exp", "softplus")


def evidence(h, kind="softplus"):
    """Non-negative evidence from raw outputs; ``exp`` input is clamped at 10."""
    if kind == "relu":
        return F.relu(h)
    if kind == "exp":
        return torch.exp(torch.clamp(h, max=10.0))
    if kind == "softplus":
        return F.softplus(h)
    raise ValueError(f"unknown evidence kind {kind!r}; choose from {EVIDENCE_KINDS}")


@dataclass
class DirichletOutput:
    alpha: torch.Tensor
    strength: torch.Tensor  # S
    belief: torch.Tensor
    uncertainty: torch.Tensor  # u = K / S
    prob: torch.Tensor  # expected class probabilities alpha / S
    pred: torch.Tensor  # argmax, lowest index on ties
    p_pred: torch.Tensor  # max probability

    @property
    def num_classes(self):
        return self.alpha.shape[-1]


def dirichlet_stats(e):
    e = torch.as_tensor(e)
    if e.dim() == 1:
        e = e.unsqueeze(0)
    alpha = e + 1.0
    S = alpha.sum(dim=-1, keepdim=True)
    K = alpha.shape[-1]
    prob = alpha / S
    # torch.max returns the first maximal index
    p_pred, pred = prob.max(dim=-1)
    return DirichletOutput(alpha=alpha, strength=S.squeeze(-1), belief=e / S,
                           uncertainty=K / S.squeeze(-1), prob=prob, pred=pred, p_pred=p_pred)


def one_hot(y, K):
    y = torch.as_tensor(y)
    if y.dim() == 2:
        ok = ((y == 0) | (y == 1)).all() and (y.sum(dim=-1) == 1).all() and y.shape[-1] == K
        if not ok:
            raise ValueError("labels must be one-hot")
        return y
    if y.dim() == 1 and not y.is_floating_point():
        if (y < 0).any() or (y >= K).any():
            raise ValueError("class index out of range")
        return F.one_hot(y, K)
    raise ValueError("labels must be class indices (B,) or one-hot (B, K)")


def nll_loss(d, y, focal_gamma=0.0):
    """Per-sample ``(1 - p_true)^gamma * sum_i y_i (log S - log alpha_i)``."""
    yh = one_hot(y, d.num_classes).to(d.alpha.dtype)
    log_alpha = torch.log(torch.clamp(d.alpha, min=EPS))
    log_S = torch.log(torch.clamp(d.strength, min=EPS)).unsqueeze(-1)
    base = (yh * (log_S - log_alpha)).sum(dim=-1)
    if focal_gamma == 0:
        return base
    p_true = (yh * d.prob).sum(dim=-1)
    return (1.0 - p_true) ** focal_gamma * base


def kl_to_uniform(alpha):
    """KL(Dir(alpha) || Dir(1, ..., 1)), closed form, over the last axis."""
    a = torch.as_tensor(alpha)
    K = a.shape[-1]
    S = a.sum(dim=-1)
    first = torch.lgamma(S) - math.lgamma(K) - torch.lgamma(a).sum(dim=-1)
    second = ((a - 1) * (torch.digamma(a) - torch.digamma(S).unsqueeze(-1))).sum(dim=-1)
    return first + second


def kl_regularizer(e, y):
    """KL(Dir(alpha_tilde) || Dir(1)) with the true-class evidence removed."""
    e = torch.as_tensor(e)
    if e.dim() == 1:
        e = e.unsqueeze(0)
    yh = one_hot(y, e.shape[-1]).to(e.dtype)
    return kl_to_uniform(yh + (1 - yh) * (e + 1))


def calibration_loss(d, y, lambda_n):
    """Per-sample: confident-when-right, uncertain-when-wrong penalty weighted by ``lambda_n``."""
    yi = torch.as_tensor(y)
    if yi.dim() == 2:
        yi = yi.argmax(dim=-1)
    right = (d.pred == yi).to(d.alpha.dtype)
    p, u = d.p_pred, d.uncertainty
    acc_term = -lambda_n * right * p * torch.log(torch.clamp(1 - u, min=EPS))
    inacc_term = -(1 - lambda_n) * (1 - right) * (1 - p) * torch.log(torch.clamp(u, min=EPS))
    return acc_term + inacc_term


def lambda_schedule(n, N, lambda_0=0.01):
    """Exponentially increasing weight: ``lambda_0`` at n=0, 1 at n=N."""
    if not 0.0 < lambda_0 < 1.0:
        raise ValueError("lambda_0 must lie in (0, 1)")
    if not 0 <= n <= N:
        raise ValueError(f"epoch {n} outside [0, {N}]")
    return lambda_0 * math.exp(-math.log(lambda_0) * n / N)


def kl_weight(n, anneal_epochs=10):
    return min(1.0, n / anneal_epochs)


@dataclass
class LossBreakdown:
    nll: torch.Tensor
    kl: torch.Tensor
    cal: torch.Tensor
    rho_n: float
    lambda_n: float
    total: torch.Tensor

    def as_floats(self):
        return {"nll": self.nll.item(), "kl": self.kl.item(), "cal": self.cal.item(),
                "rho_n": self.rho_n, "lambda_n": self.lambda_n, "total": self.total.item()}


@dataclass(frozen=True)
class LossConfig:
    evidence: str = "softplus"
    focal_gamma: float = 1.0
    lambda_0: float = 0.01
    kl_anneal_epochs: int = 10
    use_kl: bool = True
    use_calibration: bool = True


def total_loss(h, y, epoch, total_epochs, config=LossConfig()):
    """Batch-mean of nll + rho_n * kl + cal on raw outputs ``h``."""
    e = evidence(h, config.evidence)
    d = dirichlet_stats(e)
    rho = kl_weight(epoch, config.kl_anneal_epochs) if config.use_kl else 0.0
    lam = lambda_schedule(epoch, total_epochs, config.lambda_0)
    nll = nll_loss(d, y, config.focal_gamma).mean()
    kl = kl_regularizer(e, y).mean() if config.use_kl else torch.zeros((), dtype=h.dtype)
    cal = calibration_loss(d, y, lam).mean() if config.use_calibration else torch.zeros((), dtype=h.dtype)
    return LossBreakdown(nll=nll, kl=kl, cal=cal, rho_n=rho, lambda_n=lam, total=nll + rho * kl + cal)


def cross_entropy_loss(h, y, focal_gamma=0.0):
    """Softmax cross-entropy baseline objective (optionally focal)."""
    yi = torch.as_tensor(y)
    if yi.dim() == 2:
        yi = yi.argmax(dim=-1)
    logp = F.log_softmax(h, dim=-1).gather(1, yi.unsqueeze(1)).squeeze(1)
    if focal_gamma:
        return (-(1 - logp.exp()) ** focal_gamma * logp).mean()
    return (-logp).mean()


def avu(uncertainty, pred, labels, u_threshold=0.5):
    """Accuracy-versus-uncertainty counts; confident means ``u < u_threshold``."""
    u = np.asarray(uncertainty, dtype=float)
    pred = np.asarray(pred)
    labels = np.asarray(labels)
    if u.size == 0:
        raise ValueError("empty batch")
    if not (u.shape == pred.shape == labels.shape):
        raise ValueError("inputs must have equal length")
    acc = pred == labels
    conf = u < u_threshold
    counts = {
        "n_AC": int(np.sum(acc & conf)),
        "n_AU": int(np.sum(acc & ~conf)),
        "n_IC": int(np.sum(~acc & conf)),
        "n_IU": int(np.sum(~acc & ~conf)),
    }
    counts["AvU"] = (counts["n_AC"] + counts["n_IU"]) / u.size
    return counts


def avu_from_counts(n_AC, n_AU, n_IC, n_IU):
    return (n_AC + n_IU) / (n_AC + n_AU + n_IC + n_IU)


def avu_dirichlet(d, labels, u_threshold=0.5):
    return avu(d.uncertainty.detach().cpu().numpy(), d.pred.cpu().numpy(),
               np.asarray(labels), u_threshold)
