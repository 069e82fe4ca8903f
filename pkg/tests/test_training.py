import json
import math

import numpy as np
import pytest
import torch

from delivery_detect.backbone import build_model
from delivery_detect.dataset import AugmentConfig
from delivery_detect.dataset.corpus import EventClipSet
from delivery_detect.training import (NonFiniteLossError, TrainConfig, TrainState, collate,
                                      compute_loss, fit, lr_at, schedules_at, train_epoch)

REF = TrainConfig()
QUICK = dict(epochs=1, warmup_epochs=0, decay_epochs=(), batch_size=4, width_mult=0.35)


def test_lr_schedule_values():
    assert [lr_at(n) for n in range(5)] == pytest.approx([1e-4, 2e-4, 3e-4, 4e-4, 5e-4])
    assert lr_at(5) == pytest.approx(5e-4)
    assert lr_at(19) == pytest.approx(5e-4)
    assert lr_at(20) == pytest.approx(5e-5)
    assert lr_at(40) == pytest.approx(5e-6)
    assert lr_at(49) == pytest.approx(5e-6)
    with pytest.raises(ValueError):
        lr_at(50)
    nowarm = TrainConfig(epochs=3, warmup_epochs=0, decay_epochs=())
    assert lr_at(0, nowarm) == 5e-4


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(decay_epochs=(40, 20))
    with pytest.raises(ValueError):
        TrainConfig(epochs=10, decay_epochs=(3, 12))
    with pytest.raises(ValueError):
        TrainConfig(objective="hinge")
    cfg = TrainConfig.from_dict({"epochs": 3, "decay_epochs": [2], "warmup_epochs": 1, "junk": 1})
    assert cfg.decay_epochs == (2,) and cfg.epochs == 3


def test_schedules_coupled_to_epoch():
    s0, s_last = schedules_at(0, REF), schedules_at(49, REF)
    assert s0["alpha"] == 1.0 and s0["rho_n"] == 0.0
    assert s0["lambda_n"] == pytest.approx(0.01)
    assert schedules_at(10, REF)["rho_n"] == 1.0
    assert s_last["lambda_n"] == pytest.approx(0.01 ** (1 - 49 / 50))
    plain = TrainConfig(excitation=False, use_kl=False)
    assert schedules_at(0, plain)["alpha"] == 0.0 and schedules_at(20, plain)["rho_n"] == 0.0


def test_cross_entropy_objective_breakdown():
    h = torch.tensor([[2.0, -1.0], [0.0, 0.5]])
    loss, parts = compute_loss(h, torch.tensor([0, 1]), 0, TrainConfig(objective="cross_entropy",
                                                                      focal_gamma=0.0))
    assert loss.item() == pytest.approx(torch.nn.functional.cross_entropy(h, torch.tensor([0, 1])).item())
    assert parts["kl"] == 0.0 and parts["total"] == pytest.approx(loss.item())


def test_clip_norm_bounds_update():
    torch.manual_seed(0)
    model = torch.nn.Sequential(torch.nn.Linear(4, 8), torch.nn.ReLU(), torch.nn.Linear(8, 2))
    x, y = torch.randn(16, 4) * 100, torch.randint(0, 2, (16,))
    loss, _ = compute_loss(model(x), y, 0, REF)
    loss.backward()
    pre = torch.nn.utils.clip_grad_norm_(model.parameters(), REF.clip_norm).item()
    post = math.sqrt(sum(float(p.grad.pow(2).sum()) for p in model.parameters()))
    assert pre > REF.clip_norm
    assert post == pytest.approx(REF.clip_norm, rel=1e-5)


@pytest.fixture(scope="module")
def train_set(tiny_corpus):
    return EventClipSet(tiny_corpus, tiny_corpus.labeled_events("train"), True, 0, AugmentConfig())


@pytest.fixture(scope="module")
def val_set(tiny_corpus):
    return EventClipSet(tiny_corpus, tiny_corpus.labeled_events("val"), False, 0)


def _first_loss(train_set, cfg):
    torch.manual_seed(cfg.seed)
    model = build_model(cfg.width_mult, 2, supports_excitation=cfg.excitation)
    x, y, _, _ = collate([train_set.get(i, 0) for i in range(min(4, len(train_set)))])
    model.train()
    return compute_loss(model(x), y, 0, cfg)[1]["total"]


def test_same_seed_same_first_loss(train_set):
    cfg = TrainConfig(**QUICK)
    assert _first_loss(train_set, cfg) == _first_loss(train_set, cfg)
    assert train_set.get(0, 3).tensor.tobytes() == train_set.get(0, 3).tensor.tobytes()


def test_fit_writes_run_dir(tmp_path, tiny_corpus, train_set, val_set):
    cfg = TrainConfig(**QUICK)
    res = fit(cfg, tiny_corpus, tmp_path, train_set=train_set, val_set=val_set)
    for name in ("best.pt", "best.json", "last.pt", "last.json", "state.pt", "train_log.jsonl"):
        assert (tmp_path / name).exists(), name
    steps = [json.loads(line) for line in open(tmp_path / "train_log.jsonl")]
    assert len(steps) == res["steps"] == math.ceil(len(train_set) / 4)
    assert {"nll", "kl", "cal", "rho_n", "lambda_n", "total", "grad_norm"} <= set(steps[0])
    epoch = json.loads(open(tmp_path / "epochs.jsonl").readline())
    assert epoch["alpha"] == 1.0 and epoch["lr"] == pytest.approx(5e-4)
    side = json.loads(open(tmp_path / "best.json").read())
    assert side["epoch"] == 0 and side["schedule"]["alpha"] == 1.0


def test_resume_matches_uninterrupted_run(tmp_path, tiny_corpus, train_set, val_set):
    two = TrainConfig(**dict(QUICK, epochs=2))
    full = fit(two, tiny_corpus, tmp_path / "a", train_set=train_set, val_set=val_set)
    one = fit(TrainConfig(**QUICK), tiny_corpus, tmp_path / "b", train_set=train_set, val_set=val_set)
    resumed = fit(two, tiny_corpus, tmp_path / "b", resume=True, train_set=train_set, val_set=val_set)
    assert one["steps"] * 2 == resumed["steps"] == full["steps"]
    a = torch.load(tmp_path / "a" / "last.pt", weights_only=True)
    b = torch.load(tmp_path / "b" / "last.pt", weights_only=True)
    assert all(torch.equal(a[k], b[k]) for k in a)
    assert len(open(tmp_path / "b" / "epochs.jsonl").readlines()) == 2


def test_loss_decreases_on_repeated_batch(train_set):
    torch.manual_seed(0)
    cfg = TrainConfig(**dict(QUICK, augment=False))
    model = build_model(cfg.width_mult, 2)
    opt = torch.optim.AdamW(model.parameters(), lr=1e-3, weight_decay=cfg.weight_decay)
    x, y, _, _ = collate([train_set.get(i, 0) for i in range(min(6, len(train_set)))])
    losses = []
    model.train()
    for _ in range(15):
        loss, _ = compute_loss(model(x), y, 0, cfg)
        opt.zero_grad()
        loss.backward()
        torch.nn.utils.clip_grad_norm_(model.parameters(), cfg.clip_norm)
        opt.step()
        losses.append(loss.item())
    assert np.mean(losses[-3:]) < losses[0]


def test_non_finite_loss_aborts_with_dump(tmp_path, train_set):
    cfg = TrainConfig(**dict(QUICK, excitation=False))
    model = build_model(cfg.width_mult, 2, supports_excitation=False)
    with torch.no_grad():
        next(model.parameters()).fill_(float("nan"))
    opt = torch.optim.AdamW(model.parameters(), lr=1e-3)
    with pytest.raises(NonFiniteLossError):
        train_epoch(model, opt, train_set, TrainState(), cfg, tmp_path)
    dumps = list(tmp_path.glob("nonfinite_batch_*.json"))
    assert len(dumps) == 1
    assert json.loads(dumps[0].read_text())["event_ids"]
