"""Optimization loop with epoch-coupled learning-rate, excitation and loss schedules.

Run directory layout::

    best.pt / best.json      weights and sidecar of the best validation F1
    last.pt / last.json      weights and sidecar after the latest epoch
    state.pt                 optimizer, RNG and counters for resuming
    train_log.jsonl          one record per optimizer step
    epochs.jsonl             one record per epoch (schedules, val metrics)
"""
import json
import logging
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np
import torch

from . import evaluation as ev
from .backbone import Excitation, alpha, build_model, save_checkpoint
from .dataset import AugmentConfig
from .dataset.corpus import EventClipSet
from .evidential import LossConfig, cross_entropy_loss, kl_weight, lambda_schedule, total_loss
from .inference import predict

log = logging.getLogger(__name__)

OBJECTIVES = ("evidential", "cross_entropy")


class NonFiniteLossError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    peak_lr: float = 5e-4
    warmup_epochs: int = 5
    decay_epochs: tuple = (20, 40)
    decay_factor: float = 0.1
    weight_decay: float = 5e-4
    clip_norm: float = 0.25
    batch_size: int = 32
    seed: int = 0
    lambda_0: float = 0.01
    focal_gamma: float = 1.0
    kl_anneal_epochs: int = 10
    evidence: str = "softplus"
    objective: str = "evidential"
    use_kl: bool = True
    use_calibration: bool = True
    excitation: bool = True
    excitation_layers: tuple = (1, 2)
    width_mult: float = 0.7
    augment: bool = True
    threshold: float = 0.5
    deterministic: bool = True

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if min(self.peak_lr, self.weight_decay, self.clip_norm, self.decay_factor) <= 0:
            raise ValueError("rates must be positive")
        if not 0 <= self.warmup_epochs <= self.epochs:
            raise ValueError("warmup_epochs must lie in [0, epochs]")
        decays = list(self.decay_epochs)
        if decays != sorted(decays) or any(not self.warmup_epochs < d < self.epochs for d in decays):
            raise ValueError("decay epochs must be increasing and fall between warmup and epochs")
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}")

    @classmethod
    def from_dict(cls, d, **overrides):
        names = {f.name for f in fields(cls)}
        d = {k: v for k, v in {**d, **overrides}.items() if k in names}
        for k in ("decay_epochs", "excitation_layers"):
            if k in d:
                d[k] = tuple(d[k])
        return cls(**d)

    def loss_config(self):
        return LossConfig(evidence=self.evidence, focal_gamma=self.focal_gamma,
                          lambda_0=self.lambda_0, kl_anneal_epochs=self.kl_anneal_epochs,
                          use_kl=self.use_kl, use_calibration=self.use_calibration)

    def to_json(self):
        d = asdict(self)
        d["decay_epochs"] = list(self.decay_epochs)
        d["excitation_layers"] = list(self.excitation_layers)
        return d


def lr_at(n, config=TrainConfig()):
    """Per-epoch learning rate: linear warmup to the peak, then step decays."""
    if not 0 <= n < config.epochs:
        raise ValueError(f"epoch {n} outside [0, {config.epochs})")
    if n < config.warmup_epochs:
        return config.peak_lr * (n + 1) / config.warmup_epochs
    k = sum(1 for d in config.decay_epochs if n >= d)
    return config.peak_lr * config.decay_factor ** k


def schedules_at(n, config):
    """Every schedule value consumed during epoch ``n``."""
    return {
        "epoch": n,
        "lr": lr_at(n, config),
        "alpha": alpha(n, config.epochs) if config.excitation else 0.0,
        "lambda_n": lambda_schedule(n, config.epochs, config.lambda_0),
        "rho_n": kl_weight(n, config.kl_anneal_epochs) if config.use_kl else 0.0,
    }


def set_determinism(seed, deterministic=True):
    torch.manual_seed(seed)
    if deterministic:
        torch.use_deterministic_algorithms(True, warn_only=True)
        torch.backends.cudnn.benchmark = False


def collate(samples):
    x = torch.from_numpy(np.stack([s.tensor for s in samples]))
    y = torch.tensor([s.label for s in samples], dtype=torch.long)
    return x, y, [s.boxes for s in samples], [s.event_id for s in samples]


def compute_loss(h, y, epoch, config):
    """(total, breakdown dict) for raw outputs ``h``."""
    if config.objective == "cross_entropy":
        loss = cross_entropy_loss(h, y, config.focal_gamma)
        zero = 0.0
        return loss, {"nll": float(loss), "kl": zero, "cal": zero, "rho_n": zero,
                      "lambda_n": zero, "total": float(loss)}
    br = total_loss(h, y, epoch, config.epochs, config.loss_config())
    return br.total, br.as_floats()


@dataclass
class TrainState:
    epoch: int = 0  # next epoch to run
    step: int = 0
    best_f1: float = -1.0
    best_epoch: int = -1


def _dump_bad_batch(out_dir, state, batch_id, event_ids, h, parts):
    path = Path(out_dir) / f"nonfinite_batch_e{state.epoch}_b{batch_id}.json"
    with open(path, "w") as fh:
        json.dump({"epoch": state.epoch, "step": state.step, "batch": batch_id,
                   "event_ids": event_ids, "outputs": h.detach().tolist(),
                   "loss_terms": {k: repr(v) for k, v in parts.items()}}, fh, indent=1)
    return path


def train_epoch(model, optimizer, data, state, config, out_dir=None, log_fh=None):
    """One pass over ``data`` (an :class:`EventClipSet`) at epoch ``state.epoch``."""
    n = state.epoch
    sched = schedules_at(n, config)
    for group in optimizer.param_groups:
        group["lr"] = sched["lr"]
    model.train()
    order = np.random.default_rng([config.seed, n, 17]).permutation(len(data))
    totals = []
    for b, start in enumerate(range(0, len(order), config.batch_size)):
        ids = order[start:start + config.batch_size]
        x, y, boxes, event_ids = collate([data.get(int(i), n) for i in ids])
        exc = None
        if config.excitation:
            exc = Excitation(boxes, sched["alpha"], config.excitation_layers, tuple(x.shape[2:]))
        h = model(x, exc)
        loss, parts = compute_loss(h, y, n, config)
        if not math.isfinite(loss.item()):
            dump = _dump_bad_batch(out_dir or ".", state, b, event_ids, h, parts)
            raise NonFiniteLossError(f"non-finite loss at epoch {n}, batch {b}; batch dumped to {dump}")
        optimizer.zero_grad(set_to_none=True)
        loss.backward()
        pre = float(torch.nn.utils.clip_grad_norm_(model.parameters(), config.clip_norm))
        optimizer.step()
        rec = {"step": state.step, "epoch": n, **{k: parts[k] for k in
               ("nll", "kl", "cal", "rho_n", "lambda_n", "total")}, "grad_norm": pre}
        if log_fh is not None:
            log_fh.write(json.dumps(rec, sort_keys=True) + "\n")
        totals.append(parts["total"])
        state.step += 1
    return {**sched, "mean_loss": float(np.mean(totals)) if totals else float("nan"),
            "n_batches": len(totals)}


def validate(model, data, corpus, split, config):
    scores = predict(model, data, config.objective, config.evidence)
    truth = {v: int(corpus.annotation(v).tag == "delivery") for v in corpus.video_ids(split)}
    verdicts = ev.video_verdicts(scores, truth, config.threshold)
    rep = ev.classification_metrics([v.predicted for v in verdicts], [v.truth for v in verdicts],
                                    config.threshold)
    return {"val_video_f1": rep.f1, "val_event_accuracy": ev.event_accuracy(scores, config.threshold)
            if scores else 0.0}


def _save_state(path, model, optimizer, state):
    torch.save({"model": model.state_dict(), "optimizer": optimizer.state_dict(),
                "torch_rng": torch.get_rng_state(), "state": asdict(state)}, path)


def fit(config, corpus, out_dir, resume=False, config_hash="", train_set=None, val_set=None):
    """Train for ``config.epochs`` epochs, checkpointing best-by-validation-F1 and last."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    set_determinism(config.seed, config.deterministic)
    augment = AugmentConfig() if config.augment else AugmentConfig(0, 0.0, flip_prob=0.0)
    if train_set is None:
        train_set = EventClipSet(corpus, corpus.labeled_events("train"), True, config.seed, augment)
    if val_set is None:
        val_set = EventClipSet(corpus, corpus.labeled_events("val"), False, config.seed)
    if len(train_set) == 0:
        raise ValueError("training split has no labeled events")
    if len(val_set) == 0:
        raise ValueError("validation split has no labeled events")

    model = build_model(config.width_mult, 2, supports_excitation=config.excitation)
    optimizer = torch.optim.AdamW(model.parameters(), lr=lr_at(0, config),
                                  weight_decay=config.weight_decay)
    state = TrainState()
    mode = "w"
    if resume and (out / "state.pt").exists():
        saved = torch.load(out / "state.pt", map_location="cpu", weights_only=False)
        model.load_state_dict(saved["model"])
        optimizer.load_state_dict(saved["optimizer"])
        torch.set_rng_state(saved["torch_rng"])
        state = TrainState(**saved["state"])
        mode = "a"
        log.info("resuming at epoch %d (step %d)", state.epoch, state.step)

    extra = {"objective": config.objective, "evidence": config.evidence,
             "train_config": config.to_json()}
    with open(out / "train_log.jsonl", mode) as log_fh, open(out / "epochs.jsonl", mode) as ep_fh:
        while state.epoch < config.epochs:
            rec = train_epoch(model, optimizer, train_set, state, config, out, log_fh)
            rec.update(validate(model, val_set, corpus, "val", config))
            log.info("epoch %d: loss %.4f, val F1 %.3f, val acc %.1f%%", state.epoch,
                     rec["mean_loss"], rec["val_video_f1"], rec["val_event_accuracy"])
            ep_fh.write(json.dumps(rec, sort_keys=True) + "\n")
            log_fh.flush()
            ep_fh.flush()
            sched = {"epoch": state.epoch, "alpha": rec["alpha"], "lambda_n": rec["lambda_n"],
                     "rho_n": rec["rho_n"], "lr": rec["lr"]}
            if rec["val_video_f1"] > state.best_f1:
                state.best_f1 = rec["val_video_f1"]
                state.best_epoch = state.epoch
                save_checkpoint(out / "best.pt", model, state.epoch, sched, config_hash,
                                {**extra, "val_video_f1": state.best_f1})
            save_checkpoint(out / "last.pt", model, state.epoch, sched, config_hash,
                            {**extra, "val_video_f1": rec["val_video_f1"]})
            state.epoch += 1
            _save_state(out / "state.pt", model, optimizer, state)
    return {"best": str(out / "best.pt"), "last": str(out / "last.pt"),
            "best_epoch": state.best_epoch, "best_val_f1": state.best_f1, "steps": state.step}
