"""Checkpoints: a named-tensor archive (``.pt``) plus a JSON sidecar.

Sidecar keys: architecture, width_mult, num_classes, epoch, schedule,
config_hash, and anything passed in ``extra``.
"""
import json
from pathlib import Path

import torch

from .model import ARCHITECTURES


def save_checkpoint(path, model, epoch, schedule=None, config_hash="", extra=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(model.state_dict(), path)
    sidecar = {
        "architecture": model.arch.name,
        "width_mult": model.arch.width_mult,
        "num_classes": model.arch.num_classes,
        "epoch": int(epoch),
        "schedule": schedule or {},
        "config_hash": config_hash,
    }
    sidecar.update(extra or {})
    with open(path.with_suffix(".json"), "w") as fh:
        json.dump(sidecar, fh, indent=1, sort_keys=True)
    return sidecar


def load_checkpoint(path, supports_excitation=False):
    """Rebuild the model from the sidecar and load weights; returns (model, sidecar)."""
    path = Path(path)
    if not path.exists() or not path.with_suffix(".json").exists():
        raise FileNotFoundError(f"checkpoint {path} or its sidecar is missing")
    with open(path.with_suffix(".json")) as fh:
        sidecar = json.load(fh)
    build = ARCHITECTURES[sidecar["architecture"]]
    model = build(sidecar["width_mult"], sidecar["num_classes"], supports_excitation)
    model.load_state_dict(torch.load(path, map_location="cpu", weights_only=True))
    return model, sidecar


def load_pretrained(model, path, skip_prefixes=("classifier.",)):
    """Copy matching tensors from an external state dict (e.g. action-recognition weights).

    Tensors are matched by name and shape; returns ``(loaded, skipped)`` name lists.
    """
    state = torch.load(path, map_location="cpu", weights_only=True)
    if "state_dict" in state:
        state = state["state_dict"]
    state = {k.removeprefix("module."): v for k, v in state.items()}
    own = model.state_dict()
    loaded, skipped = [], []
    for name, tensor in state.items():
        if name.startswith(skip_prefixes) or name not in own or own[name].shape != tensor.shape:
            skipped.append(name)
            continue
        own[name] = tensor
        loaded.append(name)
    model.load_state_dict(own)
    return loaded, skipped
