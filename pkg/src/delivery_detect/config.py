"""Layered configuration: the packaged reference TOML plus optional user overrides.

User files may be TOML or JSON. Keys unknown to the reference are rejected so
typos fail loudly instead of silently falling back to defaults.
"""
import copy
import hashlib
import json
import sys
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SECTIONS = ("synth", "motion", "label", "train", "evaluate")
# tables whose keys are free-form
_OPEN_TABLES = {("synth", "scenario"), ("synth", "negative_mix")}


def _read(path):
    path = Path(path)
    text = path.read_bytes()
    if path.suffix.lower() == ".json":
        return json.loads(text)
    return tomllib.loads(text.decode())


def reference():
    ref = resources.files("delivery_detect") / "configs" / "reference.toml"
    return tomllib.loads(ref.read_text())


def packaged(name):
    """A packaged config file (e.g. ``desk``) as a dict of overrides."""
    ref = resources.files("delivery_detect") / "configs" / f"{name}.toml"
    return tomllib.loads(ref.read_text())


def _merge(base, over, where=()):
    for key, val in over.items():
        path = where + (key,)
        if where in _OPEN_TABLES:
            base[key] = val
        elif key not in base:
            raise KeyError(f"unknown config key {'.'.join(path)}")
        elif isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise TypeError(f"config key {'.'.join(path)} must be a table")
            _merge(base[key], val, path)
        else:
            base[key] = val
    return base


def load_config(*sources):
    """Reference defaults overlaid with each source (a path or a dict), in order."""
    cfg = reference()
    for src in sources:
        if src is None:
            continue
        over = src if isinstance(src, dict) else _read(src)
        _merge(cfg, copy.deepcopy(over))
    return cfg


def config_hash(cfg):
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()
