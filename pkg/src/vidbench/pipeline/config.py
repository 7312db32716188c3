"""Experiment configuration: defaults, YAML files, CLI overrides, env vars.

Precedence, highest first: environment variables (cache root and worker
count only), ``--set`` command-line overrides, the config file, built-in
defaults. The fully resolved config is written next to the results so every
run is self-describing.
"""

import copy
import json
import re
from pathlib import Path

import yaml

from .._util import sha256_hex
from ..errors import ConfigError


class _ConfigLoader(yaml.SafeLoader):
    """SafeLoader that also accepts dot-free scientific floats like 5e-4."""


_ConfigLoader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(
        r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
          |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
          |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
          |[-+]?\.(?:inf|Inf|INF)
          |\.(?:nan|NaN|NAN))$""",
        re.X,
    ),
    list("-+0123456789."),
)


def _load_yaml(text: str):
    return yaml.load(text, Loader=_ConfigLoader)

AXES = ("discriminability", "corruption", "pretend", "occlusion", "temporal")

ENV_CACHE_ROOT = "VIDBENCH_CACHE_ROOT"
ENV_WORKERS = "VIDBENCH_WORKERS"

# Subset sizes default to the full-protocol grids; desk-scale configs
# override them to match whatever dataset they ingest.
DEFAULTS = {
    "seed": 42,
    "output_dir": "runs/default",
    "cache_root": None,
    "workers": 1,
    "dataset": {
        "manifest": None,
        "video_root": None,
        "labels": None,
        "taxonomy_dir": None,
        "decoder": "npz",
        "frame_count": 16,
    },
    "encoders": [{"name": "toy", "options": {}}],
    "axes": list(AXES),
    "subsets": {
        "discriminability": {"mode": "per_class", "per_class": 20, "classes": "tiers"},
        "corruption": {"mode": "total", "total": 500},
        "pretend": {"mode": "pretend"},
        "occlusion": {"mode": "per_class", "per_class": 10},
        "temporal": {"mode": "total", "total": 1000},
    },
    "eval_split": "test",
    "train_split": "train",
    "probe": {
        "lr": 1e-3,
        "epochs": 20,
        "batch": 64,
        "weight_decay": 0.0,
        "depth": 2,
        "heads": 8,
        "mlp_ratio": 2.0,
        "k": 5,
        "standardize": True,
        "sweep": False,
    },
    "report": {
        "alpha": 0.01,
        "plots": True,
        "reference_encoder": None,
    },
}


def default_config() -> dict:
    return copy.deepcopy(DEFAULTS)


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = dict(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key in out and isinstance(out[key], dict) and isinstance(value, dict):
            out[key] = _merge(out[key], value, where)
        else:
            out[key] = value
    return out


def _apply_set(config: dict, assignment: str) -> None:
    if "=" not in assignment:
        raise ConfigError(f"--set needs key=value, got {assignment!r}")
    dotted, _, raw = assignment.partition("=")
    dotted = dotted.strip()
    if not dotted:
        raise ConfigError(f"--set needs a non-empty key, got {assignment!r}")
    try:
        value = _load_yaml(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"--set {dotted}: unparseable value {raw!r}: {exc}") from exc
    node = config
    keys = dotted.split(".")
    for key in keys[:-1]:
        nxt = node.get(key)
        if not isinstance(nxt, dict):
            nxt = {}
            node[key] = nxt
        node = nxt
    node[keys[-1]] = value


def load_config(path=None, overrides=(), env=None) -> dict:
    """Resolve a full config dict from file, --set pairs, and environment."""
    config = default_config()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            loaded = _load_yaml(path.read_text())
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"{path}: config root must be a mapping")
        unknown = sorted(set(loaded) - set(DEFAULTS))
        if unknown:
            raise ConfigError(f"{path}: unknown config keys: {unknown}")
        config = _merge(config, loaded)
    for assignment in overrides:
        _apply_set(config, assignment)
    if env is None:
        import os

        env = os.environ
    if env.get(ENV_CACHE_ROOT):
        config["cache_root"] = env[ENV_CACHE_ROOT]
    if env.get(ENV_WORKERS):
        try:
            config["workers"] = int(env[ENV_WORKERS])
        except ValueError:
            raise ConfigError(
                f"{ENV_WORKERS} must be an integer, got {env[ENV_WORKERS]!r}"
            ) from None
    return resolve(config)


def resolve(config: dict) -> dict:
    """Fill derived defaults and validate cross-field constraints."""
    config = copy.deepcopy(config)
    if config.get("cache_root") is None:
        config["cache_root"] = str(Path(config["output_dir"]) / "cache")
    for axis in config.get("axes", []):
        if axis not in AXES:
            raise ConfigError(f"unknown axis {axis!r}, expected one of {AXES}")
    if not config.get("encoders"):
        raise ConfigError("at least one encoder must be configured")
    seen = set()
    for entry in config["encoders"]:
        if not isinstance(entry, dict) or "name" not in entry:
            raise ConfigError(f"encoder entries need a 'name' field: {entry!r}")
        entry.setdefault("options", {})
        ident = json.dumps(entry, sort_keys=True)
        if ident in seen:
            raise ConfigError(f"duplicate encoder entry: {entry!r}")
        seen.add(ident)
    workers = config.get("workers", 1)
    if not isinstance(workers, int) or workers < 1:
        raise ConfigError(f"workers must be a positive integer, got {workers!r}")
    return config


def config_hash(config: dict) -> str:
    return sha256_hex(
        json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    )[:16]


def dump_resolved(config: dict, output_dir=None) -> Path:
    out = Path(output_dir if output_dir is not None else config["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    path = out / "resolved_config.json"
    payload = dict(config)
    payload["config_hash"] = config_hash(config)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return path
