import numpy as np
import pytest

from vidbench.dataset import make_synthetic_dataset
from vidbench.pipeline.config import default_config, resolve


@pytest.fixture(scope="session")
def synth(tmp_path_factory):
    """One synthetic dataset shared by read-only tests."""
    root = tmp_path_factory.mktemp("synth")
    return make_synthetic_dataset(root)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_clip(rng, frames=16, height=64, width=64):
    return rng.integers(0, 256, size=(frames, height, width, 3), dtype=np.uint8)


def build_config(made, out_dir, encoders=None, axes=None, per_class=2, n_classes=4, **extra):
    """Resolved config pointing at a synthetic dataset, desk-scaled subsets."""
    cfg = default_config()
    cfg["dataset"].update(
        {
            "manifest": str(made["manifest"]),
            "video_root": str(made["video_root"]),
            "labels": str(made["labels"]),
            "taxonomy_dir": str(made["taxonomy_dir"]),
        }
    )
    cfg["output_dir"] = str(out_dir)
    total = n_classes * per_class
    cfg["subsets"] = {
        "discriminability": {"mode": "per_class", "per_class": per_class, "classes": "tiers"},
        "corruption": {"mode": "total", "total": total},
        "pretend": {"mode": "pretend"},
        "occlusion": {"mode": "per_class", "per_class": per_class},
        "temporal": {"mode": "total", "total": total},
    }
    if encoders is not None:
        cfg["encoders"] = encoders
    if axes is not None:
        cfg["axes"] = list(axes)
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(cfg.get(key), dict):
            cfg[key].update(value)
        else:
            cfg[key] = value
    return resolve(cfg)
