"""Command-line entry points for the evaluation harness."""

import json
import sys
from pathlib import Path

import click
import yaml

from . import __version__
from .dataset import load_clip, make_synthetic_dataset
from .encoders import available_encoders, create_encoder
from .errors import ConfigError, DataError, HarnessError
from .perturb import (
    corruption_grid,
    occlusion_grid,
    render_preview,
    temporal_grid,
)
from .pipeline import (
    AXES,
    dump_resolved,
    extract_embeddings,
    load_config,
    load_dataset,
    report as emit_report,
    resolve,
    run_axis,
    subset_for_axis,
    train_or_load_probes,
)
from .pipeline.axes import dataset_fingerprint
from .store import EmbeddingStore

AXIS_CHOICE = click.Choice(AXES)


def _resolved(config_path, overrides):
    return resolve(load_config(config_path, overrides=overrides))


def _config_options(fn):
    fn = click.option(
        "--set",
        "overrides",
        multiple=True,
        metavar="KEY=VALUE",
        help="Override a config key (dotted path), e.g. --set probe.epochs=5.",
    )(fn)
    fn = click.option(
        "--config",
        "config_path",
        type=click.Path(exists=True, dir_okay=False),
        default=None,
        help="YAML config file; omitted keys take documented defaults.",
    )(fn)
    return fn


def _echo_json(payload):
    click.echo(json.dumps(payload, sort_keys=True, indent=2))


@click.group()
@click.version_option(version=__version__, prog_name="vidbench")
def cli():
    """Robustness evaluation for frozen video encoders.

    Precedence for every setting: environment variables (cache root and
    worker count only) > --set overrides > config file > built-in defaults.
    """


@cli.command()
@click.option("--synthetic", is_flag=True, help="Generate a self-contained synthetic dataset.")
@click.option("--root", type=click.Path(file_okay=False), help="Dataset root to create or read.")
@click.option("--classes", default=4, show_default=True, help="Synthetic class count.")
@click.option("--train-per-class", default=2, show_default=True)
@click.option("--test-per-class", default=2, show_default=True)
@click.option("--frames", default=16, show_default=True)
@click.option("--size", default=64, show_default=True, help="Frame height and width.")
@click.option("--seed", default=42, show_default=True)
@_config_options
def ingest(synthetic, root, classes, train_per_class, test_per_class, frames, size, seed,
           config_path, overrides):
    """Create or validate a dataset manifest.

    With --synthetic, writes clips, labels, manifest, and taxonomy under
    --root plus a ready-to-use config.yaml. Without it, loads the dataset
    named by the config and prints split statistics.
    """
    if synthetic:
        if not root:
            raise ConfigError("--synthetic requires --root")
        made = make_synthetic_dataset(
            root,
            n_classes=classes,
            train_per_class=train_per_class,
            test_per_class=test_per_class,
            frames=frames,
            height=size,
            width=size,
            seed=seed,
        )
        total = classes * test_per_class
        config = {
            "dataset": {
                "manifest": str(made["manifest"]),
                "video_root": str(made["video_root"]),
                "labels": str(made["labels"]),
                "taxonomy_dir": str(made["taxonomy_dir"]),
            },
            # two toy variants so paired encoder statistics have rows
            "encoders": [
                {"name": "toy", "options": {"dim": 64, "seed": 0}},
                {"name": "toy", "options": {"dim": 64, "seed": 1}},
            ],
            "output_dir": str(Path(root) / "runs"),
            "seed": seed,
            "subsets": {
                "discriminability": {
                    "mode": "per_class",
                    "per_class": test_per_class,
                    "classes": "tiers",
                },
                "corruption": {"mode": "total", "total": total},
                "pretend": {"mode": "pretend"},
                "occlusion": {"mode": "per_class", "per_class": test_per_class},
                "temporal": {"mode": "total", "total": total},
            },
        }
        config_file = Path(root) / "config.yaml"
        config_file.write_text(yaml.safe_dump(config, sort_keys=True))
        _echo_json(
            {
                "config": str(config_file),
                "manifest": str(made["manifest"]),
                "root": str(made["root"]),
            }
        )
        return
    config = _resolved(config_path, overrides)
    manifest, labels, taxonomy = load_dataset(config)
    splits = sorted({e.split for e in manifest.entries})
    _echo_json(
        {
            "classes": len(labels),
            "clips": len(manifest.entries),
            "dataset_hash": dataset_fingerprint(config, manifest),
            "pretend_classes": taxonomy.pretend_classes(),
            "splits": {s: len(manifest.for_split(s)) for s in splits},
        }
    )


@cli.command()
@click.argument("axis", type=AXIS_CHOICE)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write listing here.")
@_config_options
def subset(axis, out, config_path, overrides):
    """Resolve and print the evaluation subset for one axis."""
    config = _resolved(config_path, overrides)
    manifest, _, taxonomy = load_dataset(config)
    chosen = subset_for_axis(config, manifest, taxonomy, axis)
    counts = {str(k): v for k, v in sorted(chosen.class_counts().items())}
    payload = {
        "axis": axis,
        "clip_ids": [e.clip_id for e in chosen.entries],
        "meta": chosen.meta,
        "n_clips": len(chosen.entries),
        "per_class": counts,
    }
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
        click.echo(f"wrote {out}")
    else:
        _echo_json(payload)


@cli.command("perturb-preview")
@click.option("--family", type=click.Choice(("corruption", "occlusion", "temporal")),
              required=True)
@click.option("--clip", "clip_id", default=None,
              help="Clip id to render; defaults to the first eval-split clip.")
@click.option("--condition", default=None, help="Restrict to one condition.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@_config_options
def perturb_preview(family, clip_id, condition, out, config_path, overrides):
    """Render a frame-grid PNG of perturbed variants for visual audit."""
    config = _resolved(config_path, overrides)
    manifest, _, _ = load_dataset(config)
    entries = manifest.for_split(config["eval_split"]) or manifest.entries
    if clip_id is None:
        entry = sorted(entries, key=lambda e: e.clip_id)[0]
    else:
        match = [e for e in manifest.entries if e.clip_id == clip_id]
        if not match:
            raise DataError(f"clip {clip_id!r} not in manifest")
        entry = match[0]
    grids = {
        "corruption": corruption_grid,
        "occlusion": occlusion_grid,
        "temporal": temporal_grid,
    }
    specs = grids[family](config["seed"])
    if condition is not None:
        specs = [s for s in specs if s.condition == condition]
        if not specs:
            raise ConfigError(f"no {family} condition named {condition!r}")
    ds = config["dataset"]
    clip = load_clip(
        ds["video_root"], entry, decoder=ds["decoder"], frame_count=ds["frame_count"]
    )
    path = render_preview(clip.frames, specs, entry.clip_id, out)
    click.echo(f"wrote {path} ({len(specs)} conditions, clip {entry.clip_id})")


@cli.command()
@click.option("--axis", "axes", type=AXIS_CHOICE, multiple=True,
              help="Restrict to these axes (default: all configured).")
@_config_options
def extract(axes, config_path, overrides):
    """Encode and cache embeddings for the configured grids, no evaluation."""
    config = _resolved(config_path, overrides)
    _echo_json(extract_embeddings(config, axes=list(axes) or None))


@cli.command("train-probe")
@_config_options
def train_probe(config_path, overrides):
    """Fit (or reuse) the attentive, linear, and kNN probes per encoder."""
    config = _resolved(config_path, overrides)
    manifest, labels, taxonomy = load_dataset(config)
    dataset_hash = dataset_fingerprint(config, manifest)
    store = EmbeddingStore(config["cache_root"])
    payload = {}
    for enc_cfg in config["encoders"]:
        encoder = create_encoder(enc_cfg["name"], **enc_cfg.get("options", {}))
        probes, _ = train_or_load_probes(
            config, store, dataset_hash, manifest, labels, taxonomy, encoder
        )
        payload[encoder.encoder_id] = {
            kind: probe.state_hash() for kind, probe in sorted(probes.items())
        }
    _echo_json(payload)


@cli.command()
@click.option("--axis", "axes", type=AXIS_CHOICE, multiple=True,
              help="Restrict to these axes (default: all configured).")
@_config_options
def evaluate(axes, config_path, overrides):
    """Run axes end to end: subset, perturb, encode, probe, metrics, stats."""
    config = _resolved(config_path, overrides)
    dump_resolved(config)
    summaries = {}
    for axis in list(axes) or config["axes"]:
        summaries[axis] = run_axis(config, axis)
    _echo_json(summaries)


@cli.command()
@click.option("--axis", "axes", type=AXIS_CHOICE, multiple=True,
              help="Restrict to these axes (default: all configured).")
@_config_options
def analyze(axes, config_path, overrides):
    """Recompute metrics and statistics strictly from cached embeddings.

    Identical to evaluate except that an embedding-cache miss is an error,
    so analysis can never silently trigger encoder work.
    """
    config = _resolved(config_path, overrides)
    dump_resolved(config)
    summaries = {}
    for axis in list(axes) or config["axes"]:
        summaries[axis] = run_axis(config, axis, strict_cache=True)
    _echo_json(summaries)


@cli.command("report")
@_config_options
def report_cmd(config_path, overrides):
    """Emit every report table, radar data, and best-effort plots."""
    config = _resolved(config_path, overrides)
    _echo_json(emit_report(config))


@cli.group()
def encoders():
    """Inspect the encoder adapter registry."""


@encoders.command("list")
def encoders_list():
    """List registered encoder adapters (built-ins plus plugins)."""
    for name in available_encoders():
        click.echo(name)


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        sys.exit(1)
    except HarnessError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(exc.exit_code)
    return 0


if __name__ == "__main__":
    main()
