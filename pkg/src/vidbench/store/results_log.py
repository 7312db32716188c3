"""Line-delimited JSON results logs, one file per evaluation axis.

Records are written with sorted keys and compact separators so a rerun that
computes identical values produces byte-identical files. Timestamps never
appear in records for the same reason.
"""

import json
from pathlib import Path

from ..errors import StoreError

RESULTS_SCHEMA_VERSION = 1


def _normalize(record) -> dict:
    if hasattr(record, "to_record"):
        record = record.to_record()
    if not isinstance(record, dict):
        raise StoreError(f"cannot serialise result of type {type(record).__name__}")
    if "kind" not in record:
        raise StoreError("result record needs a 'kind' field")
    out = dict(record)
    out["schema"] = RESULTS_SCHEMA_VERSION
    return out


def _encode(record: dict) -> str:
    try:
        return json.dumps(record, sort_keys=True, separators=(",", ":"), allow_nan=False)
    except ValueError as exc:
        raise StoreError(f"result record is not JSON-serialisable: {exc}") from exc


def write_results(path, records) -> Path:
    """Rewrite a results file from scratch (the normal per-run path)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [_encode(_normalize(r)) for r in records]
    path.write_text("".join(line + "\n" for line in lines))
    return path


def append_results(path, records) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a") as fh:
        for record in records:
            fh.write(_encode(_normalize(record)) + "\n")
    return path


def read_results(path, kind: str | None = None, **filters) -> list:
    """Read a results log, tolerating a truncated final record.

    Filters match against top-level fields first, then against the record's
    ``group`` mapping, so ``encoder=...`` works for metric and stat records
    alike.
    """
    path = Path(path)
    if not path.exists():
        raise StoreError(f"results log not found: {path}")
    records = []
    with path.open("rb") as fh:
        for raw in fh:
            line = raw.decode("utf-8", errors="replace").strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError:
                # interrupted append: everything before the torn tail is valid
                break
            schema = record.get("schema")
            if schema != RESULTS_SCHEMA_VERSION:
                raise StoreError(
                    f"{path}: record schema {schema!r} unsupported "
                    f"(expected {RESULTS_SCHEMA_VERSION})"
                )
            records.append(record)
    if kind is not None:
        records = [r for r in records if r.get("kind") == kind]
    for key, wanted in filters.items():
        records = [
            r
            for r in records
            if r.get(key, r.get("group", {}).get(key)) == wanted
        ]
    return records
