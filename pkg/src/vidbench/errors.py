"""Error taxonomy mapped to CLI exit codes (config 2, data 3, axis 4)."""


class HarnessError(Exception):
    """Base class for all harness-raised errors."""

    exit_code = 1


class ConfigError(HarnessError):
    """Invalid configuration, unknown names, bad parameter combinations."""

    exit_code = 2


class DataError(HarnessError):
    """Problems with manifests, clips, labels, taxonomy, or stored records."""

    exit_code = 3


class StoreError(DataError):
    """Cache or results-log corruption, version mismatch, missing keys."""


class AxisFailure(HarnessError):
    """An evaluation axis aborted partway; cache state remains resumable."""

    exit_code = 4
