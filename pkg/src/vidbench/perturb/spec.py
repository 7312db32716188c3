"""Perturbation specification and its canonical cache-key serialisation."""

from dataclasses import dataclass, field

from ..errors import ConfigError

FAMILIES = ("clean", "corruption", "occlusion", "temporal")

CORRUPTION_TYPES = (
    "motion_blur",
    "snow",
    "pixelate",
    "impulse_noise",
    "brightness",
    "elastic_transform",
)
OCCLUSION_CONDITIONS = ("moving_block", "temporal_dropout", "patch_dropout")
TEMPORAL_CONDITIONS = (
    "random_shuffle",
    "segment_shuffle",
    "interleave",
    "static_first",
    "static_middle",
    "static_last",
    "gaussian_noise",
    "uniform_noise",
    "static_gaussian_noise",
    "reversal",
)

# Paper grids. Corruption severities are integer levels; occlusion severities
# are the ratio parameters themselves (block side ratio alpha, dropped-frame
# fraction beta, zeroed-cuboid fraction gamma).
CORRUPTION_SEVERITIES = (1, 3, 5)
MOVING_BLOCK_RATIOS = (0.10, 0.30, 0.50)
TEMPORAL_DROPOUT_RATIOS = (0.125, 0.375, 0.625)
PATCH_DROPOUT_RATIOS = (0.10, 0.30, 0.50)
DEFAULT_CUBOID = (2, 16, 16)


def format_severity(severity) -> str:
    if isinstance(severity, bool):
        raise ConfigError("severity must be a number")
    if isinstance(severity, int):
        return str(severity)
    return format(float(severity), "g")


@dataclass(frozen=True)
class PerturbationSpec:
    """One perturbation condition, fully determined by its key string."""

    family: str
    condition: str
    severity: float = 0
    seed: int = 42
    params: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown perturbation family {self.family!r}")
        known = {
            "clean": ("none",),
            "corruption": CORRUPTION_TYPES,
            "occlusion": OCCLUSION_CONDITIONS,
            "temporal": TEMPORAL_CONDITIONS,
        }[self.family]
        if self.condition not in known:
            raise ConfigError(
                f"unknown {self.family} condition {self.condition!r}, expected one of {known}"
            )
        if self.family == "corruption" and self.severity not in (1, 2, 3, 4, 5):
            raise ConfigError(f"corruption severity must be in 1..5, got {self.severity!r}")
        if self.family == "occlusion" and not 0 <= float(self.severity) <= 1:
            raise ConfigError(f"occlusion severity is a ratio in [0,1], got {self.severity!r}")
        if self.family == "clean" and self.params:
            raise ConfigError("clean spec must have empty params")

    def key(self) -> str:
        return f"{self.family}:{self.condition}:{format_severity(self.severity)}:{self.seed}"

    def param(self, name, default=None):
        return dict(self.params).get(name, default)

    @staticmethod
    def clean(seed: int = 42) -> "PerturbationSpec":
        return PerturbationSpec("clean", "none", 0, seed)

    @staticmethod
    def with_params(family, condition, severity=0, seed=42, **params) -> "PerturbationSpec":
        return PerturbationSpec(family, condition, severity, seed, tuple(sorted(params.items())))


def parse_key(key: str) -> PerturbationSpec:
    parts = key.split(":")
    if len(parts) != 4:
        raise ConfigError(f"malformed perturbation key {key!r}")
    family, condition, severity_text, seed_text = parts
    try:
        severity = int(severity_text)
    except ValueError:
        try:
            severity = float(severity_text)
        except ValueError:
            raise ConfigError(f"malformed severity in key {key!r}") from None
    try:
        seed = int(seed_text)
    except ValueError:
        raise ConfigError(f"malformed seed in key {key!r}") from None
    return PerturbationSpec(family, condition, severity, seed)
