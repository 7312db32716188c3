"""Batch evaluation harness measuring robustness of frozen video encoders.

Five evaluation axes: feature discriminability, corruption robustness,
pretend-action discrimination, occlusion robustness, and temporal robustness.
"""

__version__ = "0.1.0"

HARNESS_VERSION = __version__
