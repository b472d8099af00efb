"""Visual anomaly detection toolkit (Python bindings to the native core)."""

import json as _json

from ._core import (
    ConfigError,
    VadkitError,
    aupro,
    auprc,
    auroc,
    decode_features,
    f1_max,
    kcenter_greedy,
    synthetic,
)
from . import _core

__all__ = [
    "ConfigError",
    "VadkitError",
    "aupro",
    "auprc",
    "auroc",
    "decode_features",
    "encode_features",
    "f1_max",
    "kcenter_greedy",
    "run",
    "synthetic",
]


def run(config, output_dir=None, overrides=(), command="run", write_files=True):
    """Run an experiment from a JSON config and return the report as a dict."""
    return _json.loads(_core.run_json(str(config), None if output_dir is None else str(output_dir),
                                      list(overrides), command, write_files))


def encode_features(maps, bits):
    """Encode a list of (C, H, W) arrays; returns (bytes, bitrate report dict)."""
    message, report = _core.encode_features(list(maps), bits)
    return message, _json.loads(report)
