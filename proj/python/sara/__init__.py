"""Pair selection for structure from motion."""

import json

from ._core import (
    SaraError,
    format_pair_list,
    max_spanning_tree,
    read_features,
    relative_pose,
    synth,
)
from . import _core

__all__ = [
    "SaraError",
    "ablate",
    "default_config",
    "format_pair_list",
    "max_spanning_tree",
    "read_features",
    "relative_pose",
    "select",
    "synth",
]


def default_config():
    """Default configuration as a dict (angles in degrees)."""
    return json.loads(_core.default_config_json())


def select(manifest, out_pairs, out_report, config=None, threads=0, **overrides):
    """Select pairs for a dataset and return the run report as a dict.

    `config` and keyword overrides use the JSON config keys.
    """
    merged = dict(config or {}, **overrides)
    text = _core.select(str(manifest), str(out_pairs), str(out_report), json.dumps(merged), threads)
    return json.loads(text)


def ablate(manifest, out_dir, config=None, threads=0, **overrides):
    """Run every ablation variant on shared scores; returns one report per variant."""
    merged = dict(config or {}, **overrides)
    return json.loads(_core.ablate(str(manifest), str(out_dir), json.dumps(merged), threads))
