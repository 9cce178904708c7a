"""Replay-set construction for class-incremental text-to-3D training."""

import json

from ._core import (
    ReplayKitError,
    __version__,
    allocate_budget,
    clip_score_files,
    effective_cap,
    forgetting,
    frechet_distance,
    frechet_distance_features,
    moments,
    replay_budget,
    select_kcenter,
    select_random,
    total_for_alpha,
)
from . import _core


def create_replay_set(metadata, novel_size, embeddings=None, **params):
    """Build a replay manifest and return it as a dict.

    `metadata` and `embeddings` are paths; `params` are the keyword
    arguments of the replay step (replay_pct, m_min, m_max, p_max,
    max_captions, strategy, seed, threads).
    """
    text = _core.replay_manifest_json(str(metadata), novel_size,
                                      None if embeddings is None else str(embeddings), **params)
    return json.loads(text)


def split_stats(metadata, spec):
    """Per-class train/test counts for the splits described by `spec` (a dict)."""
    return json.loads(_core.split_stats_json(str(metadata), json.dumps(spec)))


__all__ = [
    "ReplayKitError",
    "__version__",
    "allocate_budget",
    "clip_score_files",
    "create_replay_set",
    "effective_cap",
    "forgetting",
    "frechet_distance",
    "frechet_distance_features",
    "moments",
    "replay_budget",
    "select_kcenter",
    "select_random",
    "split_stats",
    "total_for_alpha",
]
