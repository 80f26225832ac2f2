"""Python access to the poemlab core."""

import json

from ._poemlab import (
    ConfigError,
    Error,
    aupr,
    auroc,
    boundary_score_exact,
    energy,
    fpr_at_tpr,
    posterior_update,
    q_function,
    select_top_n,
    theorem_bound,
    threshold_at_tpr,
)
from ._poemlab import train as _train
from ._poemlab import verify_theorem as _verify_theorem


def train(**settings):
    """Run one training job; keyword names follow the config-file keys."""
    return [json.loads(line) for line in _train({k: str(v) for k, v in settings.items()})]


def verify_theorem(**settings):
    return json.loads(_verify_theorem({k: str(v) for k, v in settings.items()}))


__all__ = [
    "ConfigError",
    "Error",
    "aupr",
    "auroc",
    "boundary_score_exact",
    "energy",
    "fpr_at_tpr",
    "posterior_update",
    "q_function",
    "select_top_n",
    "theorem_bound",
    "threshold_at_tpr",
    "train",
    "verify_theorem",
]
