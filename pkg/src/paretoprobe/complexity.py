"""Complexity metrics for trained probes.

Two parametric metrics (nuclear norm, numerical rank of the linear weight)
and two behavioral ones (train accuracy after label shuffling or full input
and label shuffling). Each metric carries the bound used to normalize it for
hypervolume reporting: nuclear norms cap at 400 for the two classification
tasks and 700 for parsing, rank caps at min(labels, dim), and the shuffled
scores already live in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, replace as dataclass_replace

import numpy as np

from . import corpus
from .corpus import DAL, PARSE, POSL, TaskDataset
from .representations import CONTEXTUAL_FILE, RepresentationProvider

NUCLEAR_NORM = "nuclear-norm"
RANK = "rank"
LABEL_SHUFFLED_METRIC = "label-shuffled"
FULLY_SHUFFLED_METRIC = "fully-shuffled"
METRICS = (NUCLEAR_NORM, RANK, LABEL_SHUFFLED_METRIC, FULLY_SHUFFLED_METRIC)

NUCLEAR_BOUNDS = {POSL: 400.0, DAL: 400.0, PARSE: 700.0}


@dataclass(frozen=True)
class ComplexityScore:
    metric: str
    value: float
    bound: float

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unknown complexity metric {self.metric!r}")
        if self.value < 0.0:
            raise ValueError(f"complexity must be >= 0, got {self.value}")
        if self.bound <= 0.0:
            raise ValueError(f"bound must be positive, got {self.bound}")
        if self.metric in (LABEL_SHUFFLED_METRIC, FULLY_SHUFFLED_METRIC):
            if self.value > 1.0:
                raise ValueError(f"shuffled scores lie in [0, 1], got {self.value}")


def nuclear_norm(weight: np.ndarray) -> float:
    """Sum of singular values; zero exactly when the matrix is zero."""
    weight = np.asarray(weight, dtype=np.float64)
    if not np.all(np.isfinite(weight)):
        raise ValueError("nuclear norm requires finite entries")
    return float(np.linalg.svd(weight, compute_uv=False).sum())


def matrix_rank(weight: np.ndarray, tol: float = 1e-8) -> int:
    """Count of singular values above ``tol`` times the largest one."""
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    singulars = np.linalg.svd(np.asarray(weight, dtype=np.float64),
                              compute_uv=False)
    if singulars.size == 0 or singulars[0] == 0.0:
        return 0
    return int(np.sum(singulars > tol * singulars[0]))


def complexity_bound(metric: str, task: str, n_labels: int | None = None,
                     dim: int | None = None) -> float:
    """The c_max used to normalize ``metric`` on ``task`` for hypervolumes."""
    if metric == NUCLEAR_NORM:
        try:
            return NUCLEAR_BOUNDS[task]
        except KeyError:
            raise ValueError(f"unknown task {task!r}") from None
    if metric == RANK:
        if not n_labels or not dim:
            raise ValueError("rank normalization needs the label count and dim")
        return float(min(n_labels, dim))
    if metric in (LABEL_SHUFFLED_METRIC, FULLY_SHUFFLED_METRIC):
        return 1.0
    raise ValueError(f"unknown complexity metric {metric!r}")


def memorization_score(spec, provider: RepresentationProvider,
                       dataset: TaskDataset, config, mode: str) -> ComplexityScore:
    """Train a fresh probe of the same architecture on shuffled data and
    return its final train accuracy as the complexity value.

    ``dataset`` must be the train split. For ``fully-shuffled`` the provider
    must be contextual and the dataset/provider pair must already reflect the
    input-shuffled corpus (type-level vectors are unaffected by reordering
    word forms, so the mode is meaningless for them); this function applies
    the label shuffle on top.
    """
    from .training import TrainConfig, train_probe  # deferred: avoids an import cycle

    if mode not in (LABEL_SHUFFLED_METRIC, FULLY_SHUFFLED_METRIC):
        raise ValueError(f"unknown memorization mode {mode!r}")
    if mode == FULLY_SHUFFLED_METRIC and provider.kind != CONTEXTUAL_FILE:
        from .training import ConfigurationError

        raise ConfigurationError(
            "fully-shuffled memorization needs a contextual provider; "
            "type-level vectors do not change when word order is shuffled"
        )
    if not isinstance(config, TrainConfig):
        raise TypeError("config must be a TrainConfig")
    shuffled = corpus.shuffle_labels(dataset, config.seed)
    trained = train_probe(spec, provider, shuffled,
                          dataclass_replace(config, mode=mode))
    return ComplexityScore(metric=mode, value=trained.train_accuracy, bound=1.0)
