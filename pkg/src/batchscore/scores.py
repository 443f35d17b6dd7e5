"""Per-sample score table driven by mean batch losses.

Every sample owns one score.  When a batch is processed, the scores of exactly
its members move toward the batch's mean loss by an EMA step; everyone else is
untouched.  Samples that never appeared keep their initialization value and
are flagged so that pruning policies can treat them as unranked.

``alpha`` is accepted on the closed interval [0, 1]: alpha = 0 keeps no memory
(the score is the last observed batch loss, the no-EMA ablation) and alpha = 1
freezes scores after initialization (the sweep endpoint that disables
pruning).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

INIT_FIRST_OBSERVED = "first-observed"
INIT_FIXED = "fixed"


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class EmaConfig:
    """Decay factor and score initialization policy.

    ``first-observed``: a sample's first score is the mean loss of the first
    batch it appears in.  ``fixed``: every score starts at ``init_value`` and
    the first participation already blends.
    """

    alpha: float
    init_policy: str = INIT_FIRST_OBSERVED
    init_value: float = 0.0

    def __post_init__(self) -> None:
        _require_finite("alpha", self.alpha)
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.init_policy not in (INIT_FIRST_OBSERVED, INIT_FIXED):
            raise ValueError(f"unknown init_policy {self.init_policy!r}")
        _require_finite("init_value", self.init_value)


class BatchRecord:
    """One training step: the participating sample ids and their mean loss."""

    __slots__ = ("step", "sample_ids", "mean_loss")

    def __init__(self, step: int, sample_ids, mean_loss: float):
        if step < 0:
            raise ValueError(f"step must be non-negative, got {step}")
        ids = np.asarray(sample_ids, dtype=np.int64)
        if ids.ndim != 1 or ids.size < 1:
            raise ValueError("a batch needs at least one sample id")
        if ids.min() < 0:
            raise ValueError(f"sample ids must be non-negative, got {ids.min()}")
        if np.unique(ids).size != ids.size:
            raise ValueError(f"batch at step {step} contains duplicate sample ids")
        self.step = int(step)
        self.sample_ids = ids
        self.mean_loss = _require_finite("mean_loss", mean_loss)

    @property
    def batch_size(self) -> int:
        return int(self.sample_ids.size)


class ScoreTable:
    """Scores, update counts, and participation flags indexed by sample id."""

    __slots__ = ("scores", "update_count", "initialized")

    def __init__(self, n_samples: int, fill: float = 0.0):
        if n_samples < 1:
            raise ValueError(f"table needs at least one sample, got {n_samples}")
        self.scores = np.full(n_samples, float(fill), dtype=np.float64)
        self.update_count = np.zeros(n_samples, dtype=np.int64)
        self.initialized = np.zeros(n_samples, dtype=bool)

    @classmethod
    def for_config(cls, n_samples: int, cfg: EmaConfig) -> "ScoreTable":
        fill = cfg.init_value if cfg.init_policy == INIT_FIXED else 0.0
        return cls(n_samples, fill=fill)

    def __len__(self) -> int:
        return int(self.scores.size)

    def copy(self) -> "ScoreTable":
        dup = ScoreTable.__new__(ScoreTable)
        dup.scores = self.scores.copy()
        dup.update_count = self.update_count.copy()
        dup.initialized = self.initialized.copy()
        return dup


@dataclass(frozen=True)
class ScoresView:
    """Point-in-time read-only snapshot of a score table."""

    scores: np.ndarray
    update_count: np.ndarray
    initialized: np.ndarray

    def __len__(self) -> int:
        return int(self.scores.size)


def ema_update(score_prev: float, batch_loss: float, alpha: float) -> float:
    """One EMA step: alpha * score_prev + (1 - alpha) * batch_loss."""
    score_prev = _require_finite("score_prev", score_prev)
    batch_loss = _require_finite("batch_loss", batch_loss)
    alpha = _require_finite("alpha", alpha)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    return alpha * score_prev + (1.0 - alpha) * batch_loss


def apply_batch(table: ScoreTable, batch: BatchRecord, cfg: EmaConfig) -> ScoreTable:
    """Fold one batch into the table in place (and return it).

    Members of the batch get one EMA step toward the batch mean loss (or, for
    first-observed initialization, the mean loss itself on first
    participation); their update counts increment.  Non-members are untouched.
    """
    ids = batch.sample_ids
    n = len(table)
    if ids.max() >= n:
        raise ValueError(f"sample id {int(ids.max())} out of range for table of size {n}")
    alpha = cfg.alpha
    loss = batch.mean_loss

    if cfg.init_policy == INIT_FIRST_OBSERVED:
        fresh = ~table.initialized[ids]
        first_ids = ids[fresh]
        seen_ids = ids[~fresh]
        table.scores[first_ids] = loss
        table.scores[seen_ids] = alpha * table.scores[seen_ids] + (1.0 - alpha) * loss
    else:
        # fixed init: table was pre-filled with init_value, so every member
        # takes a plain EMA step, first participation included
        table.scores[ids] = alpha * table.scores[ids] + (1.0 - alpha) * loss

    table.initialized[ids] = True
    table.update_count[ids] += 1
    return table


def scores_snapshot(table: ScoreTable) -> ScoresView:
    """Consistent copy of the table's state; safe to hold across updates."""
    scores = table.scores.copy()
    counts = table.update_count.copy()
    flags = table.initialized.copy()
    for arr in (scores, counts, flags):
        arr.setflags(write=False)
    return ScoresView(scores=scores, update_count=counts, initialized=flags)
