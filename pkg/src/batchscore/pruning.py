"""Per-cycle keep/prune decisions over a score table.

Two policy families are provided, reconstructed from their one-sentence
descriptions rather than from the original codebases (and therefore
"-like", not exact ports):

* threshold soft-pruning: samples scoring strictly below the mean score are
  skipped for the cycle with a fixed probability, and the kept low scorers
  get their loss rescaled to keep the gradient unbiased;
* window selection: a contiguous band of the score ranking is kept, either
  always the easiest band or sliding easy-to-hard across cycles.

Samples that were never scored are always kept.  Decisions are recomputed
once per cycle and are deterministic given (table, policy, cycle, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Union

import numpy as np

if TYPE_CHECKING:
    from .scores import ScoreTable

PROGRESS_EASY_TO_HARD = "easy-to-hard"
PROGRESS_STATIC = "static"

# internal rng stream tags so cycle selections and epoch shuffles never share
# a generator state for the same seed
_SELECT_STREAM = 1
_SHUFFLE_STREAM = 2


@dataclass(frozen=True)
class NoPrune:
    """Keep every sample with factor 1.0; the full-training baseline policy."""


@dataclass(frozen=True)
class ThresholdSoftPrune:
    """Probabilistically skip below-mean scorers, rescaling the survivors.

    ``anneal_tail`` disables pruning for the final fraction of epochs so every
    sample is revisited before convergence.
    """

    prune_prob: float
    rescale: bool = True
    anneal_tail: float = 0.125

    def __post_init__(self) -> None:
        if not 0.0 <= self.prune_prob <= 1.0:
            raise ValueError(f"prune_prob must lie in [0, 1], got {self.prune_prob}")
        if not 0.0 <= self.anneal_tail < 1.0:
            raise ValueError(f"anneal_tail must lie in [0, 1), got {self.anneal_tail}")


@dataclass(frozen=True)
class WindowSelect:
    """Keep a contiguous difficulty window of the score ranking."""

    keep_fraction: float
    progress_mode: str = PROGRESS_EASY_TO_HARD

    def __post_init__(self) -> None:
        if not 0.0 < self.keep_fraction <= 1.0:
            raise ValueError(f"keep_fraction must lie in (0, 1], got {self.keep_fraction}")
        if self.progress_mode not in (PROGRESS_EASY_TO_HARD, PROGRESS_STATIC):
            raise ValueError(f"unknown progress_mode {self.progress_mode!r}")


PrunePolicy = Union[NoPrune, ThresholdSoftPrune, WindowSelect]


@dataclass(frozen=True)
class CycleSchedule:
    """How epochs group into pruning cycles."""

    cycle_len_epochs: int = 1
    total_epochs: int = 1

    def __post_init__(self) -> None:
        if self.cycle_len_epochs < 1:
            raise ValueError(f"cycle_len_epochs must be >= 1, got {self.cycle_len_epochs}")
        if self.total_epochs < 1:
            raise ValueError(f"total_epochs must be >= 1, got {self.total_epochs}")

    @property
    def n_cycles(self) -> int:
        return -(-self.total_epochs // self.cycle_len_epochs)

    def cycle_of_epoch(self, epoch: int) -> int:
        return epoch // self.cycle_len_epochs

    def first_epoch(self, cycle: int) -> int:
        return cycle * self.cycle_len_epochs


class ActiveSet:
    """Kept sample ids for one cycle with per-sample loss rescale factors."""

    __slots__ = ("kept_mask", "factors", "cycle_index", "_kept_ids")

    def __init__(self, kept_mask: np.ndarray, factors: np.ndarray, cycle_index: int):
        self.kept_mask = kept_mask
        self.factors = factors
        self.cycle_index = int(cycle_index)
        self._kept_ids: np.ndarray | None = None

    @property
    def n_samples(self) -> int:
        return int(self.kept_mask.size)

    @property
    def kept_ids(self) -> np.ndarray:
        if self._kept_ids is None:
            self._kept_ids = np.flatnonzero(self.kept_mask)
        return self._kept_ids

    @property
    def kept_count(self) -> int:
        return int(np.count_nonzero(self.kept_mask))

    @property
    def pruned_fraction(self) -> float:
        return 1.0 - self.kept_count / self.n_samples

    def rescale_factor(self, sample_id: int) -> float:
        if not self.kept_mask[sample_id]:
            raise KeyError(f"sample {sample_id} is pruned this cycle")
        return float(self.factors[sample_id])

    def batch_scale(self, sample_ids: np.ndarray) -> float:
        """Mean rescale factor over a batch of kept samples.

        The training loop consumes one mean batch loss, so per-sample factors
        aggregate to this single batch-level scale.
        """
        return float(self.factors[sample_ids].mean())


def _full_active_set(n: int, cycle: int) -> ActiveSet:
    return ActiveSet(np.ones(n, dtype=bool), np.ones(n, dtype=np.float64), cycle)


def select_active_set(
    table: "ScoreTable",
    policy: PrunePolicy,
    cycle: int,
    schedule: CycleSchedule,
    rng_seed: int,
) -> ActiveSet:
    """Compute one cycle's keep/prune decisions from the current scores."""
    n = len(table)
    if n == 0:
        raise ValueError("cannot select from an empty dataset")
    if cycle < 0:
        raise ValueError(f"cycle must be non-negative, got {cycle}")

    if isinstance(policy, NoPrune):
        return _full_active_set(n, cycle)
    if isinstance(policy, ThresholdSoftPrune):
        return _select_threshold(table, policy, cycle, schedule, rng_seed, n)
    if isinstance(policy, WindowSelect):
        return _select_window(table, policy, cycle, schedule, n)
    raise TypeError(f"unknown policy {policy!r}")


def _select_threshold(
    table: "ScoreTable",
    policy: ThresholdSoftPrune,
    cycle: int,
    schedule: CycleSchedule,
    rng_seed: int,
    n: int,
) -> ActiveSet:
    anneal_start = schedule.total_epochs * (1.0 - policy.anneal_tail)
    if schedule.first_epoch(cycle) >= anneal_start - 1e-9:
        return _full_active_set(n, cycle)

    scored = table.initialized
    if not scored.any() or policy.prune_prob == 0.0:
        return _full_active_set(n, cycle)

    mean_score = table.scores[scored].mean()
    below = scored & (table.scores < mean_score)

    rng = np.random.default_rng((rng_seed, _SELECT_STREAM, cycle))
    pruned = below & (rng.random(n) < policy.prune_prob)
    kept_mask = ~pruned

    factors = np.ones(n, dtype=np.float64)
    if policy.rescale and policy.prune_prob < 1.0:
        factors[below & kept_mask] = 1.0 / (1.0 - policy.prune_prob)
    return ActiveSet(kept_mask, factors, cycle)


def _select_window(
    table: "ScoreTable",
    policy: WindowSelect,
    cycle: int,
    schedule: CycleSchedule,
    n: int,
) -> ActiveSet:
    if policy.keep_fraction * n < 1.0:
        raise ValueError(f"keep_fraction {policy.keep_fraction} keeps no samples out of {n}")
    budget = math.ceil(policy.keep_fraction * n)

    scored_ids = np.flatnonzero(table.initialized)
    n_unscored = n - scored_ids.size
    window_size = min(scored_ids.size, max(budget - n_unscored, 0))

    kept_mask = ~table.initialized  # unscored samples are always kept
    if window_size > 0:
        ranked = scored_ids[np.argsort(table.scores[scored_ids], kind="stable")]
        max_start = scored_ids.size - window_size
        if policy.progress_mode == PROGRESS_EASY_TO_HARD and schedule.n_cycles > 1:
            progress = min(cycle, schedule.n_cycles - 1) / (schedule.n_cycles - 1)
        else:
            progress = 0.0
        start = int(round(progress * max_start))
        kept_mask = kept_mask.copy()
        kept_mask[ranked[start : start + window_size]] = True

    return ActiveSet(kept_mask, np.ones(n, dtype=np.float64), cycle)


def pruned_percent(history: list[ActiveSet], n_samples: int) -> float:
    """Share of per-cycle sample visits skipped across a run, in percent."""
    if not history:
        raise ValueError("pruned_percent needs a non-empty history")
    kept_total = sum(a.kept_count for a in history)
    return 100.0 * (1.0 - kept_total / (len(history) * n_samples))


class Sampler:
    """Seeded epoch-wise batch stream over a fixed id set.

    Each epoch draws a fresh permutation of the ids and chunks it into batches
    of ``batch_size`` (the last batch may be smaller).  The stream is
    reproducible: the same (ids, batch_size, seed, epoch) always yields the
    same batches.
    """

    __slots__ = ("ids", "batch_size", "seed")

    def __init__(self, ids: np.ndarray, batch_size: int, seed: int):
        ids = np.asarray(ids, dtype=np.int64)
        if ids.size < 1:
            raise ValueError("sampler needs at least one id")
        if batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {batch_size}")
        self.ids = ids
        self.batch_size = int(batch_size)
        self.seed = int(seed)

    def epoch(self, epoch_index: int) -> list[np.ndarray]:
        rng = np.random.default_rng((self.seed, _SHUFFLE_STREAM, epoch_index))
        perm = rng.permutation(self.ids)
        b = self.batch_size
        return [perm[i : i + b] for i in range(0, perm.size, b)]


def sampler_for(active: ActiveSet, batch_size: int, rng_seed: int) -> Sampler:
    """Batch stream over one cycle's kept samples."""
    return Sampler(active.kept_ids, batch_size, rng_seed)
