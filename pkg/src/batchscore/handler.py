"""Drop-in training-loop handler: scoring, selection, and sampling in one.

The integration shape is three lines in the host loop: create the handler,
iterate its epoch batches instead of a plain shuffle, and route the mean batch
loss through ``update`` before backpropagating what it returns.  ``update``
folds the loss into the participating samples' scores and applies the active
policy's batch-level loss rescale; it never needs a per-sample loss.
"""

from __future__ import annotations

from typing import Iterator

import numpy as np

from .pruning import (
    ActiveSet,
    CycleSchedule,
    NoPrune,
    PrunePolicy,
    Sampler,
    pruned_percent,
    select_active_set,
)
from .scores import BatchRecord, EmaConfig, ScoresView, ScoreTable, apply_batch, scores_snapshot


class ScoreHandler:
    """Owns the score table plus the per-cycle selection and batch stream.

    Single-writer contract: ``update`` calls (and the iteration of
    ``epoch_batches``, which installs pending batches) must be serialized;
    ``snapshot`` returns an independent copy and may be read at any time
    between writes.
    """

    def __init__(
        self,
        n_samples: int,
        ema: EmaConfig,
        policy: PrunePolicy | None = None,
        schedule: CycleSchedule | None = None,
        seed: int = 0,
    ):
        self.ema = ema
        self.policy = policy if policy is not None else NoPrune()
        self.schedule = schedule if schedule is not None else CycleSchedule()
        self.seed = int(seed)
        self.table = ScoreTable.for_config(n_samples, ema)
        self.active: ActiveSet | None = None
        self.active_history: list[ActiveSet] = []
        self.step_index = 0
        self.last_batch_scale = 1.0
        self._pending: np.ndarray | None = None

    @property
    def n_samples(self) -> int:
        return len(self.table)

    @property
    def has_pending(self) -> bool:
        return self._pending is not None

    def start_cycle(self, cycle: int) -> ActiveSet:
        """Recompute keep/prune decisions from the current scores."""
        self.active = select_active_set(self.table, self.policy, cycle, self.schedule, self.seed)
        self.active_history.append(self.active)
        return self.active

    def epoch_batches(self, epoch: int, batch_size: int) -> Iterator[np.ndarray]:
        """Seeded batch stream for one epoch, reselecting at cycle boundaries.

        Each yielded index array is installed as the pending batch; the host
        must call ``update`` once per batch before pulling the next one.
        """
        cycle = self.schedule.cycle_of_epoch(epoch)
        if self.active is None or self.active.cycle_index != cycle:
            self.start_cycle(cycle)
        assert self.active is not None
        sampler = Sampler(self.active.kept_ids, batch_size, self.seed)
        for ids in sampler.epoch(epoch):
            self.install_batch(ids)
            yield ids

    def install_batch(self, sample_ids: np.ndarray) -> None:
        """Arm the handler with the index set of the batch about to be scored."""
        if self._pending is not None:
            raise RuntimeError("batch already in flight; call update() before installing another")
        self._pending = np.asarray(sample_ids, dtype=np.int64)

    def update(self, mean_batch_loss: float) -> float:
        """Score the pending batch and return the loss to backpropagate.

        The return value is the input scaled by the mean rescale factor of the
        batch's samples (1.0 when no rescaling policy is active).
        """
        if self._pending is None:
            raise RuntimeError("no batch in flight")
        ids = self._pending
        self._pending = None
        record = BatchRecord(self.step_index, ids, mean_batch_loss)
        apply_batch(self.table, record, self.ema)
        self.step_index += 1
        if self.active is not None:
            self.last_batch_scale = self.active.batch_scale(ids)
        else:
            self.last_batch_scale = 1.0
        return mean_batch_loss * self.last_batch_scale

    def snapshot(self) -> ScoresView:
        return scores_snapshot(self.table)

    def pruned_percent(self) -> float:
        """Visits-weighted pruned share over the cycles seen so far."""
        if not self.active_history:
            return 0.0
        return pruned_percent(self.active_history, self.n_samples)
