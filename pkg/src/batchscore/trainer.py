"""Desk-scale training harness with score-driven pruning wired in.

``run_experiment`` is the full loop: per cycle select the active set, per
epoch stream seeded batches, per step score the mean batch loss through the
handler and take a (possibly rescaled) SGD step.  ``run_plain_sgd`` is the
same loop with no scoring wiring at all, kept separate so the no-op-policy
transparency check compares against a genuinely unaware trainer.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .handler import ScoreHandler
from .models import (
    Dataset,
    DivergenceError,
    ModelSpec,
    accuracy,
    build_model,
    mean_batch_loss,
    sgd_step,
)
from .pruning import ActiveSet, CycleSchedule, NoPrune, PrunePolicy, Sampler
from .runlog import LogRecord
from .scores import EmaConfig, ScoreTable


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 0.1
    ema: EmaConfig = field(default_factory=lambda: EmaConfig(alpha=0.7))
    policy: PrunePolicy = field(default_factory=NoPrune)
    cycle_len_epochs: int = 1
    instrument_per_sample: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")

    @property
    def schedule(self) -> CycleSchedule:
        return CycleSchedule(cycle_len_epochs=self.cycle_len_epochs, total_epochs=self.epochs)


@dataclass
class RunMetrics:
    final_train_acc: float
    final_test_acc: float
    pruned_percent: float
    wall_time: float
    loss_curve: np.ndarray
    score_table_final: ScoreTable | None
    active_history: list[ActiveSet]
    loss_log: list[LogRecord] | None
    skipped_visits: int
    param_trajectory: np.ndarray


def _flat_params(model) -> np.ndarray:
    return np.concatenate([model.params[k].ravel() for k in sorted(model.params)])


def _check_batch_size(cfg: TrainConfig, dataset: Dataset) -> None:
    if cfg.batch_size > dataset.n_train:
        raise ValueError(
            f"batch_size {cfg.batch_size} exceeds the {dataset.n_train} training samples"
        )


def run_experiment(dataset: Dataset, model_spec: ModelSpec, cfg: TrainConfig) -> RunMetrics:
    """Train with score-driven pruning and report run metrics.

    Divergence aborts with the failing epoch and step in the message; nothing
    is clipped silently.
    """
    _check_batch_size(cfg, dataset)
    started = time.perf_counter()
    X, y = dataset.X_train, dataset.y_train
    model = build_model(model_spec, X.shape[1], int(y.max()) + 1)
    handler = ScoreHandler(
        dataset.n_train, cfg.ema, cfg.policy, cfg.schedule, seed=cfg.seed
    )
    loss_log: list[LogRecord] | None = [] if cfg.instrument_per_sample else None
    loss_curve = np.zeros(cfg.epochs)
    trajectory = []
    skipped_visits = 0
    step = 0

    for epoch in range(cfg.epochs):
        epoch_losses = []
        for ids in handler.epoch_batches(epoch, cfg.batch_size):
            try:
                mean, per_sample = mean_batch_loss(model, X[ids], y[ids])
                if loss_log is not None:
                    loss_log.append(
                        LogRecord(step=step, indices=ids, mean_loss=mean, per_sample_losses=per_sample)
                    )
                handler.update(mean)
                sgd_step(model, X[ids], y[ids], cfg.learning_rate, handler.last_batch_scale)
            except DivergenceError as exc:
                raise DivergenceError(f"epoch {epoch}, step {step}: {exc}") from exc
            epoch_losses.append(mean)
            step += 1
        loss_curve[epoch] = float(np.mean(epoch_losses))
        trajectory.append(_flat_params(model))
        assert handler.active is not None
        skipped_visits += dataset.n_train - handler.active.kept_count

    return RunMetrics(
        final_train_acc=accuracy(model, X, y),
        final_test_acc=accuracy(model, dataset.X_test, dataset.y_test),
        pruned_percent=handler.pruned_percent(),
        wall_time=time.perf_counter() - started,
        loss_curve=loss_curve,
        score_table_final=handler.table,
        active_history=handler.active_history,
        loss_log=loss_log,
        skipped_visits=skipped_visits,
        param_trajectory=np.vstack(trajectory),
    )


def run_plain_sgd(dataset: Dataset, model_spec: ModelSpec, cfg: TrainConfig) -> RunMetrics:
    """Reference loop with no scoring, selection, or rescaling wiring."""
    _check_batch_size(cfg, dataset)
    started = time.perf_counter()
    X, y = dataset.X_train, dataset.y_train
    model = build_model(model_spec, X.shape[1], int(y.max()) + 1)
    sampler = Sampler(np.arange(dataset.n_train), cfg.batch_size, cfg.seed)
    loss_curve = np.zeros(cfg.epochs)
    trajectory = []
    step = 0

    for epoch in range(cfg.epochs):
        epoch_losses = []
        for ids in sampler.epoch(epoch):
            try:
                mean, _ = mean_batch_loss(model, X[ids], y[ids])
                sgd_step(model, X[ids], y[ids], cfg.learning_rate, 1.0)
            except DivergenceError as exc:
                raise DivergenceError(f"epoch {epoch}, step {step}: {exc}") from exc
            epoch_losses.append(mean)
            step += 1
        loss_curve[epoch] = float(np.mean(epoch_losses))
        trajectory.append(_flat_params(model))

    return RunMetrics(
        final_train_acc=accuracy(model, X, y),
        final_test_acc=accuracy(model, dataset.X_test, dataset.y_test),
        pruned_percent=0.0,
        wall_time=time.perf_counter() - started,
        loss_curve=loss_curve,
        score_table_final=None,
        active_history=[],
        loss_log=None,
        skipped_visits=0,
        param_trajectory=np.vstack(trajectory),
    )


def no_ema_config(cfg: TrainConfig) -> TrainConfig:
    """Ablation preset: the score is only the last observed batch loss.

    Realized as alpha = 0, which collapses the EMA step to the newest value;
    all other wiring is shared.
    """
    return replace(cfg, ema=replace(cfg.ema, alpha=0.0))


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    final_test_acc: float
    pruned_percent: float


def alpha_sweep(
    dataset: Dataset, model_spec: ModelSpec, base_cfg: TrainConfig, alphas: list[float]
) -> list[SweepRow]:
    """One run per decay factor with everything else held fixed."""
    rows = []
    for alpha in alphas:
        cfg = replace(base_cfg, ema=replace(base_cfg.ema, alpha=float(alpha)))
        metrics = run_experiment(dataset, model_spec, cfg)
        rows.append(
            SweepRow(
                alpha=float(alpha),
                final_test_acc=metrics.final_test_acc,
                pruned_percent=metrics.pruned_percent,
            )
        )
    return rows
