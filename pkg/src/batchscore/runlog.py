"""Newline-delimited batch-loss logs: emission, parsing, and replay.

One record per training step, each line a flat JSON object with keys
``step``, ``indices``, ``mean_loss`` and, for instrumented runs, aligned
``per_sample_losses``.  Floats are written at full round-trip precision so a
replayed log reproduces the producing run's score table bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, TextIO

import numpy as np

from .pruning import ActiveSet, CycleSchedule, PrunePolicy, select_active_set
from .scores import BatchRecord, EmaConfig, ScoreTable, apply_batch

MEAN_CONSISTENCY_TOL = 1e-9


@dataclass(frozen=True)
class LogRecord:
    """One step of a run: batch membership, mean loss, optional per-sample losses."""

    step: int
    indices: np.ndarray
    mean_loss: float
    per_sample_losses: np.ndarray | None = None

    def validate(self) -> "LogRecord":
        if self.step < 0:
            raise ValueError(f"step must be non-negative, got {self.step}")
        if self.indices.ndim != 1 or self.indices.size < 1:
            raise ValueError(f"step {self.step}: indices must be a non-empty list")
        if np.unique(self.indices).size != self.indices.size:
            raise ValueError(f"step {self.step}: duplicate indices")
        if not math.isfinite(self.mean_loss):
            raise ValueError(f"step {self.step}: mean_loss must be finite, got {self.mean_loss!r}")
        if self.per_sample_losses is not None:
            if self.per_sample_losses.size != self.indices.size:
                raise ValueError(
                    f"step {self.step}: {self.per_sample_losses.size} per-sample losses "
                    f"for {self.indices.size} indices"
                )
            gap = abs(float(self.per_sample_losses.mean()) - self.mean_loss)
            if gap > MEAN_CONSISTENCY_TOL:
                raise ValueError(
                    f"step {self.step}: per_sample_losses mean differs from mean_loss by {gap:.3e}"
                )
        return self


def serialize_record(rec: LogRecord) -> str:
    payload: dict = {
        "step": rec.step,
        "indices": [int(i) for i in rec.indices],
        "mean_loss": rec.mean_loss,
    }
    if rec.per_sample_losses is not None:
        payload["per_sample_losses"] = [float(v) for v in rec.per_sample_losses]
    return json.dumps(payload)


def write_log(records: Iterable[LogRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(serialize_record(rec) + "\n")


def _parse_line(line: str, lineno: int, last_step: int) -> LogRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ValueError(f"line {lineno}: malformed record: {exc}") from exc
    if not isinstance(obj, dict):
        raise ValueError(f"line {lineno}: expected an object, got {type(obj).__name__}")
    missing = {"step", "indices", "mean_loss"} - obj.keys()
    if missing:
        raise ValueError(f"line {lineno}: missing keys {sorted(missing)}")
    unknown = obj.keys() - {"step", "indices", "mean_loss", "per_sample_losses"}
    if unknown:
        raise ValueError(f"line {lineno}: unknown keys {sorted(unknown)}")
    try:
        per = obj.get("per_sample_losses")
        rec = LogRecord(
            step=int(obj["step"]),
            indices=np.asarray(obj["indices"], dtype=np.int64),
            mean_loss=float(obj["mean_loss"]),
            per_sample_losses=None if per is None else np.asarray(per, dtype=np.float64),
        ).validate()
    except (TypeError, ValueError) as exc:
        raise ValueError(f"line {lineno}: {exc}") from exc
    if rec.step <= last_step:
        raise ValueError(f"line {lineno}: step {rec.step} does not increase (previous {last_step})")
    return rec


def parse_log(path: str | Path) -> Iterator[LogRecord]:
    """Stream records from a log file, validating as it goes."""
    with open(path, "r", encoding="utf-8") as fh:
        yield from parse_log_lines(fh)


def parse_log_lines(lines: Iterable[str]) -> Iterator[LogRecord]:
    last_step = -1
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        rec = _parse_line(line, lineno, last_step)
        last_step = rec.step
        yield rec


@dataclass(frozen=True)
class ReplayReport:
    """Summary of one replayed log and its next-cycle decisions."""

    n_samples: int
    n_records: int
    kept_count: int
    pruned_count: int
    unscored_count: int


@dataclass(frozen=True)
class ReplayResult:
    table: ScoreTable
    active: ActiveSet
    report: ReplayReport


def replay(
    records: Iterable[LogRecord],
    ema: EmaConfig,
    policy: PrunePolicy,
    n_samples: int | None = None,
    schedule: CycleSchedule | None = None,
    cycle: int = 0,
    seed: int = 0,
) -> ReplayResult:
    """Rebuild the score table from a log, then make one cycle's decisions.

    ``n_samples`` defaults to one past the largest index seen, which suits
    logs produced by a full pass over the data.
    """
    recs = list(records)
    if not recs:
        raise ValueError("cannot replay an empty log")
    if n_samples is None:
        n_samples = max(int(r.indices.max()) for r in recs) + 1
    table = ScoreTable.for_config(n_samples, ema)
    for rec in recs:
        apply_batch(table, BatchRecord(rec.step, rec.indices, rec.mean_loss), ema)
    active = select_active_set(table, policy, cycle, schedule or CycleSchedule(), seed)
    unscored = int(np.count_nonzero(~table.initialized))
    return ReplayResult(
        table=table,
        active=active,
        report=ReplayReport(
            n_samples=n_samples,
            n_records=len(recs),
            kept_count=active.kept_count,
            pruned_count=n_samples - active.kept_count,
            unscored_count=unscored,
        ),
    )


def write_scores_csv(table: ScoreTable, out: TextIO) -> None:
    out.write("id,score,update_count\n")
    for i in range(len(table)):
        out.write(f"{i},{float(table.scores[i])!r},{int(table.update_count[i])}\n")


def write_decisions_csv(active: ActiveSet, out: TextIO) -> None:
    out.write("id,kept,rescale\n")
    for i in range(active.n_samples):
        kept = int(active.kept_mask[i])
        out.write(f"{i},{kept},{float(active.factors[i])!r}\n")
