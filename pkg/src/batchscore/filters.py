"""Signal view of the score recurrence.

From one sample's perspective the mean batch loss splits into a scaled own
contribution (signal) and the averaged contribution of its co-sampled items
(batch composition noise).  The conditional EMA that drives the scores is a
first-order IIR low-pass filter over the sequence of batch losses the sample
observed; this module holds that filter's impulse response, closed convolution
form, and frequency response, plus the batch-loss decomposition they act on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class Decomposition:
    """Split of one batch's mean loss relative to a target sample.

    signal + noise reconstructs the batch mean loss exactly.
    """

    signal: float
    noise: float
    batch_size: int


@dataclass(frozen=True)
class FilterSpec:
    """First-order low-pass filter induced by an EMA with decay ``alpha``."""

    alpha: float

    def __post_init__(self) -> None:
        if not (isinstance(self.alpha, (int, float)) and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be a finite real, got {self.alpha!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")


@dataclass(frozen=True)
class ObservationSequence:
    """Batch losses observed by one sample, in participation order.

    ``values[0]`` is the loss of the sample's first observed batch (update
    index k=1); ``s0`` is the score held before that first update.
    """

    values: tuple[float, ...]
    s0: float

    @classmethod
    def from_iterable(cls, values: Sequence[float], s0: float) -> "ObservationSequence":
        return cls(tuple(float(v) for v in values), float(s0))

    def __len__(self) -> int:
        return len(self.values)


def decompose_batch(per_sample_losses: Sequence[float], target_index: int) -> Decomposition:
    """Split a batch's per-sample losses around one member.

    signal = losses[target] / B, noise = (sum of the other B-1 losses) / B.
    """
    losses = np.asarray(per_sample_losses, dtype=np.float64)
    b = losses.size
    if b == 0:
        raise ValueError("cannot decompose an empty batch")
    if not 0 <= target_index < b:
        raise ValueError(f"target_index {target_index} out of range for batch of size {b}")
    total = float(losses.sum())
    own = float(losses[target_index])
    return Decomposition(signal=own / b, noise=(total - own) / b, batch_size=b)


def impulse_response(spec: FilterSpec, n: int) -> float:
    """h[n] = (1 - alpha) * alpha**n for n >= 0 (zero for negative n)."""
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    return (1.0 - spec.alpha) * spec.alpha**n


def convolution_score(seq: ObservationSequence, spec: FilterSpec, k: int) -> float:
    """Score after the k-th update, in closed convolution form.

    Evaluates sum_{j=0}^{k-1} h[j] * values[k-1-j] + alpha**k * s0, which
    equals unrolling the recursive EMA k steps from s0.  Direct summation in
    double precision; inputs at this scale are short enough that exactness
    beats speed.
    """
    if not 1 <= k <= len(seq.values):
        raise ValueError(f"k={k} out of range for a sequence of {len(seq.values)} observations")
    alpha = spec.alpha
    acc = 0.0
    for j in range(k):
        acc += (1.0 - alpha) * alpha**j * seq.values[k - 1 - j]
    return acc + alpha**k * seq.s0


def convolution_scores(seq: ObservationSequence, spec: FilterSpec) -> np.ndarray:
    """Convolution-form scores for every update index k = 1..len(seq).

    Bulk variant of :func:`convolution_score`; same sums evaluated with one
    direct convolution pass.
    """
    n = len(seq.values)
    if n == 0:
        return np.zeros(0)
    alpha = spec.alpha
    values = np.asarray(seq.values, dtype=np.float64)
    h = (1.0 - alpha) * alpha ** np.arange(n)
    conv = np.convolve(values, h)[:n]
    return conv + alpha ** np.arange(1, n + 1) * seq.s0


def frequency_response_mag(spec: FilterSpec, omega: float) -> float:
    """Magnitude of the filter's frequency response at ``omega`` in [0, pi].

    |H(e^{j w})| = (1 - alpha) / sqrt(1 - 2 alpha cos w + alpha^2).  The
    denominator is evaluated as (1-alpha)^2 + 2 alpha (1-cos w), which is
    algebraically identical but avoids cancellation near w = 0.
    """
    if not 0.0 <= omega <= math.pi:
        raise ValueError(f"omega must lie in [0, pi], got {omega}")
    alpha = spec.alpha
    denom = math.sqrt((1.0 - alpha) ** 2 + 2.0 * alpha * (1.0 - math.cos(omega)))
    return (1.0 - alpha) / denom


def frequency_response_grid(spec: FilterSpec, n_points: int) -> tuple[np.ndarray, np.ndarray]:
    """(omega, |H|) on a uniform grid over [0, pi], endpoints included."""
    if n_points < 2:
        raise ValueError(f"need at least 2 grid points, got {n_points}")
    omegas = np.linspace(0.0, math.pi, n_points)
    mags = np.array([frequency_response_mag(spec, float(w)) for w in omegas])
    return omegas, mags


def decompose_all(records, n_samples: int) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Signal and noise sequences for every sample, in one pass over the log.

    Returns two lists indexed by sample id; samples absent from the log get
    empty arrays.  Equivalent to calling :func:`decompose_run` per id, but
    linear in the log size.
    """
    signal: list[list[float]] = [[] for _ in range(n_samples)]
    noise: list[list[float]] = [[] for _ in range(n_samples)]
    for rec in records:
        if rec.per_sample_losses is None:
            raise ValueError(f"record at step {rec.step} has no per-sample losses; instrumented log required")
        per = np.asarray(rec.per_sample_losses, dtype=np.float64)
        b = per.size
        own = per / b
        other = (per.sum() - per) / b
        for j, i in enumerate(rec.indices):
            signal[i].append(own[j])
            noise[i].append(other[j])
    return (
        [np.asarray(s, dtype=np.float64) for s in signal],
        [np.asarray(n, dtype=np.float64) for n in noise],
    )


def decompose_run(records, sample_id: int) -> tuple[np.ndarray, np.ndarray]:
    """Signal and noise sequences for one sample over an instrumented run.

    ``records`` is an iterable of log records carrying ``indices`` and
    ``per_sample_losses`` (instrumented mode only).  For each batch containing
    ``sample_id``, emits one (signal, noise) pair in step order.  A sample that
    never appears yields two empty arrays.
    """
    signal: list[float] = []
    noise: list[float] = []
    for rec in records:
        if rec.per_sample_losses is None:
            raise ValueError(f"record at step {rec.step} has no per-sample losses; instrumented log required")
        pos = np.flatnonzero(rec.indices == sample_id)
        if pos.size == 0:
            continue
        d = decompose_batch(rec.per_sample_losses, int(pos[0]))
        signal.append(d.signal)
        noise.append(d.noise)
    return np.asarray(signal, dtype=np.float64), np.asarray(noise, dtype=np.float64)
