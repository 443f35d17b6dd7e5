"""Welch power spectral density estimation.

Used to check, at desk scale, that batch composition noise carries more
spectral energy than the scaled per-sample signal it rides on.  Segments are
small, so the transform cost is irrelevant; the normalization is chosen so
that a single rectangular segment reproduces the classic periodogram and the
one-sided density integrates (sum times bin width) to the mean square.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

WINDOW_RECTANGULAR = "rectangular"
WINDOW_HANN = "hann"
DETREND_NONE = "none"
DETREND_MEAN = "mean"


@dataclass(frozen=True)
class WelchConfig:
    """Segmentation, windowing and detrending choices for Welch estimates."""

    segment_len: int = 64
    overlap: int = 32
    window: str = WINDOW_HANN
    detrend: str = DETREND_MEAN

    def __post_init__(self) -> None:
        if self.segment_len < 2:
            raise ValueError(f"segment_len must be >= 2, got {self.segment_len}")
        if not 0 <= self.overlap < self.segment_len:
            raise ValueError(
                f"overlap must lie in [0, segment_len), got {self.overlap} for segment_len {self.segment_len}"
            )
        if self.window not in (WINDOW_RECTANGULAR, WINDOW_HANN):
            raise ValueError(f"unknown window {self.window!r}")
        if self.detrend not in (DETREND_NONE, DETREND_MEAN):
            raise ValueError(f"unknown detrend {self.detrend!r}")


@dataclass(frozen=True)
class PsdEstimate:
    """One-sided PSD over normalized frequencies in [0, 0.5] cycles/update."""

    freqs: np.ndarray
    power: np.ndarray
    n_segments: int


@dataclass(frozen=True)
class MeanPsd:
    """Bin-wise mean PSD over a collection of sequences.

    ``n_skipped`` counts sequences too short for even one segment.
    """

    estimate: PsdEstimate
    n_used: int
    n_skipped: int


def _window(cfg: WelchConfig) -> np.ndarray:
    if cfg.window == WINDOW_RECTANGULAR:
        return np.ones(cfg.segment_len)
    # periodic Hann, the usual choice for averaged spectra
    n = np.arange(cfg.segment_len)
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / cfg.segment_len)


def welch_psd(sequence: Sequence[float], cfg: WelchConfig) -> PsdEstimate:
    """Average one-sided periodograms of overlapping windowed segments.

    Density scaling at unit sample rate: each segment contributes
    |rfft(w * seg)|^2 / sum(w^2), doubled everywhere except the DC bin and,
    for even segment lengths, the Nyquist bin.
    """
    x = np.asarray(sequence, dtype=np.float64)
    seg_len = cfg.segment_len
    if x.ndim != 1:
        raise ValueError("welch_psd expects a one-dimensional sequence")
    if x.size < seg_len:
        raise ValueError(f"sequence of length {x.size} is shorter than one segment (need >= {seg_len})")
    hop = seg_len - cfg.overlap
    n_segments = 1 + (x.size - seg_len) // hop
    w = _window(cfg)
    w_power = float(np.sum(w * w))
    n_bins = seg_len // 2 + 1

    acc = np.zeros(n_bins)
    for s in range(n_segments):
        seg = x[s * hop : s * hop + seg_len]
        if cfg.detrend == DETREND_MEAN:
            seg = seg - seg.mean()
        spec = np.fft.rfft(seg * w)
        p = (spec.real**2 + spec.imag**2) / w_power
        p[1:] *= 2.0
        if seg_len % 2 == 0:
            p[-1] /= 2.0  # Nyquist bin is not mirrored
        acc += p

    freqs = np.arange(n_bins) / seg_len
    return PsdEstimate(freqs=freqs, power=acc / n_segments, n_segments=n_segments)


def mean_psd(sequences: Iterable[Sequence[float]], cfg: WelchConfig) -> MeanPsd:
    """Bin-wise arithmetic mean of per-sequence Welch estimates.

    Sequences shorter than one segment are skipped and counted; Welch itself
    ignores any trailing partial segment, so unequal lengths need no other
    alignment.
    """
    acc: np.ndarray | None = None
    freqs: np.ndarray | None = None
    n_used = 0
    n_skipped = 0
    min_segments = 0
    for seq in sequences:
        arr = np.asarray(seq, dtype=np.float64)
        if arr.size < cfg.segment_len:
            n_skipped += 1
            continue
        est = welch_psd(arr, cfg)
        if acc is None:
            acc = est.power.copy()
            freqs = est.freqs
            min_segments = est.n_segments
        else:
            acc += est.power
            min_segments = min(min_segments, est.n_segments)
        n_used += 1
    if acc is None or freqs is None:
        raise ValueError("mean_psd needs at least one sequence of segment_len or more")
    return MeanPsd(
        estimate=PsdEstimate(freqs=freqs, power=acc / n_used, n_segments=min_segments),
        n_used=n_used,
        n_skipped=n_skipped,
    )


@dataclass(frozen=True)
class SeparationReport:
    """Per-bin noise/signal power ratios with summary flags.

    ``all_bins_noise_dominant`` is a strict comparison: noise power above
    signal power at every bin.  The quartile ratios are means of the per-bin
    ratios over the top and bottom quarters of the frequency axis.
    """

    ratios: np.ndarray
    all_bins_noise_dominant: bool
    high_freq_ratio: float
    low_freq_ratio: float


def separation_report(signal_psd: PsdEstimate, noise_psd: PsdEstimate) -> SeparationReport:
    """Compare a noise PSD against a signal PSD on a shared frequency grid."""
    if signal_psd.freqs.shape != noise_psd.freqs.shape or not np.array_equal(
        signal_psd.freqs, noise_psd.freqs
    ):
        raise ValueError("PSD frequency grids do not match")
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = noise_psd.power / signal_psd.power
    dominant = bool(np.all(noise_psd.power > signal_psd.power))
    q = max(1, ratios.size // 4)
    return SeparationReport(
        ratios=ratios,
        all_bins_noise_dominant=dominant,
        high_freq_ratio=float(np.mean(ratios[-q:])),
        low_freq_ratio=float(np.mean(ratios[:q])),
    )
