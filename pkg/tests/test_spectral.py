"""Welch estimator against a brute-force DFT oracle."""

import numpy as np
import pytest

from batchscore.spectral import (
    MeanPsd,
    WelchConfig,
    mean_psd,
    separation_report,
    welch_psd,
)


def periodogram_oracle(x):
    """One-sided density periodogram by explicit DFT matrix; O(n^2) on purpose."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    k = np.arange(n)
    dft = np.exp(-2j * np.pi * np.outer(k, k) / n)
    spectrum = dft @ x
    power_two_sided = np.abs(spectrum) ** 2 / n
    n_bins = n // 2 + 1
    power = power_two_sided[:n_bins].copy()
    power[1:] *= 2.0
    if n % 2 == 0:
        power[-1] /= 2.0
    return power


def rect_cfg(seg_len):
    return WelchConfig(segment_len=seg_len, overlap=0, window="rectangular", detrend="none")


class TestWelchCorrectness:
    def test_single_segment_rectangular_equals_periodogram(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            n = int(rng.integers(8, 128))
            x = rng.normal(0, 3, size=n)
            est = welch_psd(x, rect_cfg(n))
            oracle = periodogram_oracle(x)
            np.testing.assert_allclose(est.power, oracle, rtol=1e-9, atol=1e-12)
            assert est.n_segments == 1

    def test_parseval_consistency(self):
        """Sum of one-sided density bins times bin width equals the mean square."""
        rng = np.random.default_rng(1)
        for _ in range(25):
            n = int(rng.integers(8, 200))
            x = rng.normal(1.0, 2.0, size=n)
            est = welch_psd(x, rect_cfg(n))
            assert est.power.sum() / n == pytest.approx(np.mean(x * x), rel=1e-9)

    def test_constant_sequence_detrended_is_silent(self):
        cfg = WelchConfig(segment_len=16, overlap=8, window="hann", detrend="mean")
        est = welch_psd(np.full(64, 3.25), cfg)
        assert np.all(est.power <= 1e-20)

    def test_bin_aligned_sinusoid_concentrates(self):
        n = 64
        m = 5
        t = np.arange(n)
        x = np.sin(2 * np.pi * m * t / n)
        est = welch_psd(x, rect_cfg(n))
        others = np.delete(est.power, m)
        assert est.power[m] > 1e6 * np.max(others + 1e-300)
        assert int(np.argmax(est.power)) == m

    def test_too_short_sequence_names_requirement(self):
        with pytest.raises(ValueError, match="shorter than one segment"):
            welch_psd(np.zeros(10), WelchConfig(segment_len=16, overlap=0))

    def test_frequency_grid(self):
        est = welch_psd(np.random.default_rng(2).normal(size=128), WelchConfig(64, 32))
        assert est.freqs[0] == 0.0
        assert est.freqs[-1] == 0.5
        assert np.all(np.diff(est.freqs) > 0)
        assert np.all(est.power >= 0)
        assert np.all(np.isfinite(est.power))

    def test_segment_counting(self):
        est = welch_psd(np.zeros(128), WelchConfig(segment_len=64, overlap=32, detrend="none"))
        assert est.n_segments == 3  # starts 0, 32, 64


class TestVarianceReduction:
    def test_averaging_beats_single_periodogram_on_white_noise(self):
        """Median across seeds of var(welch bins)/var(periodogram bins) < 1."""
        rng = np.random.default_rng(3)
        n = 512
        ratios = []
        for _ in range(100):
            x = rng.standard_normal(n)
            welch = welch_psd(x, WelchConfig(segment_len=64, overlap=32, window="hann", detrend="none"))
            single = welch_psd(x, rect_cfg(n))
            ratios.append(np.var(welch.power[1:-1]) / np.var(single.power[1:-1]))
        assert np.median(ratios) < 1.0


class TestMeanPsd:
    def test_single_sequence_identity(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=96)
        cfg = WelchConfig(32, 16)
        alone = welch_psd(x, cfg)
        averaged = mean_psd([x], cfg)
        assert isinstance(averaged, MeanPsd)
        np.testing.assert_array_equal(averaged.estimate.power, alone.power)
        assert averaged.n_used == 1 and averaged.n_skipped == 0

    def test_two_identical_sequences(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=96)
        cfg = WelchConfig(32, 16)
        np.testing.assert_allclose(
            mean_psd([x, x], cfg).estimate.power, welch_psd(x, cfg).power, rtol=1e-15
        )

    def test_scaling_property(self):
        """mean(PSD(c x), PSD(x)) equals ((c^2 + 1)/2) PSD(x)."""
        rng = np.random.default_rng(6)
        x = rng.normal(size=128)
        c = 3.0
        cfg = WelchConfig(32, 16, window="rectangular", detrend="none")
        combined = mean_psd([c * x, x], cfg).estimate.power
        np.testing.assert_allclose(combined, (c**2 + 1) / 2 * welch_psd(x, cfg).power, rtol=1e-12)

    def test_short_sequences_are_skipped_and_counted(self):
        rng = np.random.default_rng(7)
        cfg = WelchConfig(32, 16)
        res = mean_psd([rng.normal(size=64), rng.normal(size=10)], cfg)
        assert res.n_used == 1 and res.n_skipped == 1

    def test_empty_collection_rejected(self):
        with pytest.raises(ValueError):
            mean_psd([], WelchConfig(32, 16))
        with pytest.raises(ValueError):
            mean_psd([np.zeros(8)], WelchConfig(32, 16))


class TestSeparationReport:
    def test_identical_inputs(self):
        est = welch_psd(np.random.default_rng(8).normal(size=128), WelchConfig(32, 16, detrend="none"))
        rep = separation_report(est, est)
        np.testing.assert_allclose(rep.ratios, 1.0, atol=1e-15)
        assert not rep.all_bins_noise_dominant
        assert rep.high_freq_ratio == pytest.approx(1.0)
        assert rep.low_freq_ratio == pytest.approx(1.0)

    def test_doubled_noise_dominates(self):
        from batchscore.spectral import PsdEstimate

        est = welch_psd(np.random.default_rng(9).normal(size=128) + 5, WelchConfig(32, 16, detrend="none"))
        doubled = PsdEstimate(est.freqs, 2.0 * est.power, est.n_segments)
        rep = separation_report(est, doubled)
        np.testing.assert_allclose(rep.ratios, 2.0, rtol=1e-12)
        assert rep.all_bins_noise_dominant

    def test_grid_mismatch_rejected(self):
        rng = np.random.default_rng(10)
        a = welch_psd(rng.normal(size=128), WelchConfig(32, 16))
        b = welch_psd(rng.normal(size=128), WelchConfig(16, 8))
        with pytest.raises(ValueError, match="grids"):
            separation_report(a, b)


class TestWelchConfigValidation:
    def test_overlap_bounds(self):
        with pytest.raises(ValueError):
            WelchConfig(segment_len=32, overlap=32)
        with pytest.raises(ValueError):
            WelchConfig(segment_len=32, overlap=-1)

    def test_window_and_detrend_names(self):
        with pytest.raises(ValueError):
            WelchConfig(window="hamming")
        with pytest.raises(ValueError):
            WelchConfig(detrend="linear")
