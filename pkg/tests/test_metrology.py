"""Estimator unit tests: PSD, counter, tracking filter, Allan deviation."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fiberlink import (
    PhaseSeries,
    PowerLawNoiseModel,
    PsdEstimate,
    adev_of_phase,
    allan_deviation,
    integrated_rms_phase,
    pi_counter,
    rejection_spectrum,
    synth_power_law_phase_noise,
    tracking_filter,
    welch_psd,
)

NU0 = 1.944e14


def white_phase(h0, fs, n, seed):
    return synth_power_law_phase_noise(PowerLawNoiseModel.white(h0),
                                       fs, n, seed)


def test_sinusoid_carries_half_amplitude_squared():
    fs = 1024.0
    t = np.arange(2 ** 17) / fs
    series = PhaseSeries(np.sin(2.0 * np.pi * 32.0 * t), fs)
    psd = welch_psd(series)
    rms = integrated_rms_phase(psd, 28.0, 36.0)
    assert rms ** 2 == pytest.approx(0.5, rel=0.05)


def test_psd_integral_matches_the_variance():
    series = white_phase(2.0, 1000.0, 2 ** 20, 11)
    psd = welch_psd(series)
    assert np.trapezoid(psd.psd, psd.freq_hz) == pytest.approx(
        float(np.mean(series.samples ** 2)), rel=0.10)


def test_welch_psd_validation():
    series = white_phase(1.0, 100.0, 256, 0)
    with pytest.raises(ValueError, match="shorter than one segment"):
        welch_psd(series, segment_length=512)
    with pytest.raises(ValueError, match="overlap_fraction"):
        welch_psd(series, overlap_fraction=0.95)


def test_psd_estimate_validation():
    with pytest.raises(ValueError, match="differ in shape"):
        PsdEstimate(np.arange(4.0), np.ones(3), 1.0, "hann", 1)
    with pytest.raises(ValueError, match="increasing"):
        PsdEstimate(np.zeros(4), np.ones(4), 1.0, "hann", 1)
    with pytest.raises(ValueError, match=">= 0"):
        PsdEstimate(np.arange(4.0), -np.ones(4), 1.0, "hann", 1)


def test_counter_reads_a_frequency_ramp_exactly():
    fs = 1000.0
    offset_hz = 5.0
    t = np.arange(20_000) / fs
    series = PhaseSeries(2.0 * np.pi * offset_hz * t, fs)
    y = pi_counter(series, 0.25, NU0)
    assert np.allclose(y.y, offset_hz / NU0, rtol=1e-12)
    assert y.gate_s == 0.25


def test_counter_readings_telescope():
    series = white_phase(1.0, 1000.0, 30_000, 12)
    fine = pi_counter(series, 0.1, NU0)
    coarse = pi_counter(series, 0.5, NU0)
    grouped = fine.y[:coarse.y.size * 5].reshape(-1, 5).mean(axis=1)
    assert np.allclose(grouped, coarse.y, rtol=1e-9, atol=1e-25)


def test_counter_validation():
    series = white_phase(1.0, 1000.0, 5000, 1)
    with pytest.raises(ValueError, match="integer number of samples"):
        pi_counter(series, 0.0103, NU0)
    with pytest.raises(ValueError, match="shorter than one sample"):
        pi_counter(series, 1e-4, NU0)
    with pytest.raises(ValueError, match="fewer than two gates"):
        pi_counter(series, 4.0, NU0)


def test_tracking_filter_passes_dc_and_rejects_out_of_band():
    fs = 10_000.0
    const = PhaseSeries(np.full(10_000, 2.7), fs)
    out = tracking_filter(const, 10.0)
    assert np.allclose(out.samples, 2.7, rtol=1e-9)
    t = np.arange(100_000) / fs
    tone = PhaseSeries(np.sin(2.0 * np.pi * 1000.0 * t), fs)
    filtered = tracking_filter(tone, 10.0)
    # two poles two decades below the tone: ~80 dB amplitude suppression
    assert np.max(np.abs(filtered.samples[1000:])) < 1e-3
    with pytest.raises(ValueError, match="bandwidth"):
        tracking_filter(const, 0.0)
    with pytest.raises(ValueError, match="bandwidth"):
        tracking_filter(const, fs)


def test_tracking_filter_equivalent_noise_bandwidth():
    fs = 10_000.0
    fc = 10.0
    series = white_phase(1.0, fs, 2 ** 22, 14)
    out = tracking_filter(series, fc)
    # the filter starts settled at sample 0, a relaxation that inflates the
    # output variance; discard the first 0.5 s before estimating
    drop = int(0.5 * fs)
    enb_hz = (np.mean(out.samples[drop:] ** 2)
              / np.mean(series.samples[drop:] ** 2)) * (fs / 2.0)
    assert enb_hz == pytest.approx(math.pi / 4.0 * fc, rel=0.05)


def test_allan_deviation_counts_and_known_sequence():
    # alternating +1/-1 fractional frequency: second differences are +-2
    y = np.tile([1.0, -1.0], 50)
    from fiberlink import FractionalFreqSeries
    series = FractionalFreqSeries(y, 1.0, NU0)
    result = allan_deviation(series, [1.0])
    assert result.adev[0] == pytest.approx(math.sqrt(2.0))
    assert result.count[0] == y.size - 2 + 1
    assert result.error_bars()[0] == pytest.approx(
        result.adev[0] / math.sqrt(result.count[0]))


def test_allan_deviation_validation():
    from fiberlink import FractionalFreqSeries
    series = FractionalFreqSeries(np.ones(100), 1.0, NU0)
    with pytest.raises(ValueError, match="integer multiple"):
        allan_deviation(series, [1.5])
    with pytest.raises(ValueError, match="insufficient data"):
        allan_deviation(series, [50.0])


def test_integrated_rms_of_a_flat_psd():
    f = np.linspace(0.0, 500.0, 2001)
    psd = PsdEstimate(f, np.full_like(f, 0.04), 0.25, "hann", 1)
    assert integrated_rms_phase(psd, 1.0, 101.0) == pytest.approx(
        math.sqrt(0.04 * 100.0), rel=1e-6)
    with pytest.raises(ValueError, match="f1 < f2"):
        integrated_rms_phase(psd, 10.0, 10.0)
    with pytest.raises(ValueError, match="outside"):
        integrated_rms_phase(psd, 1.0, 600.0)


def test_rejection_spectrum_identities():
    f = np.linspace(0.0, 10.0, 11)
    free = PsdEstimate(f, np.full_like(f, 4.0), 1.0, "hann", 1)
    comp = PsdEstimate(f, np.full_like(f, 0.04), 1.0, "hann", 1)
    rej = rejection_spectrum(free, comp)
    assert np.allclose(rej.ratio_db, -20.0)
    same = rejection_spectrum(free, free)
    assert np.allclose(same.ratio_db, 0.0)
    # all-silent bins define a ratio of one, not NaN
    zero = PsdEstimate(f, np.zeros_like(f), 1.0, "hann", 1)
    assert np.allclose(rejection_spectrum(zero, zero).ratio_db, 0.0)
    other = PsdEstimate(f + 0.5, np.ones_like(f), 1.0, "hann", 1)
    with pytest.raises(ValueError, match="grids differ"):
        rejection_spectrum(free, other)


def test_adev_of_phase_equals_the_explicit_chain():
    series = white_phase(1e-2, 1000.0, 20_000, 15)
    direct = adev_of_phase(series, NU0, 0.1, [0.1, 0.5, 1.0],
                           bandwidth_hz=100.0)
    y = pi_counter(tracking_filter(series, 100.0), 0.1, NU0)
    manual = allan_deviation(y, [0.1, 0.5, 1.0])
    assert np.array_equal(direct.adev, manual.adev)
    assert np.array_equal(direct.count, manual.count)


@given(k=st.floats(min_value=1.5, max_value=1e3))
@settings(max_examples=30, deadline=None)
def test_counter_scales_inversely_with_the_carrier(k):
    series = white_phase(1.0, 1000.0, 4000, 16)
    base = pi_counter(series, 0.5, NU0)
    scaled = pi_counter(series, 0.5, NU0 * k)
    assert np.allclose(scaled.y * k, base.y, rtol=1e-9)
