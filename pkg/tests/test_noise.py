"""Noise model and synthesis unit tests."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fiberlink import (
    FiberSpan,
    PhaseSeries,
    PowerLawNoiseModel,
    estimate_lineic_psd,
    fiber_noise_field,
    synth_power_law_phase_noise,
    welch_psd,
)

FS = 1000.0


def fit_loglog_slope(freq, psd, f_lo, f_hi):
    band = (freq >= f_lo) & (freq <= f_hi)
    return np.polyfit(np.log10(freq[band]), np.log10(psd[band]), 1)[0]


def test_silence_synthesizes_zeros():
    series = synth_power_law_phase_noise(PowerLawNoiseModel.silence(),
                                         FS, 4096, 1)
    assert np.all(series.samples == 0.0)
    assert series.fs == FS


def test_white_noise_is_flat_at_the_requested_level():
    h0 = 2.5
    series = synth_power_law_phase_noise(PowerLawNoiseModel.white(h0),
                                         FS, 2 ** 20, 2)
    psd = welch_psd(series)
    band = (psd.freq_hz > 1.0) & (psd.freq_hz < FS / 4)
    assert np.mean(psd.psd[band]) == pytest.approx(h0, rel=0.05)
    assert abs(fit_loglog_slope(psd.freq_hz, psd.psd, 1.0, FS / 4)) < 0.05


def test_f_minus_2_noise_has_slope_minus_2():
    series = synth_power_law_phase_noise(
        PowerLawNoiseModel(((2.0, 10.0),)), FS, 2 ** 20, 3)
    psd = welch_psd(series)
    slope = fit_loglog_slope(psd.freq_hz, psd.psd, 0.5, 50.0)
    assert slope == pytest.approx(-2.0, abs=0.1)
    # level check at 1 Hz against the model
    idx = np.argmin(np.abs(psd.freq_hz - 1.0))
    assert psd.psd[idx] == pytest.approx(10.0, rel=0.5)


def test_same_seed_reproduces_and_different_seed_differs():
    model = PowerLawNoiseModel(((2.0, 1.0),))
    a = synth_power_law_phase_noise(model, FS, 8192, 42)
    b = synth_power_law_phase_noise(model, FS, 8192, 42)
    c = synth_power_law_phase_noise(model, FS, 8192, 43)
    assert np.array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)


def test_multi_term_model_adds_at_the_psd_level():
    # realizations are not sample-wise additive across models (independent
    # streams), but the PSD of the combined model is the sum of the terms
    combined = PowerLawNoiseModel(((0.0, 5.0), (2.0, 50.0)))
    series = synth_power_law_phase_noise(combined, FS, 2 ** 21, 4)
    psd = welch_psd(series)
    for f_probe in (0.5, 5.0, 50.0):
        idx = np.argmin(np.abs(psd.freq_hz - f_probe))
        f_bin = psd.freq_hz[idx]
        expected = 5.0 + 50.0 / f_bin ** 2
        measured = float(np.mean(psd.psd[max(idx - 2, 1):idx + 3]))
        assert measured == pytest.approx(expected, rel=0.35)


def test_model_psd_evaluates_the_sum_of_terms():
    model = PowerLawNoiseModel(((0.0, 2.0), (2.0, 8.0)))
    assert model.psd(1.0) == pytest.approx(10.0)
    assert model.psd(2.0) == pytest.approx(4.0)
    f = np.array([1.0, 2.0, 4.0])
    assert model.psd(f) == pytest.approx([10.0, 4.0, 2.5])


def test_fiber_field_recovers_the_lineic_level():
    lineic = PowerLawNoiseModel(((2.0, 1.4),), lineic=True)
    span = FiberSpan(id="s", length_km=50.0, loss_db=10.0, lineic_noise=lineic)
    field = fiber_noise_field(span, 8, 2000.0, 600_000, 17)
    estimate = estimate_lineic_psd(field, span)
    idx = np.argmin(np.abs(estimate.freq_hz - 1.0))
    assert estimate.psd[idx] == pytest.approx(1.4, rel=0.2)


def test_cell_positions_tile_the_span():
    lineic = PowerLawNoiseModel(((2.0, 1.0),), lineic=True)
    span = FiberSpan(id="s", length_km=40.0, loss_db=8.0, lineic_noise=lineic)
    field = fiber_noise_field(span, 4, 100.0, 64, 1)
    positions = [pos for pos, _ in field.cells]
    assert positions == pytest.approx([5.0, 15.0, 25.0, 35.0])
    # summed field carries the whole span budget: PSDs add across cells
    lumped = field.summed()
    assert lumped.samples == pytest.approx(
        np.sum([s.samples for _, s in field.cells], axis=0))


def test_model_validation_rejects_bad_terms():
    with pytest.raises(ValueError):
        PowerLawNoiseModel(((4.0, 1.0),))
    with pytest.raises(ValueError):
        PowerLawNoiseModel(((-1.0, 1.0),))
    with pytest.raises(ValueError):
        PowerLawNoiseModel(((2.0, -1.0),))


def test_synthesis_rejects_lineic_models_and_bad_sizes():
    lineic = PowerLawNoiseModel(((2.0, 1.0),), lineic=True)
    with pytest.raises(ValueError):
        synth_power_law_phase_noise(lineic, FS, 1024, 0)
    model = PowerLawNoiseModel.white(1.0)
    with pytest.raises(ValueError):
        synth_power_law_phase_noise(model, FS, 0, 0)
    with pytest.raises(ValueError):
        synth_power_law_phase_noise(model, -1.0, 1024, 0)


def test_phase_series_validation():
    with pytest.raises(ValueError):
        PhaseSeries(np.zeros((4, 4)), FS)
    with pytest.raises(ValueError):
        PhaseSeries(np.zeros(4), 0.0)
    series = PhaseSeries(np.arange(4, dtype=float), 2.0)
    assert series.duration_s == pytest.approx(2.0)
    assert series.times() == pytest.approx([0.0, 0.5, 1.0, 1.5])


@given(factor=st.floats(min_value=1e-3, max_value=1e3),
       f=st.floats(min_value=1e-3, max_value=1e3))
@settings(max_examples=50, deadline=None)
def test_scaled_model_scales_the_psd_linearly(factor, f):
    model = PowerLawNoiseModel(((0.0, 3.0), (2.0, 7.0)))
    assert model.scaled(factor).psd(f) == pytest.approx(factor * model.psd(f))


@given(seed=st.integers(min_value=0, max_value=2 ** 31 - 1))
@settings(max_examples=10, deadline=None)
def test_synthesized_noise_is_finite_and_zero_mean_free(seed):
    series = synth_power_law_phase_noise(PowerLawNoiseModel.white(1.0),
                                         FS, 4096, seed)
    assert np.all(np.isfinite(series.samples))
    assert series.samples.shape == (4096,)
