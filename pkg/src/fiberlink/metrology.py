"""Frequency-metrology estimators: Welch PSDs, Pi-counter series, Allan deviation.

The chain mirrors how an optical link is actually measured: the beat phase is
low-pass filtered (a tracking filter or the counter input stage), read by a
dead-time-free Pi-type counter, and the fractional-frequency record is reduced
to an overlapping Allan deviation.  Estimator conventions follow Riley,
NIST SP 1065.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.signal

from .noise import PhaseSeries

__all__ = [
    "PsdEstimate",
    "FractionalFreqSeries",
    "AdevSeries",
    "RejectionSpectrum",
    "welch_psd",
    "integrated_rms_phase",
    "pi_counter",
    "tracking_filter",
    "allan_deviation",
    "rejection_spectrum",
    "adev_of_phase",
]

DEFAULT_MEASUREMENT_BANDWIDTH_HZ = 250.0


@dataclass(frozen=True)
class PsdEstimate:
    """One-sided PSD estimate."""

    freq_hz: np.ndarray
    psd: np.ndarray
    resolution_bandwidth_hz: float
    window: str
    segments: int

    def __post_init__(self):
        f = np.asarray(self.freq_hz, dtype=float)
        p = np.asarray(self.psd, dtype=float)
        if f.shape != p.shape:
            raise ValueError("frequency and PSD arrays differ in shape")
        if np.any(np.diff(f) <= 0.0):
            raise ValueError("frequency bins must be strictly increasing")
        if np.any(p < 0.0):
            raise ValueError("PSD values must be >= 0")
        object.__setattr__(self, "freq_hz", f)
        object.__setattr__(self, "psd", p)


@dataclass(frozen=True)
class FractionalFreqSeries:
    """Contiguous, dead-time-free fractional frequency samples.

    y_k = (phi((k+1)*tau) - phi(k*tau)) / (2*pi*nu0*tau)
    """

    y: np.ndarray
    gate_s: float
    nu0_hz: float

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if y.ndim != 1:
            raise ValueError("y must be one dimensional")
        if not self.gate_s > 0.0:
            raise ValueError("gate must be > 0")
        if not self.nu0_hz > 0.0:
            raise ValueError("carrier frequency must be > 0")
        object.__setattr__(self, "y", y)


@dataclass(frozen=True)
class AdevSeries:
    """Overlapping Allan deviation points (tau_s, adev, count)."""

    tau_s: np.ndarray
    adev: np.ndarray
    count: np.ndarray

    def __post_init__(self):
        tau = np.asarray(self.tau_s, dtype=float)
        if np.any(np.diff(tau) <= 0.0):
            raise ValueError("tau values must be increasing")
        if np.any(np.asarray(self.adev) < 0.0):
            raise ValueError("adev must be >= 0")
        if np.any(np.asarray(self.count) < 1):
            raise ValueError("count must be >= 1")
        object.__setattr__(self, "tau_s", tau)
        object.__setattr__(self, "adev", np.asarray(self.adev, dtype=float))
        object.__setattr__(self, "count", np.asarray(self.count, dtype=int))

    def error_bars(self) -> np.ndarray:
        # 1-sigma estimator uncertainty, sigma / sqrt(count).
        return self.adev / np.sqrt(self.count)


@dataclass(frozen=True)
class RejectionSpectrum:
    """Per-bin PSD ratio in dB, 10*log10(compensated / free)."""

    freq_hz: np.ndarray
    ratio_db: np.ndarray


def welch_psd(series: PhaseSeries, segment_length: int | None = None,
              overlap_fraction: float = 0.5, window: str = "hann") -> PsdEstimate:
    """Welch one-sided PSD of a phase series.

    Parameters
    ----------
    series : PhaseSeries
    segment_length : int, optional
        Samples per segment; defaults to n // 8 so at least 8 segments
        average.  Must not exceed the series length.
    overlap_fraction : float
        In [0, 0.9]; default 0.5.
    window : str
        Any scipy window name; default Hann.

    No detrending is applied, so Parseval holds: the integral of the PSD
    matches the series mean-square within estimator tolerance.
    """
    x = series.samples
    n = x.size
    if segment_length is None:
        segment_length = max(n // 8, 2)
    segment_length = int(segment_length)
    if segment_length > n:
        raise ValueError("series shorter than one segment")
    if not 0.0 <= overlap_fraction <= 0.9:
        raise ValueError("overlap_fraction outside [0, 0.9]")
    noverlap = int(segment_length * overlap_fraction)
    f, p = scipy.signal.welch(
        x, fs=series.fs, window=window, nperseg=segment_length,
        noverlap=noverlap, detrend=False, scaling="density",
    )
    step = segment_length - noverlap
    segments = 1 + (n - segment_length) // step
    win = scipy.signal.get_window(window, segment_length)
    enbw_hz = series.fs * np.sum(win ** 2) / np.sum(win) ** 2
    return PsdEstimate(freq_hz=f, psd=p, resolution_bandwidth_hz=enbw_hz,
                       window=window, segments=segments)


def integrated_rms_phase(psd: PsdEstimate, f1: float, f2: float) -> float:
    """sqrt of the PSD integral over [f1, f2], trapezoidal, in rad."""
    f = psd.freq_hz
    p = psd.psd
    if not f1 < f2:
        raise ValueError("need f1 < f2")
    if f1 < f[0] or f2 > f[-1]:
        raise ValueError(f"[{f1}, {f2}] Hz outside estimated bins "
                         f"[{f[0]}, {f[-1]}] Hz")
    inner = (f > f1) & (f < f2)
    grid = np.concatenate(([f1], f[inner], [f2]))
    vals = np.concatenate(([np.interp(f1, f, p)], p[inner], [np.interp(f2, f, p)]))
    return float(np.sqrt(np.trapezoid(vals, grid)))


def pi_counter(series: PhaseSeries, gate_s: float, nu0_hz: float) -> FractionalFreqSeries:
    """Dead-time-free Pi-type counter readings from a phase record.

    The gate must be an integer number of samples and the series must span at
    least two gates.  Readings telescope exactly: the mean of N consecutive
    gate values equals the single (N*gate) reading.
    """
    m_float = gate_s * series.fs
    m = int(round(m_float))
    if m < 1:
        raise ValueError("gate shorter than one sample")
    if abs(m_float - m) > 1e-6:
        raise ValueError(f"gate {gate_s} s is not an integer number of samples "
                         f"at fs = {series.fs} Hz")
    if series.samples.size < 2 * m + 1:
        raise ValueError("series spans fewer than two gates")
    boundaries = series.samples[::m]
    y = np.diff(boundaries) / (2.0 * np.pi * nu0_hz * gate_s)
    return FractionalFreqSeries(y=y, gate_s=gate_s, nu0_hz=nu0_hz)


def tracking_filter(series: PhaseSeries, bandwidth_hz: float) -> PhaseSeries:
    """Second-order low-pass on phase with unity DC gain.

    Two cascaded one-pole IIR sections, each with its pole at bandwidth_hz
    (a = exp(-2*pi*fc/fs)), modelling the finite bandwidth of a tracking
    oscillator or the counter input stage.  Equivalent noise bandwidth is
    (pi/4) * bandwidth_hz.  Both sections start settled at the first sample,
    so a constant input passes unchanged.
    """
    if not 0.0 < bandwidth_hz < series.fs / 2.0:
        raise ValueError(f"bandwidth {bandwidth_hz} Hz outside (0, fs/2)")
    a = np.exp(-2.0 * np.pi * bandwidth_hz / series.fs)
    y = series.samples
    for _stage in range(2):
        y, _ = scipy.signal.lfilter([1.0 - a], [1.0, -a], y,
                                    zi=np.array([a * y[0]]))
    return PhaseSeries(y, series.fs, series.t0)


def allan_deviation(series: FractionalFreqSeries, taus_s) -> AdevSeries:
    """Overlapping Allan deviation at the requested averaging times.

    Each tau must be an integer multiple of the counter gate and leave at
    least 3 averaging windows in the record.  count is the number of
    overlapping estimator terms, N - 2m + 1.
    """
    y = series.y
    tau0 = series.gate_s
    n = y.size
    csum = np.concatenate(([0.0], np.cumsum(y)))
    taus = []
    sigmas = []
    counts = []
    for tau in sorted(float(t) for t in np.atleast_1d(taus_s)):
        m_float = tau / tau0
        m = int(round(m_float))
        if m < 1 or abs(m_float - m) > 1e-6:
            raise ValueError(f"tau {tau} s is not an integer multiple of the "
                             f"gate {tau0} s")
        if n < max(2 * m + 1, 3 * m):
            raise ValueError(f"insufficient data at tau = {tau} s "
                             f"({n} samples of {tau0} s)")
        d = csum[2 * m:n + 1] - 2.0 * csum[m:n + 1 - m] + csum[:n + 1 - 2 * m]
        sigmas.append(np.sqrt(np.mean(d * d) / (2.0 * m * m)))
        taus.append(m * tau0)
        counts.append(n - 2 * m + 1)
    return AdevSeries(tau_s=np.array(taus), adev=np.array(sigmas),
                      count=np.array(counts))


def rejection_spectrum(free: PsdEstimate, compensated: PsdEstimate) -> RejectionSpectrum:
    """10*log10(compensated / free) per bin; inputs must share bins exactly."""
    if free.freq_hz.shape != compensated.freq_hz.shape or \
            not np.array_equal(free.freq_hz, compensated.freq_hz):
        raise ValueError("PSD bin grids differ")
    num = compensated.psd
    den = free.psd
    ratio = np.full_like(den, np.nan)
    both_zero = (den == 0.0) & (num == 0.0)
    ratio[both_zero] = 1.0
    ok = den > 0.0
    ratio[ok] = num[ok] / den[ok]
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(ratio)
    return RejectionSpectrum(freq_hz=free.freq_hz.copy(), ratio_db=db)


def adev_of_phase(series: PhaseSeries, nu0_hz: float, gate_s: float, taus_s,
                  bandwidth_hz: float = DEFAULT_MEASUREMENT_BANDWIDTH_HZ) -> AdevSeries:
    """Full measurement chain: low-pass, Pi-counter, overlapping ADEV.

    bandwidth_hz is the tracking-filter bandwidth when one is engaged, or the
    counter input bandwidth (default 250 Hz) when not.
    """
    filtered = tracking_filter(series, bandwidth_hz)
    y = pi_counter(filtered, gate_s, nu0_hz)
    return allan_deviation(y, taus_s)
