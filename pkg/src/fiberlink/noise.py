"""Colored phase-noise synthesis with prescribed power-law spectra.

Phase noise models are sums of power-law terms S_phi(f) = sum_i h_i * f**-alpha_i
with alpha in [0, 3].  Series are generated by frequency-domain shaping: a complex
Gaussian spectrum is scaled by sqrt(S_phi(f)) and inverse transformed, which gives
exact spectral control for arbitrary (including fractional) exponents.  See
Kasdin, Proc. IEEE 83, 802 (1995) for background on discrete power-law noise.

Distributed fiber noise is represented by a NoiseField: independent noise cells
placed along a span, each carrying an equal share of the span's lineic PSD.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
import scipy.fft

__all__ = [
    "PowerLawNoiseModel",
    "PhaseSeries",
    "NoiseField",
    "synth_power_law_phase_noise",
    "fiber_noise_field",
    "estimate_lineic_psd",
]

ALPHA_MIN = 0.0
ALPHA_MAX = 3.0


def _domain_tag(name: str) -> int:
    # Stable 64-bit tag so sub-seed streams for different purposes never collide.
    return int.from_bytes(hashlib.blake2s(name.encode(), digest_size=8).digest(), "big")


def _generator(*entropy) -> np.random.Generator:
    """Counter-based generator keyed by an entropy tuple.

    Philox is counter based, so independently keyed streams can be drawn in any
    order (or in parallel) and still reproduce bit-identical results.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


@dataclass(frozen=True)
class PowerLawNoiseModel:
    """Sum of power-law PSD terms, S_phi(f) = sum h_alpha * f**-alpha.

    Parameters
    ----------
    terms : tuple of (alpha, h_alpha)
        alpha is the dimensionless spectral exponent, restricted to [0, 3].
        h_alpha is the PSD coefficient at 1 Hz, in rad^2/Hz (or rad^2/Hz/km
        when the model is lineic).  An empty tuple denotes silence.
    lineic : bool
        True when coefficients are per-km densities attached to a fiber span.
    """

    terms: tuple[tuple[float, float], ...] = ()
    lineic: bool = False

    def __post_init__(self):
        norm = []
        for term in self.terms:
            alpha, h = (float(term[0]), float(term[1]))
            if not (np.isfinite(alpha) and np.isfinite(h)):
                raise ValueError(f"non-finite noise term {term!r}")
            if h < 0.0:
                raise ValueError(f"negative PSD coefficient h={h}")
            if not ALPHA_MIN <= alpha <= ALPHA_MAX:
                raise ValueError(f"alpha={alpha} outside [{ALPHA_MIN}, {ALPHA_MAX}]")
            norm.append((alpha, h))
        object.__setattr__(self, "terms", tuple(norm))

    @classmethod
    def silence(cls, lineic: bool = False) -> "PowerLawNoiseModel":
        return cls((), lineic=lineic)

    @classmethod
    def white(cls, h0: float, lineic: bool = False) -> "PowerLawNoiseModel":
        return cls(((0.0, h0),), lineic=lineic)

    @classmethod
    def single(cls, alpha: float, h: float, lineic: bool = False) -> "PowerLawNoiseModel":
        return cls(((alpha, h),), lineic=lineic)

    @property
    def is_silent(self) -> bool:
        return all(h == 0.0 for _, h in self.terms)

    def scaled(self, factor: float, lineic: bool | None = None) -> "PowerLawNoiseModel":
        """Model with every coefficient multiplied by `factor`."""
        if factor < 0.0:
            raise ValueError("scale factor must be >= 0")
        new_lineic = self.lineic if lineic is None else lineic
        return PowerLawNoiseModel(
            tuple((a, h * factor) for a, h in self.terms), lineic=new_lineic
        )

    def psd(self, f) -> np.ndarray:
        """Evaluate S_phi(f).  At f = 0 only alpha = 0 terms contribute."""
        f = np.asarray(f, dtype=float)
        out = np.zeros_like(f)
        pos = f > 0.0
        for alpha, h in self.terms:
            if alpha == 0.0:
                out += h
            else:
                out[pos] += h * f[pos] ** (-alpha)
        return out


@dataclass(frozen=True)
class PhaseSeries:
    """Uniformly sampled phase record in rad."""

    samples: np.ndarray
    fs: float
    t0: float = 0.0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1:
            raise ValueError("phase samples must be one dimensional")
        if not self.fs > 0.0:
            raise ValueError("fs must be > 0")
        if not np.isfinite(samples).all():
            raise ValueError("phase samples must be finite")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "fs", float(self.fs))
        object.__setattr__(self, "t0", float(self.t0))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.fs

    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.samples.size) / self.fs


@dataclass(frozen=True)
class NoiseField:
    """Independent noise cells distributed along one fiber span.

    cells are (position_km, PhaseSeries) pairs with strictly increasing
    positions.  Each cell is statistically independent of the others; the sum
    of the cell PSDs reproduces span_length * lineic PSD.
    """

    span_id: str
    cells: tuple[tuple[float, PhaseSeries], ...]
    fs: float
    duration_s: float

    def __post_init__(self):
        last = -np.inf
        for pos, series in self.cells:
            if pos < 0.0:
                raise ValueError(f"cell position {pos} km is negative")
            if pos <= last:
                raise ValueError("cell positions must be strictly increasing")
            last = pos
            if abs(series.fs - self.fs) > 1e-9 * self.fs:
                raise ValueError("cell sample rate differs from field fs")

    def summed(self) -> PhaseSeries:
        """Sum of all cells, the lumped equivalent of the field."""
        total = np.zeros(int(round(self.duration_s * self.fs)))
        for _, series in self.cells:
            total += series.samples
        return PhaseSeries(total, self.fs)


def _realization(model: PowerLawNoiseModel, fs: float, m: int,
                 rng: np.random.Generator) -> np.ndarray:
    """One noise realization of length m with one-sided PSD model.psd(f).

    Frequency-domain shaping.  The target E|X_k|^2 = S(f_k)*fs*m/2 for the
    one-sided PSD convention; each complex draw has E|z|^2 = 2, hence the
    amplitude sqrt(S*fs*m/4).  The DC bin is zeroed (a phase offset is not
    observable in any downstream beat note).
    """
    if model.is_silent:
        return np.zeros(m)
    alphas = [a for a, h in model.terms if h > 0.0]
    if all(a == 0.0 for a in alphas):
        # Pure white phase: direct time-domain draw, variance h0*fs/2.
        h0 = sum(h for a, h in model.terms if a == 0.0)
        return rng.standard_normal(m) * np.sqrt(h0 * fs / 2.0)
    mf = scipy.fft.next_fast_len(m)
    f = np.fft.rfftfreq(mf, 1.0 / fs)
    amp = np.sqrt(model.psd(f) * (fs * mf / 4.0))
    nf = f.size
    z = rng.standard_normal(2 * nf).view(np.complex128)
    spec = z * amp
    spec[0] = 0.0
    if mf % 2 == 0:
        # Nyquist bin must be real; keep its expected power.
        spec[-1] = np.sqrt(2.0) * spec[-1].real
    x = scipy.fft.irfft(spec, n=mf)
    return x[:m] if mf != m else x


def synth_power_law_phase_noise(model: PowerLawNoiseModel, fs: float, n: int,
                                seed: int) -> PhaseSeries:
    """Generate a lumped phase-noise series with the prescribed PSD.

    Parameters
    ----------
    model : PowerLawNoiseModel
        Must be non-lineic.  A zero-term model yields an all-zero series.
    fs : float
        Sample rate in Hz.
    n : int
        Number of samples, >= 2.
    seed : int
        Realizations are bit-identical for identical (model, fs, n, seed).

    Returns
    -------
    PhaseSeries
    """
    if model.lineic:
        raise ValueError("lineic models describe fiber; use fiber_noise_field")
    n = int(n)
    if n < 2:
        raise ValueError("need at least 2 samples")
    if not fs > 0.0:
        raise ValueError("fs must be > 0")
    rng = _generator(int(seed), _domain_tag("lumped"), 0)
    return PhaseSeries(_realization(model, fs, n, rng), fs)


def fiber_noise_field(span, n_cells: int, fs: float, n: int, seed: int) -> NoiseField:
    """Distribute a span's lineic noise over n_cells independent cells.

    Cells sit at positions (k + 1/2) * L / n_cells and each carries the model
    scaled by L / n_cells, so the summed field reproduces the span total.
    Cell k draws from a counter-based stream keyed by (seed, hash(span.id), k);
    generation order does not matter.
    """
    n_cells = int(n_cells)
    if n_cells < 1:
        raise ValueError("n_cells must be >= 1")
    model = span.lineic_noise
    if model is None or not model.lineic:
        raise ValueError(f"span {span.id!r} has no lineic noise model")
    cell_model = model.scaled(span.length_km / n_cells, lineic=False)
    span_tag = _domain_tag("span:" + str(span.id))
    cells = []
    for k in range(n_cells):
        pos = (k + 0.5) * span.length_km / n_cells
        rng = _generator(int(seed), span_tag, k)
        cells.append((pos, PhaseSeries(_realization(cell_model, fs, int(n), rng), fs)))
    return NoiseField(span_id=span.id, cells=tuple(cells), fs=fs,
                      duration_s=int(n) / fs)


def estimate_lineic_psd(noise_field: NoiseField, span, segment_length: int | None = None):
    """Welch PSD of the summed field divided by span length, rad^2/Hz/km."""
    from .metrology import PsdEstimate, welch_psd

    if not noise_field.cells:
        raise ValueError("empty noise field")
    if span.length_km <= 0.0:
        raise ValueError("span length must be > 0")
    est = welch_psd(noise_field.summed(), segment_length=segment_length)
    return PsdEstimate(
        freq_hz=est.freq_hz,
        psd=est.psd / span.length_km,
        resolution_bandwidth_hz=est.resolution_bandwidth_hz,
        window=est.window,
        segments=est.segments,
    )
