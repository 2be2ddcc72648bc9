"""Time-domain engine for round-trip phase-noise cancellation.

The loop works the way a fiber Doppler-cancellation servo does: the input
signal carries an actuator phase phi_c, travels the link picking up fiber
noise, is partially reflected at the remote end, and returns through the same
fiber (and the actuator) to beat against the reference.  The measured beat is

    b(t) = phi_c(t) + phi_c(t - 2*tau) + sum_z [phi_z(t - 2*tau + tau_z)
                                                + phi_z(t - tau_z)] + n_det

with tau the one-way delay and tau_z the input-to-cell delay.  A PI controller
drives the actuator frequency from -b/2 (the round trip sees every noise term
twice to first order).  The one-way output seen by the remote user is

    phi_out(t) = phi_c(t - tau) + sum_z phi_z(t - (tau - tau_z)).

For the ideal infinite-gain loop the residual transfer of a cell at delay
tau_z is sin^2(w*tau_z) / cos^2(w*tau); integrated over a uniform noise
distribution the small-f PSD ratio is (1/3)*(2*pi*f*tau)^2, the delay-limited
rejection floor.  The engine is discrete time at fixed fs with delays rounded
to integer samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from numba import njit

from .link import LinkTopology
from .noise import PhaseSeries, PowerLawNoiseModel, _domain_tag, _generator, \
    _realization

__all__ = [
    "ServoConfig",
    "SimConfig",
    "TransferResult",
    "UnstableLoopError",
    "simulate_free_running",
    "simulate_compensated",
    "simulate_pair",
    "residual_transfer_ratio",
    "residual_ratio_from_delays",
    "rule_of_thumb_rejection",
    "loop_bandwidth_limit",
]

DEFAULT_DETECTION_NOISE = PowerLawNoiseModel.white(1.0e-8)  # -80 dB rad^2/Hz
_TAG_LINK = _domain_tag("linknoise")
_TAG_DETECTOR = _domain_tag("detector")


class UnstableLoopError(RuntimeError):
    """Requested loop bandwidth exceeds the delay-stability cap."""


@dataclass(frozen=True)
class ServoConfig:
    """Controller and detector settings for the compensation loop.

    Gains default to a PI tuned at the target bandwidth: kp = 2*pi*f_bw and
    ki = kp * (2*pi*f_bw) / 10 (integrator corner a decade below crossover).
    The target bandwidth defaults to half the stability cap 1/(4*tau).
    Explicit gains override the derived ones.

    command_filter_pole_hz, when set, low-passes the frequency command with a
    one pole filter.  Loop gain near the measurement null at 1/(4*tau) only
    amplifies noise the beat cannot see; rolling the command off above the
    crossover removes that servo bump without touching the in-band gain.
    """

    target_loop_bandwidth_hz: float | None = None
    proportional_gain: float | None = None  # rad/s of actuator per rad of error
    integrator_gain: float | None = None    # rad/s^2 per rad
    command_filter_pole_hz: float | None = None
    actuator_range_hz: float = 1.0e6        # peak frequency excursion, AOM-like
    detection_noise: PowerLawNoiseModel = dc_field(default=DEFAULT_DETECTION_NOISE)
    enabled: bool = True

    def __post_init__(self):
        for name in ("target_loop_bandwidth_hz", "proportional_gain",
                     "integrator_gain"):
            v = getattr(self, name)
            if v is not None and v < 0.0:
                raise ValueError(f"{name} must be >= 0")
        if self.command_filter_pole_hz is not None \
                and not self.command_filter_pole_hz > 0.0:
            raise ValueError("command filter pole must be > 0")
        if not self.actuator_range_hz > 0.0:
            raise ValueError("actuator range must be > 0")
        if self.detection_noise.lineic:
            raise ValueError("detection noise cannot be lineic")


@dataclass(frozen=True)
class SimConfig:
    duration_s: float
    seed: int
    fs_hz: float = 1.0e4
    cells_per_span: int = 16

    def __post_init__(self):
        if not self.duration_s > 0.0:
            raise ValueError("duration must be > 0")
        if not self.fs_hz > 0.0:
            raise ValueError("fs must be > 0")
        if int(self.cells_per_span) < 1:
            raise ValueError("cells_per_span must be >= 1")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration_s * self.fs_hz))


@dataclass(frozen=True)
class TransferResult:
    residual_phase: PhaseSeries      # end to end, remote output minus reference
    correction_phase: PhaseSeries    # actuator output
    roundtrip_beat_phase: PhaseSeries
    lock_acquired_at_s: float
    saturated: bool
    saturated_fraction: float
    settings: dict


@njit(cache=True)
def _pi_loop(rt, two_d, kp, ki, dt, umax, a_lp):
    """Sequential PI loop on the halved round-trip beat.

    rt holds everything the detector sees except the actuator terms.  Returns
    the actuator phase, the measured beat and the clipped-sample count.
    Integrator updates are skipped while the actuator clips (anti-windup).
    a_lp is the per-sample smoothing weight of the command filter; 1.0 means
    the clipped command drives the actuator directly.
    """
    n = rt.shape[0]
    phi = np.zeros(n)
    beat = np.empty(n)
    integ = 0.0
    cur = 0.0
    flt = 0.0
    clipped = 0
    for k in range(n):
        phi[k] = cur
        delayed = phi[k - two_d] if k >= two_d else 0.0
        b = cur + delayed + rt[k]
        beat[k] = b
        e = -0.5 * b
        new_integ = integ + ki * e * dt
        u = kp * e + new_integ
        if u > umax:
            u = umax
            clipped += 1
        elif u < -umax:
            u = -umax
            clipped += 1
        else:
            integ = new_integ
        if a_lp >= 1.0:
            flt = u
        else:
            flt = flt + a_lp * (u - flt)
        cur = cur + flt * dt
    return phi, beat, clipped


def _delay_groups(link: LinkTopology, sim: SimConfig, n_delay: int):
    """Cells grouped by integer-sample delay, PSDs summed per group.

    Independent Gaussian processes are fully described by their summed PSD, so
    cells sharing a discrete delay tap can be realized as one stream.  This is
    what makes multi-thousand-second runs affordable; it is statistically
    identical to realizing every cell separately.
    """
    fs = sim.fs_hz
    cells = int(sim.cells_per_span)
    groups: dict[int, dict[float, float]] = {}
    offset_s = 0.0
    for span in link.spans():
        model = span.lineic_noise
        if model is not None and not model.is_silent:
            share = span.length_km / cells
            for k in range(cells):
                pos = (k + 0.5) * span.length_km / cells
                tau_z = offset_s + pos * 1000.0 / span.group_velocity_m_per_s
                d = int(round(tau_z * fs))
                d = min(d, n_delay)  # guard against rounding past the link end
                per_alpha = groups.setdefault(d, {})
                for alpha, h in model.terms:
                    per_alpha[alpha] = per_alpha.get(alpha, 0.0) + h * share
        offset_s += span.one_way_delay_s
    return {d: PowerLawNoiseModel(tuple(sorted(per.items())))
            for d, per in groups.items()}


def _accumulate(R, W, c, d, D):
    n = R.shape[0]
    two_d = 2 * D
    R += c[d:d + n]
    R += c[two_d - d:two_d - d + n]
    W += c[D + d:D + d + n]


def _aggregate_noise(link: LinkTopology, fields, sim: SimConfig, n: int, D: int):
    """Build the round-trip (R) and one-way (W) noise sums on the sim grid.

    With materialized fields, cell history before t = 0 is taken as zero (the
    resulting startup transient falls inside the lock-acquisition discard).
    Without fields, the engine synthesizes delay-grouped noise internally,
    including 2*D samples of pre-history, keyed by (seed, d).
    """
    fs = sim.fs_hz
    R = np.zeros(n)
    W = np.zeros(n)
    if fields is not None:
        spans = link.spans()
        if len(fields) != len(spans):
            raise ValueError(f"got {len(fields)} noise fields for "
                             f"{len(spans)} spans")
        offset_s = 0.0
        for span, fld in zip(spans, fields):
            if fld.span_id != span.id:
                raise ValueError(f"noise field {fld.span_id!r} does not match "
                                 f"span {span.id!r}")
            if abs(fld.fs - fs) > 1e-9 * fs:
                raise ValueError("mismatched sampling: field fs != sim fs")
            for pos, series in fld.cells:
                if pos > span.length_km:
                    raise ValueError(f"cell at {pos} km outside span "
                                     f"{span.id!r} ({span.length_km} km)")
                if series.samples.size != n:
                    raise ValueError("mismatched sampling: field length != "
                                     "sim sample count")
                d = int(round((offset_s + pos * 1000.0 /
                               span.group_velocity_m_per_s) * fs))
                d = min(d, D)
                c = np.zeros(n + 2 * D)
                c[2 * D:] = series.samples
                _accumulate(R, W, c, d, D)
            offset_s += span.one_way_delay_s
    else:
        m = n + 2 * D
        for d, model in sorted(_delay_groups(link, sim, D).items()):
            rng = _generator(int(sim.seed), _TAG_LINK, d)
            c = _realization(model, fs, m, rng)
            _accumulate(R, W, c, d, D)
    return R, W


def _detector_noise(model: PowerLawNoiseModel, fs: float, n: int, seed: int,
                    which: int) -> np.ndarray | None:
    if model is None or model.is_silent:
        return None
    rng = _generator(int(seed), _TAG_DETECTOR, which)
    return _realization(model, fs, n, rng)


def _check_sim(link: LinkTopology, sim: SimConfig):
    tau = link.one_way_delay_s
    if sim.duration_s < 100.0 * tau:
        raise ValueError(f"duration {sim.duration_s} s too short; need at "
                         f"least 100 one-way delays ({100.0 * tau:.3g} s)")
    n = sim.n_samples
    if n < 2:
        raise ValueError("simulation needs at least 2 samples")
    return tau, n


def _echo(link, sim, tau, extra=None) -> dict:
    settings = {
        "fs_hz": sim.fs_hz,
        "duration_s": sim.duration_s,
        "seed": int(sim.seed),
        "cells_per_span": int(sim.cells_per_span),
        "tau_oneway_s": tau,
        "loop_bandwidth_cap_hz": loop_bandwidth_limit(tau),
        "carrier_frequency_hz": link.carrier_frequency_hz,
    }
    if extra:
        settings.update(extra)
    return settings


def simulate_free_running(link: LinkTopology, fields, sim: SimConfig
                          ) -> TransferResult:
    """Propagate distributed noise through the link with the servo off.

    fields is a list of NoiseField, one per span in order, or None to let the
    engine synthesize span noise internally from the spans' lineic models
    (delay-grouped, deterministic per sim.seed).  The residual is the one-way
    output phase; the beat record is what a round-trip detector would see.
    """
    tau, n = _check_sim(link, sim)
    D = int(round(tau * sim.fs_hz))
    R, W = _aggregate_noise(link, fields, sim, n, D)
    fs = sim.fs_hz
    return TransferResult(
        residual_phase=PhaseSeries(W, fs),
        correction_phase=PhaseSeries(np.zeros(n), fs),
        roundtrip_beat_phase=PhaseSeries(R, fs),
        lock_acquired_at_s=0.0,
        saturated=False,
        saturated_fraction=0.0,
        settings=_echo(link, sim, tau, {"servo_enabled": False}),
    )


def _loop_gains(servo: ServoConfig, tau: float):
    cap = loop_bandwidth_limit(tau)
    f_bw = servo.target_loop_bandwidth_hz
    if f_bw is None:
        f_bw = 0.5 * cap
    if f_bw > cap * (1.0 + 1e-9):
        raise UnstableLoopError(
            f"target loop bandwidth {f_bw:.6g} Hz exceeds the delay-stability "
            f"cap 1/(4*tau) = {cap:.6g} Hz for tau = {tau:.6g} s")
    wu = 2.0 * math.pi * f_bw
    kp = servo.proportional_gain if servo.proportional_gain is not None else wu
    ki = servo.integrator_gain if servo.integrator_gain is not None \
        else kp * wu / 10.0
    return f_bw, kp, ki, cap


def _close_loop(link, fields, servo, sim, tau, n, D, R, W) -> TransferResult:
    """Consume the aggregates R and W (both mutated) and run the servo."""
    fs = sim.fs_hz
    f_bw, kp, ki, _cap = _loop_gains(servo, tau)
    det = _detector_noise(servo.detection_noise, fs, n, sim.seed, 0)
    if det is not None:
        R += det
    umax = 2.0 * math.pi * servo.actuator_range_hz
    pole = servo.command_filter_pole_hz
    a_lp = 1.0 if pole is None else -math.expm1(-2.0 * math.pi * pole / fs)
    phi_c, beat, clipped = _pi_loop(R, 2 * D, kp, ki, 1.0 / fs, umax, a_lp)
    # Non-finite values stick in the recursion, so the last sample is enough.
    if not np.isfinite(phi_c[-1]):
        raise UnstableLoopError(
            "closed-loop phase diverged to non-finite values; the explicit "
            "gains are unstable for this delay")
    residual = W
    if D > 0:
        residual[D:] += phi_c[:n - D]
    else:
        residual += phi_c
    det2 = _detector_noise(servo.detection_noise, fs, n, sim.seed, 1)
    if det2 is not None:
        residual += det2
    # Ten loop time constants; falls back to kp when only gains were given.
    rate = 2.0 * math.pi * f_bw if f_bw > 0.0 else (kp if kp > 0.0 else 1.0)
    lock_s = 10.0 / rate
    # Lightly damped loops ring far past ten time constants at startup, so
    # extend the estimate to cover the last sample that stands clear of the
    # settled tail.  8 sigma never fires on the steady state itself.
    tail = residual[3 * n // 4:]
    thr = 8.0 * float(np.sqrt(np.mean(tail * tail)))
    if thr > 0.0:
        hot = np.flatnonzero(np.abs(residual) > thr)
        if hot.size:
            lock_s = max(lock_s, float(hot[-1] + 1) / fs)
    extra = {
        "servo_enabled": True,
        "target_loop_bandwidth_hz": f_bw,
        "proportional_gain": kp,
        "integrator_gain": ki,
        "actuator_range_hz": servo.actuator_range_hz,
        "noise_path": "fields" if fields is not None else "grouped",
    }
    if pole is not None:
        extra["command_filter_pole_hz"] = pole
    return TransferResult(
        residual_phase=PhaseSeries(residual, fs),
        correction_phase=PhaseSeries(phi_c, fs),
        roundtrip_beat_phase=PhaseSeries(beat, fs),
        lock_acquired_at_s=lock_s,
        saturated=clipped > 0,
        saturated_fraction=clipped / n,
        settings=_echo(link, sim, tau, extra),
    )


def simulate_compensated(link: LinkTopology, fields, servo: ServoConfig,
                         sim: SimConfig) -> TransferResult:
    """Run the round-trip cancellation loop and return the compensated output.

    With servo.enabled False this is exactly simulate_free_running (the
    residual is bit identical; detectors are bypassed along with the loop).
    Raises UnstableLoopError rather than integrating a loop whose target
    bandwidth exceeds 1/(4*tau).  Actuator clipping does not abort the run;
    it is reported through `saturated` / `saturated_fraction`.
    """
    if not servo.enabled:
        return simulate_free_running(link, fields, sim)
    tau, n = _check_sim(link, sim)
    _loop_gains(servo, tau)  # reject unstable configs before paying synthesis
    D = int(round(tau * sim.fs_hz))
    R, W = _aggregate_noise(link, fields, sim, n, D)
    return _close_loop(link, fields, servo, sim, tau, n, D, R, W)


def simulate_pair(link: LinkTopology, fields, servo: ServoConfig, sim: SimConfig
                  ) -> tuple[TransferResult, TransferResult]:
    """Free-running and compensated runs sharing one noise realization.

    The pair uses common random numbers, so ratios such as the rejection
    spectrum carry much less estimator noise than independent runs, and a
    single synthesis pass is paid instead of two.
    """
    tau, n = _check_sim(link, sim)
    fs = sim.fs_hz
    D = int(round(tau * fs))
    if servo.enabled:
        _loop_gains(servo, tau)
    R, W = _aggregate_noise(link, fields, sim, n, D)
    free = TransferResult(
        residual_phase=PhaseSeries(W.copy(), fs),
        correction_phase=PhaseSeries(np.zeros(n), fs),
        roundtrip_beat_phase=PhaseSeries(R.copy(), fs),
        lock_acquired_at_s=0.0,
        saturated=False,
        saturated_fraction=0.0,
        settings=_echo(link, sim, tau, {"servo_enabled": False}),
    )
    if not servo.enabled:
        return free, free
    return free, _close_loop(link, fields, servo, sim, tau, n, D, R, W)


def loop_bandwidth_limit(tau_oneway: float) -> float:
    """Delay-imposed stability cap, 1/(4*tau).

    At f = 1/(4*tau) the round-trip measurement nulls out (cos(w*tau) = 0):
    the beat carries no information about the link noise there, so no loop
    can regulate at or beyond it.  Doubling tau halves the cap, which is the
    reason long hauls get split into cascaded segments.
    """
    if not tau_oneway > 0.0:
        raise ValueError("tau must be > 0")
    return 1.0 / (4.0 * tau_oneway)


def residual_transfer_ratio(f, tau_oneway: float, distribution: str = "uniform",
                            z_fraction: float | None = None):
    """Small-f residual/free PSD ratio of the ideal infinite-gain loop.

    distribution "uniform": noise spread evenly along the fiber, ratio
    (1/3) * (2*pi*f*tau)^2.  distribution "lumped_at": a single cell at
    z_fraction of the length, ratio (2*pi*f*tau*z_fraction)^2.  Valid for
    f below the stability cap 1/(4*tau).
    """
    if not tau_oneway > 0.0:
        raise ValueError("tau must be > 0")
    f = np.asarray(f, dtype=float)
    if np.any(f < 0.0) or np.any(f >= loop_bandwidth_limit(tau_oneway)):
        raise ValueError("f outside [0, 1/(4*tau))")
    w_tau = 2.0 * np.pi * f * tau_oneway
    if distribution == "uniform":
        out = (w_tau ** 2) / 3.0
    elif distribution == "lumped_at":
        if z_fraction is None or not 0.0 <= z_fraction <= 1.0:
            raise ValueError("lumped_at needs z_fraction in [0, 1]")
        out = (w_tau * z_fraction) ** 2
    else:
        raise ValueError(f"unknown distribution {distribution!r}")
    return out if out.ndim else float(out)


def residual_ratio_from_delays(f: float, tau_oneway: float, delays_s,
                               weights) -> float:
    """Exact ideal-loop residual/free ratio for an arbitrary cell layout.

    Each cell contributes sin^2(w*d) / cos^2(w*tau) weighted by its share of
    the free-running PSD at f.  This is the oracle the engine is validated
    against for non-uniform noise distributions.
    """
    if not tau_oneway > 0.0:
        raise ValueError("tau must be > 0")
    d = np.asarray(delays_s, dtype=float)
    wgt = np.asarray(weights, dtype=float)
    if d.shape != wgt.shape:
        raise ValueError("delays and weights differ in shape")
    if np.any(wgt < 0.0) or wgt.sum() == 0.0:
        raise ValueError("weights must be >= 0 and not all zero")
    w = 2.0 * np.pi * float(f)
    num = np.sum(wgt * np.sin(w * d) ** 2)
    return float(num / (np.cos(w * tau_oneway) ** 2 * wgt.sum()))


def rule_of_thumb_rejection(f, t_trip: float):
    """The widely quoted (f * t_trip)^2 rejection convention.

    Differs from the distributed-noise limit (1/3)*(2*pi*f*tau)^2 by a fixed
    factor of (2*pi)^2/3, about 11.2 dB; both are reported side by side and
    never silently reconciled.
    """
    if not t_trip > 0.0:
        raise ValueError("t_trip must be > 0")
    f = np.asarray(f, dtype=float)
    out = (f * t_trip) ** 2
    return out if out.ndim else float(out)
