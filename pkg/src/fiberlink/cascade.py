"""Planning and performance prediction for cascaded multi-segment links.

A long haul is split into equal compensated segments joined by repeater
stations (each one sends part of the received light back, amplifies and
filters it, and compensates the next segment; the repeater laser is phase
locked to the incoming signal).  Splitting pays twice: the per-segment loss
drops, and the shorter delay raises the usable loop bandwidth.  Under uniform
lineic noise the delay-limited residual PSD of a segment scales as L^3, so N
equal segments improve the predicted Allan deviation by a factor N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .link import DEFAULT_CARRIER_FREQUENCY_HZ, DEFAULT_GROUP_VELOCITY_M_PER_S
from .metrology import AdevSeries
from .noise import PowerLawNoiseModel
from .servo import loop_bandwidth_limit, residual_transfer_ratio

__all__ = [
    "RouteSpec",
    "CascadeSegment",
    "Station",
    "CascadePlan",
    "PlanInfeasibleError",
    "plan_cascade",
    "predict_cascade_adev",
]

STATION_FUNCTIONS = ("send_back", "amplify_filter", "compensate_next")
REPEATER_DESCRIPTION = "repeater laser phase-locked to the incoming signal"
MAX_SEGMENTS = 64


class PlanInfeasibleError(ValueError):
    """No segment count within the search range satisfies the constraints."""


@dataclass(frozen=True)
class RouteSpec:
    """A route to be split into equal compensated segments.

    Provide either total_loss_db or loss_db_per_km.  Constraints: a segment
    may not exceed max_segment_loss_db, and its delay-stability cap 1/(4*tau)
    must stay at or above min_loop_bandwidth_hz.
    """

    total_length_km: float
    lineic_noise: PowerLawNoiseModel
    total_loss_db: float | None = None
    loss_db_per_km: float | None = None
    max_segment_loss_db: float = 42.0
    min_loop_bandwidth_hz: float = 100.0
    group_velocity_m_per_s: float = DEFAULT_GROUP_VELOCITY_M_PER_S

    def __post_init__(self):
        if not self.total_length_km > 0.0:
            raise ValueError("route length must be > 0")
        if (self.total_loss_db is None) == (self.loss_db_per_km is None):
            raise ValueError("give exactly one of total_loss_db, loss_db_per_km")
        loss = self.route_loss_db
        if loss < 0.0:
            raise ValueError("route loss must be >= 0")
        if self.max_segment_loss_db <= 0.0:
            raise ValueError("max segment loss must be > 0")
        if self.min_loop_bandwidth_hz < 0.0:
            raise ValueError("min loop bandwidth must be >= 0")
        if not self.lineic_noise.lineic:
            raise ValueError("route noise model must be lineic")

    @property
    def route_loss_db(self) -> float:
        if self.total_loss_db is not None:
            return float(self.total_loss_db)
        return float(self.loss_db_per_km) * self.total_length_km


@dataclass(frozen=True)
class CascadeSegment:
    index: int
    length_km: float
    loss_db: float
    tau_oneway_s: float
    loop_bandwidth_cap_hz: float


@dataclass(frozen=True)
class Station:
    index: int
    functions: tuple[str, ...] = STATION_FUNCTIONS
    description: str = REPEATER_DESCRIPTION


@dataclass(frozen=True)
class CascadePlan:
    segments: tuple[CascadeSegment, ...]
    stations: tuple[Station, ...]  # interior stations only
    total_length_km: float
    total_loss_db: float
    max_segment_loss_db: float
    min_loop_bandwidth_hz: float

    def self_check(self):
        """Every emitted plan must satisfy its own constraints."""
        length = sum(s.length_km for s in self.segments)
        if not math.isclose(length, self.total_length_km, rel_tol=1e-9):
            raise AssertionError("segment lengths do not sum to the route length")
        if len(self.stations) != len(self.segments) - 1:
            raise AssertionError("interior station count must be segments - 1")
        for st in self.stations:
            if set(st.functions) != set(STATION_FUNCTIONS):
                raise AssertionError(f"station {st.index} lacks a required function")
        for seg in self.segments:
            if seg.loss_db > self.max_segment_loss_db * (1.0 + 1e-9):
                raise AssertionError(f"segment {seg.index} exceeds the loss limit")
            if seg.loop_bandwidth_cap_hz < self.min_loop_bandwidth_hz * (1.0 - 1e-9):
                raise AssertionError(f"segment {seg.index} breaks the bandwidth limit")


def plan_cascade(route: RouteSpec) -> CascadePlan:
    """Minimal equal-segment split meeting the loss and bandwidth constraints.

    Tries N = 1..64 exhaustively and returns the first feasible N.  Both
    constraints relax monotonically with N, so the first feasible split is
    the minimal one.  On failure the binding constraint is named.
    """
    total_loss = route.route_loss_db
    v = route.group_velocity_m_per_s
    last_loss_ok = last_bw_ok = False
    for n_seg in range(1, MAX_SEGMENTS + 1):
        length = route.total_length_km / n_seg
        loss = total_loss / n_seg
        tau = length * 1000.0 / v
        cap = loop_bandwidth_limit(tau)
        last_loss_ok = loss <= route.max_segment_loss_db * (1.0 + 1e-9)
        last_bw_ok = cap >= route.min_loop_bandwidth_hz * (1.0 - 1e-9)
        if last_loss_ok and last_bw_ok:
            segments = tuple(
                CascadeSegment(i, length, loss, tau, cap) for i in range(n_seg))
            stations = tuple(Station(i) for i in range(n_seg - 1))
            plan = CascadePlan(
                segments=segments,
                stations=stations,
                total_length_km=route.total_length_km,
                total_loss_db=total_loss,
                max_segment_loss_db=route.max_segment_loss_db,
                min_loop_bandwidth_hz=route.min_loop_bandwidth_hz,
            )
            plan.self_check()
            return plan
    binding = []
    if not last_loss_ok:
        binding.append("loss constraint")
    if not last_bw_ok:
        binding.append("bandwidth constraint")
    raise PlanInfeasibleError(
        f"{' and '.join(binding)} unsatisfiable within N <= {MAX_SEGMENTS}: "
        f"route {route.total_length_km} km / {total_loss} dB, max segment loss "
        f"{route.max_segment_loss_db} dB, min loop bandwidth "
        f"{route.min_loop_bandwidth_hz} Hz")


def predict_cascade_adev(plan: CascadePlan, noise: PowerLawNoiseModel, taus_s,
                         nu0_hz: float = DEFAULT_CARRIER_FREQUENCY_HZ,
                         measurement_bandwidth_hz: float = 10.0,
                         station_noise_rad2_per_hz: float = 0.0) -> AdevSeries:
    """Analytic Allan deviation of the cascaded residual.

    Each segment contributes residual PSD = residual_transfer_ratio(uniform)
    times its free-running PSD; for fiber noise near f^-2 that product is
    white phase noise at level (1/3)*(2*pi*tau_seg)^2 * f^2*S_free(f), which
    is evaluated at 1 Hz.  Segments (and the optional per-station white-PM
    penalty) add in quadrature; the total predicted variance is exactly the
    sum of the per-segment variances.  The white-PM Allan deviation uses the
    noise-equivalent bandwidth of the second-order measurement filter (two
    cascaded one-pole sections, matching tracking_filter),
    B = (pi/4) * measurement_bandwidth_hz:

        sigma_y(tau) = sqrt(3 * B * S_phi / (2*pi*nu0)^2) / tau
    """
    if not noise.lineic:
        raise ValueError("prediction needs the route's lineic noise model")
    if station_noise_rad2_per_hz < 0.0:
        raise ValueError("station noise must be >= 0")
    s_white = 0.0
    for seg in plan.segments:
        free_at_1hz = noise.psd(np.array([1.0]))[0] * seg.length_km
        s_white += residual_transfer_ratio(1.0, seg.tau_oneway_s) * free_at_1hz
    s_white += len(plan.stations) * station_noise_rad2_per_hz
    b_eff = 0.25 * np.pi * measurement_bandwidth_hz
    taus = np.sort(np.atleast_1d(np.asarray(taus_s, dtype=float)))
    sigma = np.sqrt(3.0 * b_eff * s_white) / (2.0 * np.pi * nu0_hz * taus)
    return AdevSeries(tau_s=taus, adev=sigma, count=np.ones_like(taus, dtype=int))
