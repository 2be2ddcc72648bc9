"""Scenario configuration: parsing and validation of .cfg files.

The format is YAML with explicit units in key names (length_km, loss_db,
fs_hz and so on), which prevents the ms/s and dB/linear mix-ups this domain
invites.  Numeric values written like 1.0e4 are accepted even where the YAML
resolver would keep them as strings.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import yaml

from .link import LinkTopology, build_link
from .noise import PowerLawNoiseModel
from .servo import ServoConfig, SimConfig, loop_bandwidth_limit

__all__ = ["Scenario", "AnalysisConfig", "ScenarioError", "load_scenario",
           "validate_config", "load_route"]

DEFAULT_MAX_SAMPLES = 50_000_000
DEFAULT_ADEV_LADDER = (0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0,
                       200.0, 500.0, 1000.0)


class ScenarioError(ValueError):
    """Raised when a configuration fails validation; carries all problems."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("\n".join(self.problems))


@dataclass(frozen=True)
class AnalysisConfig:
    welch_segment_s: float
    counter_gate_s: float = 0.1
    tracking_filter_hz: float = 10.0
    unfiltered_bandwidth_hz: float = 250.0
    overlap_fraction: float = 0.5
    window: str = "hann"
    adev_taus_s: tuple[float, ...] = ()
    psd_band_hz: tuple[float, float] = (1.0, 1000.0)


@dataclass(frozen=True)
class Scenario:
    name: str
    link: LinkTopology
    servo: ServoConfig
    sim: SimConfig
    analysis: AnalysisConfig
    outputs: str | None = None
    max_samples: int = DEFAULT_MAX_SAMPLES


def _num(value, where: str, errors: list, integer: bool = False,
         required: bool = True, default=None):
    """Unit-suffixed numeric field; tolerates YAML leaving numbers as strings."""
    if value is None:
        if required and default is None:
            errors.append(f"error: {where} is required")
            return None
        return default
    try:
        out = float(value)
    except (TypeError, ValueError):
        errors.append(f"error: {where} is not a number: {value!r}")
        return None
    if integer:
        if abs(out - round(out)) > 1e-9:
            errors.append(f"error: {where} must be an integer: {value!r}")
            return None
        return int(round(out))
    return out


def _noise_model(cfg, where: str, errors: list, lineic: bool
                 ) -> PowerLawNoiseModel | None:
    if cfg is None:
        return None
    if not isinstance(cfg, dict) or "terms" not in cfg:
        errors.append(f"error: {where} must be a mapping with a terms list")
        return None
    unknown = set(cfg) - {"terms"}
    if unknown:
        errors.append(f"error: {where} has unknown keys {sorted(unknown)}")
    h_key = "h_rad2_per_hz_per_km" if lineic else "h_rad2_per_hz"
    terms = []
    ok = True
    for i, term in enumerate(cfg.get("terms") or []):
        if not isinstance(term, dict):
            errors.append(f"error: {where} term #{i} must be a mapping")
            ok = False
            continue
        bad = set(term) - {"alpha", h_key}
        if bad:
            errors.append(f"error: {where} term #{i} has unknown keys "
                          f"{sorted(bad)} (expected alpha, {h_key})")
            ok = False
            continue
        alpha = _num(term.get("alpha"), f"{where} term #{i} alpha", errors)
        h = _num(term.get(h_key), f"{where} term #{i} {h_key}", errors)
        if alpha is None or h is None:
            ok = False
            continue
        terms.append((alpha, h))
    if not ok:
        return None
    try:
        return PowerLawNoiseModel(tuple(terms), lineic=lineic)
    except ValueError as exc:
        errors.append(f"error: {where}: {exc}")
        return None


def _parse_link(cfg, noise_cfg, errors: list) -> LinkTopology | None:
    if not isinstance(cfg, dict):
        errors.append("error: link section is required")
        return None
    noise_models = {}
    span_ids = []
    entries = cfg.get("elements")
    if not isinstance(entries, list) or not entries:
        errors.append("error: link.elements must be a non-empty list")
        return None
    for entry in entries:
        if isinstance(entry, dict) and "span" in entry and \
                isinstance(entry["span"], dict):
            span_ids.append(entry["span"].get("id"))
    if noise_cfg is not None:
        if not isinstance(noise_cfg, dict):
            errors.append("error: noise section must map span ids to models")
        else:
            for span_id, model_cfg in noise_cfg.items():
                if span_id not in span_ids:
                    errors.append(f"error: noise section names unknown span "
                                  f"{span_id!r}")
                    continue
                model = _noise_model(model_cfg, f"noise.{span_id}", errors,
                                     lineic=True)
                if model is not None:
                    noise_models[span_id] = model
    # Per-entry validation so several broken entries all get reported.
    ok = True
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict) or len(entry) != 1 or \
                next(iter(entry)) not in ("span", "element"):
            errors.append(f"error: link.elements #{i} must be a single "
                          f"span/element mapping")
            ok = False
            continue
        key, body = next(iter(entry.items()))
        try:
            build_link({"elements": [{key: body}]} if key == "span" else
                       {"elements": [{"span": {"id": "_probe", "length_km": 1.0}},
                                     {key: body}]},
                       noise_models)
        except (ValueError, KeyError, TypeError) as exc:
            errors.append(f"error: link.elements #{i}: {exc}")
            ok = False
    if not ok:
        return None
    try:
        return build_link(cfg, noise_models)
    except (ValueError, KeyError, TypeError) as exc:
        errors.append(f"error: link: {exc}")
        return None


def _parse_servo(cfg, errors: list) -> ServoConfig | None:
    cfg = cfg or {}
    if not isinstance(cfg, dict):
        errors.append("error: servo section must be a mapping")
        return None
    known = {"enabled", "target_loop_bandwidth_hz", "proportional_gain",
             "integrator_gain", "command_filter_pole_hz", "actuator_range_hz",
             "detection_noise_rad2_per_hz"}
    unknown = set(cfg) - known
    if unknown:
        errors.append(f"error: servo has unknown keys {sorted(unknown)}")
        return None
    kwargs = {}
    for key in ("target_loop_bandwidth_hz", "proportional_gain",
                "integrator_gain", "command_filter_pole_hz"):
        if cfg.get(key) is not None:
            kwargs[key] = _num(cfg[key], f"servo.{key}", errors)
    kwargs["actuator_range_hz"] = _num(
        cfg.get("actuator_range_hz"), "servo.actuator_range_hz", errors,
        required=False, default=1.0e6)
    det = _num(cfg.get("detection_noise_rad2_per_hz"),
               "servo.detection_noise_rad2_per_hz", errors,
               required=False, default=1.0e-8)
    kwargs["enabled"] = bool(cfg.get("enabled", True))
    if any(v is None for v in kwargs.values()) or det is None:
        return None
    try:
        return ServoConfig(detection_noise=PowerLawNoiseModel.white(det),
                           **kwargs)
    except ValueError as exc:
        errors.append(f"error: servo: {exc}")
        return None


def _parse_sim(cfg, errors: list) -> tuple[SimConfig | None, int]:
    max_samples = DEFAULT_MAX_SAMPLES
    if not isinstance(cfg, dict):
        errors.append("error: sim section is required")
        return None, max_samples
    known = {"fs_hz", "duration_s", "seed", "cells_per_span", "max_samples"}
    unknown = set(cfg) - known
    if unknown:
        errors.append(f"error: sim has unknown keys {sorted(unknown)}")
    fs = _num(cfg.get("fs_hz"), "sim.fs_hz", errors, required=False,
              default=1.0e4)
    duration = _num(cfg.get("duration_s"), "sim.duration_s", errors)
    if "seed" not in cfg or cfg.get("seed") is None:
        errors.append("error: sim.seed required for reproducibility")
        seed = None
    else:
        seed = _num(cfg.get("seed"), "sim.seed", errors, integer=True)
    cells = _num(cfg.get("cells_per_span"), "sim.cells_per_span", errors,
                 integer=True, required=False, default=16)
    ms = _num(cfg.get("max_samples"), "sim.max_samples", errors, integer=True,
              required=False, default=DEFAULT_MAX_SAMPLES)
    if ms is not None:
        max_samples = ms
    if None in (fs, duration, seed, cells):
        return None, max_samples
    try:
        sim = SimConfig(duration_s=duration, seed=seed, fs_hz=fs,
                        cells_per_span=cells)
    except ValueError as exc:
        errors.append(f"error: sim: {exc}")
        return None, max_samples
    if duration * fs > max_samples:
        errors.append(f"error: sim.duration_s * sim.fs_hz = {duration * fs:.3g} "
                      f"samples exceeds the memory cap {max_samples:.3g} "
                      f"(raise sim.max_samples to override)")
        return None, max_samples
    return sim, max_samples


def _default_taus(gate: float, duration: float) -> tuple[float, ...]:
    out = tuple(t for t in DEFAULT_ADEV_LADDER
                if t >= gate - 1e-12 and t <= duration / 10.0)
    return out or (gate,)


def _parse_analysis(cfg, sim: SimConfig | None, errors: list
                    ) -> AnalysisConfig | None:
    cfg = cfg or {}
    if not isinstance(cfg, dict):
        errors.append("error: analysis section must be a mapping")
        return None
    known = {"welch_segment_s", "counter_gate_s", "tracking_filter_hz",
             "unfiltered_bandwidth_hz", "overlap_fraction", "window",
             "adev_taus_s", "psd_band_hz"}
    unknown = set(cfg) - known
    if unknown:
        errors.append(f"error: analysis has unknown keys {sorted(unknown)}")
    duration = sim.duration_s if sim else 100.0
    fs = sim.fs_hz if sim else 1.0e4
    seg = _num(cfg.get("welch_segment_s"), "analysis.welch_segment_s", errors,
               required=False, default=duration / 10.0)
    gate = _num(cfg.get("counter_gate_s"), "analysis.counter_gate_s", errors,
                required=False, default=0.1)
    tracking = _num(cfg.get("tracking_filter_hz"),
                    "analysis.tracking_filter_hz", errors,
                    required=False, default=10.0)
    unfiltered = _num(cfg.get("unfiltered_bandwidth_hz"),
                      "analysis.unfiltered_bandwidth_hz", errors,
                      required=False, default=250.0)
    overlap = _num(cfg.get("overlap_fraction"), "analysis.overlap_fraction",
                   errors, required=False, default=0.5)
    window = str(cfg.get("window", "hann"))
    band_cfg = cfg.get("psd_band_hz", (1.0, 1000.0))
    band = None
    if not isinstance(band_cfg, (list, tuple)) or len(band_cfg) != 2:
        errors.append("error: analysis.psd_band_hz must be [f1, f2]")
    else:
        f1 = _num(band_cfg[0], "analysis.psd_band_hz[0]", errors)
        f2 = _num(band_cfg[1], "analysis.psd_band_hz[1]", errors)
        if f1 is not None and f2 is not None:
            band = (f1, f2)
    taus_cfg = cfg.get("adev_taus_s")
    taus = None
    if taus_cfg is None:
        if gate is not None:
            taus = _default_taus(gate, duration)
    elif not isinstance(taus_cfg, (list, tuple)) or not taus_cfg:
        errors.append("error: analysis.adev_taus_s must be a non-empty list")
    else:
        vals = [_num(t, f"analysis.adev_taus_s[{i}]", errors)
                for i, t in enumerate(taus_cfg)]
        if all(v is not None for v in vals):
            taus = tuple(sorted(vals))
    if None in (seg, gate, tracking, unfiltered, overlap, band, taus):
        return None
    analysis = AnalysisConfig(
        welch_segment_s=seg, counter_gate_s=gate, tracking_filter_hz=tracking,
        unfiltered_bandwidth_hz=unfiltered, overlap_fraction=overlap,
        window=window, adev_taus_s=taus, psd_band_hz=band)
    # Cross checks against the simulation grid.
    if sim is not None:
        if not 0.0 <= overlap <= 0.9:
            errors.append("error: analysis.overlap_fraction outside [0, 0.9]")
        if seg <= 0.0 or seg > duration / 2.0:
            errors.append(f"error: analysis.welch_segment_s {seg} outside "
                          f"(0, duration/2]")
        m = gate * fs
        if gate <= 0.0 or abs(m - round(m)) > 1e-6 or round(m) < 1:
            errors.append(f"error: analysis.counter_gate_s {gate} is not an "
                          f"integer number of samples at fs = {fs} Hz")
        else:
            for t in taus:
                ratio = t / gate
                if abs(ratio - round(ratio)) > 1e-6 or round(ratio) < 1:
                    errors.append(f"error: analysis tau {t} s is not a multiple "
                                  f"of the gate {gate} s")
                elif t > duration / 3.0:
                    errors.append(f"error: analysis tau {t} s leaves fewer than "
                                  f"3 averaging windows in {duration} s")
        for name, bw in (("tracking_filter_hz", tracking),
                         ("unfiltered_bandwidth_hz", unfiltered)):
            if not 0.0 < bw < fs / 2.0:
                errors.append(f"error: analysis.{name} {bw} outside (0, fs/2)")
        if band is not None:
            if not 0.0 <= band[0] < band[1]:
                errors.append("error: analysis.psd_band_hz needs 0 <= f1 < f2")
            elif band[1] > fs / 2.0:
                errors.append(f"error: analysis.psd_band_hz[1] {band[1]} above "
                              f"Nyquist {fs / 2.0} Hz")
    return analysis


def _parse(cfg: dict, default_name: str) -> tuple[Scenario | None, list]:
    errors: list[str] = []
    if not isinstance(cfg, dict):
        return None, ["error: configuration root must be a mapping"]
    known = {"name", "link", "noise", "servo", "sim", "analysis", "outputs"}
    unknown = set(cfg) - known
    if unknown:
        errors.append(f"error: unknown top-level keys {sorted(unknown)}")
    name = str(cfg.get("name", default_name))
    link = _parse_link(cfg.get("link"), cfg.get("noise"), errors)
    servo = _parse_servo(cfg.get("servo"), errors)
    sim, max_samples = _parse_sim(cfg.get("sim"), errors)
    analysis = _parse_analysis(cfg.get("analysis"), sim, errors)
    outputs = cfg.get("outputs")
    if outputs is not None:
        outputs = str(outputs)
    # Cross-module checks need both sides parsed.
    if link is not None and sim is not None:
        tau = link.one_way_delay_s
        if sim.duration_s < 100.0 * tau:
            errors.append(f"error: sim.duration_s {sim.duration_s} shorter than "
                          f"100 one-way delays ({100.0 * tau:.4g} s)")
        if servo is not None and servo.enabled and \
                servo.target_loop_bandwidth_hz is not None:
            cap = loop_bandwidth_limit(tau)
            if servo.target_loop_bandwidth_hz > cap * (1.0 + 1e-9):
                errors.append(
                    f"error: servo.target_loop_bandwidth_hz "
                    f"{servo.target_loop_bandwidth_hz} exceeds the stability "
                    f"cap 1/(4*tau) = {cap:.6g} Hz")
        if sim.fs_hz < 4.0 / tau:
            errors.append(f"error: sim.fs_hz {sim.fs_hz} cannot resolve the "
                          f"round trip (need at least 4/tau = {4.0 / tau:.4g} Hz)")
        if servo is not None and servo.command_filter_pole_hz is not None \
                and servo.command_filter_pole_hz > sim.fs_hz / 2.0:
            errors.append(f"error: servo.command_filter_pole_hz "
                          f"{servo.command_filter_pole_hz} above Nyquist "
                          f"{sim.fs_hz / 2.0} Hz")
    if errors or None in (link, servo, sim, analysis):
        return None, errors or ["error: configuration incomplete"]
    return Scenario(name=name, link=link, servo=servo, sim=sim,
                    analysis=analysis, outputs=outputs,
                    max_samples=max_samples), errors


def _read_cfg(path) -> dict:
    with open(path) as fh:
        return yaml.safe_load(fh)


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario file; raises ScenarioError on problems."""
    try:
        cfg = _read_cfg(path)
    except yaml.YAMLError as exc:
        raise ScenarioError([f"error: cannot parse {path}: {exc}"]) from exc
    default_name = os.path.splitext(os.path.basename(str(path)))[0]
    scenario, errors = _parse(cfg, default_name)
    if scenario is None:
        raise ScenarioError(errors)
    return scenario


def validate_config(path) -> list[str]:
    """All-at-once validation; returns a list of problems, empty when valid.

    Schema violations are collected rather than raised one by one.  The file
    itself must be readable; an unreadable path raises OSError so the caller
    can distinguish I/O failures from configuration errors.
    """
    try:
        cfg = _read_cfg(path)
    except yaml.YAMLError as exc:
        return [f"error: cannot parse {path}: {exc}"]
    default_name = os.path.splitext(os.path.basename(str(path)))[0]
    _scenario, errors = _parse(cfg, default_name)
    return errors


def load_route(path) -> tuple:
    """Parse a route file for the cascade planner.

    Returns (RouteSpec, name).  Problems raise ScenarioError.
    """
    from .cascade import RouteSpec

    try:
        cfg = _read_cfg(path)
    except yaml.YAMLError as exc:
        raise ScenarioError([f"error: cannot parse {path}: {exc}"]) from exc
    errors: list[str] = []
    if not isinstance(cfg, dict) or not isinstance(cfg.get("route"), dict):
        raise ScenarioError(["error: route section is required"])
    r = cfg["route"]
    known = {"name", "total_length_km", "total_loss_db", "loss_db_per_km",
             "max_segment_loss_db", "min_loop_bandwidth_hz", "noise",
             "group_velocity_m_per_s"}
    unknown = set(r) - known
    if unknown:
        errors.append(f"error: route has unknown keys {sorted(unknown)}")
    name = str(r.get("name",
                     os.path.splitext(os.path.basename(str(path)))[0]))
    length = _num(r.get("total_length_km"), "route.total_length_km", errors)
    total_loss = _num(r.get("total_loss_db"), "route.total_loss_db", errors,
                      required=False)
    per_km = _num(r.get("loss_db_per_km"), "route.loss_db_per_km", errors,
                  required=False)
    max_loss = _num(r.get("max_segment_loss_db"), "route.max_segment_loss_db",
                    errors, required=False, default=42.0)
    min_bw = _num(r.get("min_loop_bandwidth_hz"),
                  "route.min_loop_bandwidth_hz", errors,
                  required=False, default=100.0)
    velocity = _num(r.get("group_velocity_m_per_s"),
                    "route.group_velocity_m_per_s", errors,
                    required=False, default=2.0e8)
    noise = _noise_model(r.get("noise"), "route.noise", errors, lineic=True)
    if noise is None and "noise" in r:
        pass  # already reported
    elif noise is None:
        errors.append("error: route.noise is required")
    if errors or length is None:
        raise ScenarioError(errors or ["error: route incomplete"])
    try:
        spec = RouteSpec(
            total_length_km=length, lineic_noise=noise,
            total_loss_db=total_loss, loss_db_per_km=per_km,
            max_segment_loss_db=max_loss, min_loop_bandwidth_hz=min_bw,
            group_velocity_m_per_s=velocity)
    except ValueError as exc:
        raise ScenarioError([f"error: route: {exc}"]) from exc
    return spec, name
