"""Scenario-driven command line front end.

Verbs: validate, run, plan, analyze.  `run` executes the free-running and
compensated simulations for one scenario and emits CSV artifacts plus a
plain-text report; every measured figure in the report is recomputed from the
emitted CSVs, so the report never states anything the artifacts cannot back.

Exit codes: 0 success, 1 configuration error, 2 simulation failure,
3 I/O failure.  The default output root comes from $FIBERLINK_OUTPUT_ROOT.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import csvio
from .cascade import PlanInfeasibleError, plan_cascade, predict_cascade_adev
from .link import DEFAULT_CARRIER_FREQUENCY_HZ, link_budget
from .metrology import (
    PsdEstimate,
    FractionalFreqSeries,
    allan_deviation,
    integrated_rms_phase,
    pi_counter,
    rejection_spectrum,
    tracking_filter,
    welch_psd,
)
from .noise import PhaseSeries
from .scenario import (
    Scenario,
    ScenarioError,
    load_route,
    load_scenario,
    validate_config,
)
from .servo import (
    UnstableLoopError,
    loop_bandwidth_limit,
    residual_transfer_ratio,
    rule_of_thumb_rejection,
    simulate_pair,
)

__all__ = ["RunReport", "run_scenario", "run_plan", "analyze_file", "main"]

OUTPUT_ROOT_ENV = "FIBERLINK_OUTPUT_ROOT"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SIMULATION = 2
EXIT_IO = 3


@dataclass
class RunReport:
    """Everything `run` measured, plus where the backing artifacts live."""

    scenario_name: str
    output_dir: str
    artifacts: dict = dc_field(default_factory=dict)  # short name -> path
    settings: dict = dc_field(default_factory=dict)   # engine echo
    total_one_way_loss_db: float = 0.0
    total_round_trip_loss_db: float = 0.0
    launch_power_w: float = 0.0
    output_power_w: float = 0.0
    injection_node_id: str | None = None
    injection_power_w: float | None = None
    rejection_at_1hz_db: float | None = None
    rejection_bin_hz: float | None = None
    distributed_limit_db: float | None = None
    rule_of_thumb_db: float | None = None
    free_psd_at_1hz: float | None = None
    model_psd_at_1hz: float | None = None
    correction_psd_at_1hz: float | None = None
    integrated_phase_rad: float | None = None
    integration_band_hz: tuple | None = None
    adev_taus_s: tuple = ()
    adev_filtered: tuple = ()
    adev_unfiltered: tuple = ()
    adev_counts: tuple = ()
    correction_adev_at_1s: float | None = None
    unfiltered_to_filtered_at_1s: float | None = None
    floor_fit_level_at_1s: float | None = None
    floor_fit_slope: float | None = None
    lock_acquired_at_s: float = 0.0
    saturated_fraction: float = 0.0
    warnings: tuple = ()
    text: str = ""


def _resolve_output_dir(name: str, scenario_outputs: str | None,
                        explicit: str | None) -> str:
    if explicit:
        return explicit
    if scenario_outputs:
        return scenario_outputs
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root:
        return os.path.join(root, name)
    return os.path.join("runs", name)


def _nearest_row(data: np.ndarray, column: int, value: float) -> int:
    return int(np.argmin(np.abs(data[:, column] - value)))


def _exact_row(data: np.ndarray, column: int, value: float) -> int | None:
    hits = np.nonzero(np.isclose(data[:, column], value, rtol=1e-9, atol=0.0))[0]
    return int(hits[0]) if hits.size else None


def run_scenario(source, output_dir: str | None = None) -> RunReport:
    """Run one scenario end to end and emit all artifacts.

    `source` is a config path or an already-loaded Scenario.  Returns a
    RunReport whose scalar fields are read back from the emitted CSVs.
    Identical (config, seed) pairs produce byte-identical artifacts; nothing
    time- or host-dependent is written.
    """
    sc = source if isinstance(source, Scenario) else load_scenario(source)
    out = _resolve_output_dir(sc.name, sc.outputs, output_dir)
    os.makedirs(out, exist_ok=True)
    rep = RunReport(scenario_name=sc.name, output_dir=out)
    warnings: list[str] = []

    def path_of(fname: str) -> str:
        p = os.path.join(out, fname)
        rep.artifacts[fname] = p
        return p

    budget = link_budget(sc.link)
    csvio.write_budget_csv(path_of("budget.csv"), budget)
    warnings.extend(budget.warnings)
    rep.total_round_trip_loss_db = budget.total_round_trip_loss_db
    rep.launch_power_w = sc.link.input_power_w
    rep.injection_node_id = sc.link.injection_node_id

    free, comp = simulate_pair(sc.link, None, sc.servo, sc.sim)
    rep.settings = dict(comp.settings)
    rep.lock_acquired_at_s = comp.lock_acquired_at_s
    rep.saturated_fraction = comp.saturated_fraction
    if comp.saturated:
        warnings.append(f"actuator saturated for "
                        f"{comp.saturated_fraction:.3%} of samples")

    fs = sc.sim.fs_hz
    n = free.residual_phase.samples.size
    i0 = min(int(math.ceil(comp.lock_acquired_at_s * fs)), n // 2)
    t0 = i0 / fs
    res_free = PhaseSeries(free.residual_phase.samples[i0:], fs, t0)
    res_comp = PhaseSeries(comp.residual_phase.samples[i0:], fs, t0)
    correction = PhaseSeries(comp.correction_phase.samples[i0:], fs, t0)

    nperseg = int(round(sc.analysis.welch_segment_s * fs))
    nperseg = max(2, min(nperseg, res_free.samples.size))
    welch_kw = dict(segment_length=nperseg,
                    overlap_fraction=sc.analysis.overlap_fraction,
                    window=sc.analysis.window)
    psd_free = welch_psd(res_free, **welch_kw)
    psd_comp = welch_psd(res_comp, **welch_kw)
    psd_corr = welch_psd(correction, **welch_kw)
    csvio.write_psd_csv(path_of("free_psd.csv"), psd_free)
    csvio.write_psd_csv(path_of("compensated_psd.csv"), psd_comp)
    csvio.write_psd_csv(path_of("correction_psd.csv"), psd_corr)
    rejection = rejection_spectrum(psd_free, psd_comp)
    csvio.write_csv(path_of("rejection.csv"), ["freq_hz", "ratio_db"],
                    [rejection.freq_hz, rejection.ratio_db])

    # Counter chains.  The trim can make the longest taus unusable; drop
    # them rather than fail.
    nu0 = sc.link.carrier_frequency_hz
    gate = sc.analysis.counter_gate_s
    span_s = res_comp.samples.size / fs
    taus = tuple(t for t in sc.analysis.adev_taus_s if t <= span_s / 3.0)
    for t in sorted(set(sc.analysis.adev_taus_s) - set(taus)):
        warnings.append(f"tau {t:g} s dropped: fewer than 3 windows left "
                        f"after the lock-acquisition trim")
    filt = tracking_filter(res_comp, sc.analysis.tracking_filter_hz)
    y_filt = pi_counter(filt, gate, nu0)
    csvio.write_freq_series_csv(
        path_of("residual_freq_filtered.csv"),
        t0 + np.arange(y_filt.y.size) * gate, y_filt.y)
    unfilt = tracking_filter(res_comp, sc.analysis.unfiltered_bandwidth_hz)
    y_unfilt = pi_counter(unfilt, gate, nu0)
    corr_filt = tracking_filter(correction, sc.analysis.tracking_filter_hz)
    y_corr = pi_counter(corr_filt, gate, nu0)
    if taus:
        csvio.write_adev_csv(path_of("residual_adev_filtered.csv"),
                             allan_deviation(y_filt, taus))
        csvio.write_adev_csv(path_of("residual_adev_unfiltered.csv"),
                             allan_deviation(y_unfilt, taus))
        csvio.write_adev_csv(path_of("correction_adev.csv"),
                             allan_deviation(y_corr, taus))
    else:
        warnings.append("no usable taus; ADEV artifacts not written")

    _collect_scalars(rep, sc, warnings)
    rep.warnings = tuple(warnings)
    rep.text = _render_report(rep, sc)
    with open(path_of("report.txt"), "w", newline="\n") as fh:
        fh.write(rep.text)
    return rep


def _collect_scalars(rep: RunReport, sc: Scenario, warnings: list) -> None:
    """Read every reported figure back from the artifacts just written."""
    rows = csvio.read_budget_csv(rep.artifacts["budget.csv"])
    rep.total_one_way_loss_db = rows[-1]["cumulative_db"]
    rep.output_power_w = rows[-1]["power_w"]
    if rep.injection_node_id is not None:
        rep.injection_power_w = next(
            r["power_w"] for r in rows
            if r["element_id"] == rep.injection_node_id)

    _, rej = csvio.read_csv(rep.artifacts["rejection.csv"])
    i = _nearest_row(rej, 0, 1.0)
    rep.rejection_bin_hz = float(rej[i, 0])
    rep.rejection_at_1hz_db = float(rej[i, 1])
    tau = sc.link.one_way_delay_s
    if 1.0 < loop_bandwidth_limit(tau):
        rep.distributed_limit_db = 10.0 * math.log10(
            residual_transfer_ratio(1.0, tau, "uniform"))
    rep.rule_of_thumb_db = 10.0 * math.log10(rule_of_thumb_rejection(1.0, tau))

    _, fpsd = csvio.read_csv(rep.artifacts["free_psd.csv"])
    j = _nearest_row(fpsd, 0, 1.0)
    rep.free_psd_at_1hz = float(fpsd[j, 1])
    rep.model_psd_at_1hz = float(sum(
        s.lineic_noise.psd(np.array([1.0]))[0] * s.length_km
        for s in sc.link.spans()
        if s.lineic_noise is not None and not s.lineic_noise.is_silent))
    _, cpsd = csvio.read_csv(rep.artifacts["correction_psd.csv"])
    rep.correction_psd_at_1hz = float(cpsd[_nearest_row(cpsd, 0, 1.0), 1])

    _, comp = csvio.read_csv(rep.artifacts["compensated_psd.csv"])
    band = sc.analysis.psd_band_hz
    est = PsdEstimate(comp[:, 0], comp[:, 1],
                      resolution_bandwidth_hz=float(comp[1, 0] - comp[0, 0]),
                      window=sc.analysis.window, segments=1)
    if band[0] >= est.freq_hz[0] and band[1] <= est.freq_hz[-1]:
        rep.integration_band_hz = band
        rep.integrated_phase_rad = integrated_rms_phase(est, band[0], band[1])
    else:
        warnings.append(f"integration band {band} Hz outside estimated bins;"
                        f" integrated phase skipped")

    if "residual_adev_filtered.csv" in rep.artifacts:
        _, af = csvio.read_csv(rep.artifacts["residual_adev_filtered.csv"])
        _, au = csvio.read_csv(rep.artifacts["residual_adev_unfiltered.csv"])
        _, ac = csvio.read_csv(rep.artifacts["correction_adev.csv"])
        rep.adev_taus_s = tuple(af[:, 0])
        rep.adev_filtered = tuple(af[:, 1])
        rep.adev_unfiltered = tuple(au[:, 1])
        rep.adev_counts = tuple(int(c) for c in af[:, 2])
        k = _exact_row(af, 0, 1.0)
        if k is not None:
            if au[k, 1] > 0.0 and af[k, 1] > 0.0:
                rep.unfiltered_to_filtered_at_1s = float(au[k, 1] / af[k, 1])
            rep.correction_adev_at_1s = float(ac[k, 1])
        # 1/tau floor fit over the same window the slope checks use.
        sel = (af[:, 0] >= 1.0) & (af[:, 0] <= 100.0) & (af[:, 1] > 0.0)
        if sel.sum() >= 2:
            slope, intercept = np.polyfit(np.log10(af[sel, 0]),
                                          np.log10(af[sel, 1]), 1)
            rep.floor_fit_slope = float(slope)
            rep.floor_fit_level_at_1s = float(10.0 ** intercept)


def _render_report(rep: RunReport, sc: Scenario) -> str:
    s = rep.settings
    tau = s.get("tau_oneway_s", sc.link.one_way_delay_s)
    lines = [
        f"fiberlink run: {rep.scenario_name}",
        "=" * (15 + len(rep.scenario_name)),
        "",
        "configuration echo",
        "------------------",
        f"  link length:         {sc.link.total_length_km:.3f} km "
        f"(one-way delay {tau:.4e} s)",
        f"  loop bandwidth cap:  {s.get('loop_bandwidth_cap_hz', 0.0):.4g} Hz "
        f"= 1/(4*tau)",
    ]
    if s.get("servo_enabled"):
        lines += [
            f"  servo:               target bandwidth "
            f"{s.get('target_loop_bandwidth_hz', 0.0):.4g} Hz "
            f"(kp {s.get('proportional_gain', 0.0):.4e}, "
            f"ki {s.get('integrator_gain', 0.0):.4e})",
            f"  lock acquired at:    {rep.lock_acquired_at_s:.4e} s "
            f"(samples before this are discarded)",
            f"  actuator saturation: {rep.saturated_fraction:.3%} of samples",
        ]
    else:
        lines += ["  servo:               disabled (free-running comparison "
                  "run)"]
    lines += [
        f"  sampling:            {sc.sim.fs_hz:g} Hz for {sc.sim.duration_s:g} "
        f"s, seed {sc.sim.seed}, {sc.sim.cells_per_span} cells/span",
        "",
        "link budget [budget.csv]",
        "------------------------",
        f"  total one-way loss:   {rep.total_one_way_loss_db:.2f} dB "
        f"(round trip {rep.total_round_trip_loss_db:.2f} dB)",
        f"  launch power:         {rep.launch_power_w:.4e} W",
        f"  remote output power:  {rep.output_power_w:.4e} W",
    ]
    if rep.injection_power_w is not None:
        lines.append(f"  injection node power: {rep.injection_power_w:.4e} W "
                     f"at {rep.injection_node_id!r}")
    lines += [
        "",
        f"rejection at {rep.rejection_bin_hz:.3f} Hz [rejection.csv]",
        "--------------------------------------",
        f"  engine (compensated/free):  {rep.rejection_at_1hz_db:+.1f} dB",
    ]
    if rep.distributed_limit_db is not None:
        lines.append(f"  distributed-noise limit:    "
                     f"{rep.distributed_limit_db:+.1f} dB  "
                     f"[(1/3)*(2*pi*f*tau)^2]")
    lines += [
        f"  round-trip rule of thumb:   {rep.rule_of_thumb_db:+.1f} dB  "
        f"[(f*t_trip)^2]",
        "  The two analytic conventions differ by a fixed factor of",
        "  (2*pi)^2/3 (11.2 dB).  The rule of thumb often quoted for",
        "  round-trip-compensated links omits the 2*pi and the spatial 1/3;",
        "  the engine asymptote follows the distributed-noise convention.",
        "  Both are reported; neither is adjusted to match the other.",
        "",
        "free-running noise at 1 Hz [free_psd.csv]",
        "-----------------------------------------",
        f"  measured: {rep.free_psd_at_1hz:.4e} rad^2/Hz",
        f"  model:    {rep.model_psd_at_1hz:.4e} rad^2/Hz "
        f"(sum of span lineic models)",
    ]
    if rep.integrated_phase_rad is not None:
        b0, b1 = rep.integration_band_hz
        lines += [
            "",
            f"integrated residual phase, {b0:g} Hz to {b1:g} Hz "
            f"[compensated_psd.csv]",
            "---------------------------------------------------------",
            f"  rms phase: {rep.integrated_phase_rad:.3f} rad",
        ]
    if rep.adev_taus_s:
        lines += [
            "",
            "residual stability [residual_adev_filtered.csv, "
            "residual_adev_unfiltered.csv]",
            "-----------------------------------------------------------",
            f"  tracking filter {sc.analysis.tracking_filter_hz:g} Hz; "
            f"unfiltered counter bandwidth "
            f"{sc.analysis.unfiltered_bandwidth_hz:g} Hz",
            "  tau_s        adev (filtered)  adev (unfiltered)  count",
        ]
        for t, a_f, a_u, c in zip(rep.adev_taus_s, rep.adev_filtered,
                                  rep.adev_unfiltered, rep.adev_counts):
            lines.append(f"  {t:<12.4g} {a_f:<16.4e} {a_u:<18.4e} {c}")
        if rep.unfiltered_to_filtered_at_1s is not None:
            lines.append(f"  unfiltered/filtered at 1 s: "
                         f"{rep.unfiltered_to_filtered_at_1s:.2f}")
        if rep.floor_fit_slope is not None:
            lines.append(
                f"  1/tau floor fit (filtered, 1 <= tau <= 100 s): sigma_y = "
                f"{rep.floor_fit_level_at_1s:.3e} / tau"
                f" (log-log slope {rep.floor_fit_slope:+.2f})")
        if rep.correction_adev_at_1s is not None:
            lines += [
                "",
                "correction signal [correction_psd.csv, correction_adev.csv]",
                "------------------------------------------------------------",
                f"  PSD at 1 Hz: {rep.correction_psd_at_1hz:.4e} rad^2/Hz "
                f"(free-running: {rep.free_psd_at_1hz:.4e})",
                f"  ADEV at 1 s: {rep.correction_adev_at_1s:.4e}",
            ]
    lines += ["", "warnings", "--------"]
    if rep.warnings:
        lines += [f"  {w}" for w in rep.warnings]
    else:
        lines.append("  (none)")
    lines.append("")
    return "\n".join(lines)


def run_plan(source, output_dir: str | None = None) -> dict:
    """Plan a cascaded route and write plan artifacts.

    Returns {"plan": CascadePlan, "artifacts": {name: path}, "text": str}.
    """
    route, name = source if isinstance(source, tuple) else load_route(source)
    plan = plan_cascade(route)
    plan.self_check()
    out = _resolve_output_dir(name, None, output_dir)
    os.makedirs(out, exist_ok=True)
    artifacts: dict[str, str] = {}

    plan_path = os.path.join(out, "plan.csv")
    artifacts["plan.csv"] = plan_path
    csvio.write_csv(
        plan_path,
        ["segment_id", "length_km", "loss_db", "tau_s", "bw_hz"],
        [np.array([seg.index for seg in plan.segments], dtype=float),
         np.array([seg.length_km for seg in plan.segments]),
         np.array([seg.loss_db for seg in plan.segments]),
         np.array([seg.tau_oneway_s for seg in plan.segments]),
         np.array([seg.loop_bandwidth_cap_hz for seg in plan.segments])],
        formats=["%d", csvio.SCI, csvio.SCI, csvio.SCI, csvio.SCI])

    taus = (1.0, 10.0, 100.0, 1000.0)
    predicted = predict_cascade_adev(plan, route.lineic_noise, taus)
    adev_path = os.path.join(out, "predicted_adev.csv")
    artifacts["predicted_adev.csv"] = adev_path
    csvio.write_adev_csv(adev_path, predicted)

    seg = plan.segments[0]
    frag_path = os.path.join(out, "segment_scenario.cfg")
    artifacts["segment_scenario.cfg"] = frag_path
    with open(frag_path, "w", newline="\n") as fh:
        fh.write(_segment_scenario_text(name, seg, route))

    # Scalars below are read back from the plan CSV, same policy as `run`.
    _, pdata = csvio.read_csv(plan_path)
    _, adata = csvio.read_csv(adev_path)
    lines = [
        f"fiberlink plan: {name}",
        "=" * (16 + len(name)),
        f"route: {route.total_length_km:g} km, {route.route_loss_db:.2f} dB",
        f"constraints: segment loss <= {route.max_segment_loss_db:g} dB, "
        f"loop bandwidth >= {route.min_loop_bandwidth_hz:g} Hz",
        f"plan [plan.csv]: {pdata.shape[0]} segment(s) of "
        f"{pdata[0, 1]:.3f} km / {pdata[0, 2]:.2f} dB",
        f"  per-segment one-way delay {pdata[0, 3]:.4e} s, "
        f"loop bandwidth cap {pdata[0, 4]:.1f} Hz",
    ]
    if plan.stations:
        st = plan.stations[0]
        lines.append(f"interior stations: {len(plan.stations)} "
                     f"({st.description})")
        lines.append(f"  functions at each: {', '.join(st.functions)}")
    else:
        lines.append("interior stations: none (single segment)")
    lines += [
        f"predicted cascade ADEV [predicted_adev.csv]: "
        f"sigma_y({adata[0, 0]:g} s) = {adata[0, 1]:.3e}",
        "a runnable single-segment configuration was written to "
        "segment_scenario.cfg",
        "",
    ]
    text = "\n".join(lines)
    report_path = os.path.join(out, "plan_report.txt")
    artifacts["plan_report.txt"] = report_path
    with open(report_path, "w", newline="\n") as fh:
        fh.write(text)
    return {"plan": plan, "artifacts": artifacts, "text": text,
            "output_dir": out}


def _segment_scenario_text(name: str, seg, route) -> str:
    noise_lines = "".join(
        f"      - {{alpha: {alpha:g}, h_rad2_per_hz_per_km: {h:g}}}\n"
        for alpha, h in route.lineic_noise.terms)
    return (
        f"# One segment of the {name} plan, runnable with `fiberlink run`.\n"
        f"name: {name}_segment\n"
        f"link:\n"
        f"  elements:\n"
        f"    - span: {{id: segment_{seg.index}, "
        f"length_km: {seg.length_km:g}, loss_db: {seg.loss_db:g}}}\n"
        f"noise:\n"
        f"  segment_{seg.index}:\n"
        f"    terms:\n{noise_lines}"
        f"sim:\n"
        f"  duration_s: 200.0\n"
        f"  fs_hz: 10000.0\n"
        f"  seed: 1\n"
    )


def analyze_file(path, mode: str, out: str | None = None,
                 nu0_hz: float | None = None) -> str | None:
    """Standalone estimators over a CSV on disk.

    mode "adev": input (t_s, y) fractional frequency -> (tau_s, adev, count).
    mode "psd": input (t_s, phase_rad) -> (freq_hz, psd_rad2_per_hz).
    Returns the output path, or None when printed to stdout.
    """
    names, data = csvio.read_csv(path)
    if data.shape[0] < 3:
        raise ScenarioError([f"error: {path} has too few rows to analyze"])
    t = data[:, 0]
    dt = float(t[1] - t[0])
    if dt <= 0.0 or np.max(np.abs(np.diff(t) - dt)) > 1e-6 * dt:
        raise ScenarioError([f"error: {path} time column is not uniformly "
                             f"spaced"])
    if mode == "adev":
        if names != ["t_s", "y"]:
            raise ScenarioError(
                [f"error: --adev expects columns t_s,y; got {','.join(names)}"])
        nu0 = nu0_hz if nu0_hz is not None else DEFAULT_CARRIER_FREQUENCY_HZ
        series = FractionalFreqSeries(data[:, 1], gate_s=dt, nu0_hz=nu0)
        n = series.y.size
        # 1-2-5 ladder of gate multiples, keeping >= 3 averaging windows.
        ladder = []
        decade = 1
        while 3 * decade <= n:
            ladder.extend(c * decade for c in (1, 2, 5) if 3 * c * decade <= n)
            decade *= 10
        taus = [k * dt for k in ladder]
        result = allan_deviation(series, taus)
        out_names = ["tau_s", "adev", "count"]
        cols = [result.tau_s, result.adev, result.count]
        formats = [csvio.SCI, csvio.SCI, "%d"]
    elif mode == "psd":
        if names != ["t_s", "phase_rad"]:
            raise ScenarioError(
                [f"error: --psd expects columns t_s,phase_rad; got "
                 f"{','.join(names)}"])
        series = PhaseSeries(data[:, 1], fs=1.0 / dt, t0=float(t[0]))
        est = welch_psd(series)
        out_names = ["freq_hz", "psd_rad2_per_hz"]
        cols = [est.freq_hz, est.psd]
        formats = [csvio.SCI, csvio.SCI]
    else:
        raise ScenarioError([f"error: unknown analyze mode {mode!r}"])
    if out:
        csvio.write_csv(out, out_names, cols, formats)
        return out
    sys.stdout.write(",".join(out_names) + "\n")
    for row in zip(*cols):
        sys.stdout.write(",".join(f % v for f, v in zip(formats, row)) + "\n")
    return None


def _cmd_validate(args) -> int:
    problems = validate_config(args.config)
    if problems:
        for p in problems:
            print(p, file=sys.stderr)
        return EXIT_CONFIG
    print(f"OK: {args.config}")
    return EXIT_OK


def _cmd_run(args) -> int:
    scenario = load_scenario(args.config)
    report = run_scenario(scenario, args.out)
    sys.stdout.write(report.text)
    print(f"artifacts in {report.output_dir}")
    return EXIT_OK


def _cmd_plan(args) -> int:
    result = run_plan(args.route, args.out)
    sys.stdout.write(result["text"])
    print(f"artifacts in {result['output_dir']}")
    return EXIT_OK


def _cmd_analyze(args) -> int:
    mode = "adev" if args.adev else "psd"
    written = analyze_file(args.csv, mode, out=args.out, nu0_hz=args.nu0)
    if written:
        print(f"wrote {written}")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    """argparse exits usage errors with status 2; remap them to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fiberlink",
                description="Fiber frequency-link simulation and analysis")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    v = sub.add_parser("validate", help="check a scenario config")
    v.add_argument("config")
    v.set_defaults(func=_cmd_validate)

    r = sub.add_parser("run", help="simulate a scenario and emit artifacts")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (default: scenario "
                                 "outputs, then $FIBERLINK_OUTPUT_ROOT/name, "
                                 "then ./runs/name)")
    r.set_defaults(func=_cmd_run)

    pl = sub.add_parser("plan", help="split a route into compensated segments")
    pl.add_argument("route")
    pl.add_argument("--out")
    pl.set_defaults(func=_cmd_plan)

    an = sub.add_parser("analyze", help="run estimators over a CSV")
    an.add_argument("csv")
    g = an.add_mutually_exclusive_group(required=True)
    g.add_argument("--adev", action="store_true",
                   help="input t_s,y; output tau_s,adev,count")
    g.add_argument("--psd", action="store_true",
                   help="input t_s,phase_rad; output freq_hz,psd_rad2_per_hz")
    an.add_argument("--out", help="write result here instead of stdout")
    an.add_argument("--nu0", type=float, default=None,
                    help="carrier frequency for --adev (Hz)")
    an.set_defaults(func=_cmd_analyze)
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        for problem in exc.problems:
            print(problem, file=sys.stderr)
        return EXIT_CONFIG
    except PlanInfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UnstableLoopError, ValueError, RuntimeError) as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_SIMULATION


if __name__ == "__main__":
    sys.exit(main())
