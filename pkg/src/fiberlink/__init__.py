"""Simulation and analysis toolkit for round-trip-compensated fiber links.

The pieces mirror the experiment they model: colored phase-noise synthesis
distributed along the fiber (noise), the optical loss/crosstalk bookkeeping
(link), the time-domain cancellation servo (servo), frequency-metrology
estimators (metrology), multi-segment route planning (cascade), and a
scenario-driven CLI with CSV artifacts (cli, csvio, scenario).
"""

from .noise import (
    PowerLawNoiseModel,
    PhaseSeries,
    NoiseField,
    synth_power_law_phase_noise,
    fiber_noise_field,
    estimate_lineic_psd,
)
from .link import (
    FiberSpan,
    OpticalElement,
    LinkTopology,
    BudgetReport,
    CrosstalkReport,
    build_link,
    link_budget,
    crosstalk_report,
    propagation_delays,
)
from .metrology import (
    PsdEstimate,
    FractionalFreqSeries,
    AdevSeries,
    RejectionSpectrum,
    welch_psd,
    integrated_rms_phase,
    pi_counter,
    tracking_filter,
    allan_deviation,
    rejection_spectrum,
    adev_of_phase,
)
from .servo import (
    ServoConfig,
    SimConfig,
    TransferResult,
    UnstableLoopError,
    simulate_free_running,
    simulate_compensated,
    simulate_pair,
    loop_bandwidth_limit,
    residual_transfer_ratio,
    residual_ratio_from_delays,
    rule_of_thumb_rejection,
)
from .cascade import (
    RouteSpec,
    CascadeSegment,
    Station,
    CascadePlan,
    PlanInfeasibleError,
    plan_cascade,
    predict_cascade_adev,
)
from .scenario import (
    Scenario,
    AnalysisConfig,
    ScenarioError,
    load_scenario,
    validate_config,
    load_route,
)
from .cli import RunReport, run_scenario, run_plan, analyze_file

__version__ = "0.1.0"

__all__ = [
    "PowerLawNoiseModel", "PhaseSeries", "NoiseField",
    "synth_power_law_phase_noise", "fiber_noise_field", "estimate_lineic_psd",
    "FiberSpan", "OpticalElement", "LinkTopology", "BudgetReport",
    "CrosstalkReport", "build_link", "link_budget", "crosstalk_report",
    "propagation_delays",
    "PsdEstimate", "FractionalFreqSeries", "AdevSeries", "RejectionSpectrum",
    "welch_psd", "integrated_rms_phase", "pi_counter", "tracking_filter",
    "allan_deviation", "rejection_spectrum", "adev_of_phase",
    "ServoConfig", "SimConfig", "TransferResult", "UnstableLoopError",
    "simulate_free_running", "simulate_compensated", "simulate_pair",
    "loop_bandwidth_limit", "residual_transfer_ratio",
    "residual_ratio_from_delays", "rule_of_thumb_rejection",
    "RouteSpec", "CascadeSegment", "Station", "CascadePlan",
    "PlanInfeasibleError", "plan_cascade", "predict_cascade_adev",
    "Scenario", "AnalysisConfig", "ScenarioError", "load_scenario",
    "validate_config", "load_route",
    "RunReport", "run_scenario", "run_plan", "analyze_file",
    "__version__",
]
