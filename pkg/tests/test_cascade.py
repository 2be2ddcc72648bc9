"""Cascade planner and analytic prediction unit tests."""

import math

import numpy as np
import pytest

from fiberlink import (
    CascadePlan,
    PlanInfeasibleError,
    PowerLawNoiseModel,
    RouteSpec,
    plan_cascade,
    predict_cascade_adev,
)
from fiberlink.cascade import REPEATER_DESCRIPTION, STATION_FUNCTIONS

LINEIC = PowerLawNoiseModel(((2.0, 1.4),), lineic=True)


def route(length_km=600.0, **kw):
    kw.setdefault("total_loss_db", 167.0)
    return RouteSpec(total_length_km=length_km, lineic_noise=LINEIC, **kw)


def test_short_route_stays_a_single_segment():
    plan = plan_cascade(route(length_km=100.0, total_loss_db=25.0))
    assert len(plan.segments) == 1
    assert plan.stations == ()
    plan.self_check()


def test_600_km_route_splits_into_four():
    plan = plan_cascade(route())
    assert len(plan.segments) == 4
    assert len(plan.stations) == 3
    seg = plan.segments[0]
    assert seg.length_km == pytest.approx(150.0)
    assert seg.loss_db == pytest.approx(167.0 / 4.0)
    assert seg.loop_bandwidth_cap_hz == pytest.approx(
        1.0 / (4.0 * 150.0e3 / 2.0e8))
    assert all(s.length_km == plan.segments[0].length_km
               for s in plan.segments)
    plan.self_check()


def test_tighter_bandwidth_floor_forces_more_segments():
    loose = plan_cascade(route(min_loop_bandwidth_hz=100.0))
    tight = plan_cascade(route(min_loop_bandwidth_hz=400.0))
    assert len(tight.segments) > len(loose.segments)
    # 400 Hz cap needs tau <= 625 us, i.e. segments of at most 125 km
    assert tight.segments[0].length_km <= 125.0
    tight.self_check()


def test_infeasible_route_names_the_binding_constraint():
    with pytest.raises(PlanInfeasibleError, match="loss constraint"):
        plan_cascade(route(total_loss_db=1.0e5, max_segment_loss_db=10.0))
    with pytest.raises(PlanInfeasibleError, match="bandwidth constraint"):
        plan_cascade(route(length_km=1.0e6, loss_db_per_km=0.0,
                           total_loss_db=None,
                           min_loop_bandwidth_hz=50_000.0))


def test_route_spec_validation():
    with pytest.raises(ValueError, match="exactly one"):
        RouteSpec(total_length_km=100.0, lineic_noise=LINEIC)
    with pytest.raises(ValueError, match="exactly one"):
        RouteSpec(total_length_km=100.0, lineic_noise=LINEIC,
                  total_loss_db=20.0, loss_db_per_km=0.2)
    with pytest.raises(ValueError, match="lineic"):
        RouteSpec(total_length_km=100.0, total_loss_db=20.0,
                  lineic_noise=PowerLawNoiseModel.white(1.0))
    spec = route(loss_db_per_km=0.25, total_loss_db=None)
    assert spec.route_loss_db == pytest.approx(150.0)


def test_station_contract():
    plan = plan_cascade(route())
    for station in plan.stations:
        assert set(station.functions) == set(STATION_FUNCTIONS)
        assert station.description == REPEATER_DESCRIPTION
    assert "send_back" in STATION_FUNCTIONS
    assert "compensate_next" in STATION_FUNCTIONS
    assert "phase-locked" in REPEATER_DESCRIPTION


def test_self_check_catches_a_corrupted_plan():
    plan = plan_cascade(route())
    broken = CascadePlan(
        segments=plan.segments,
        stations=plan.stations[:-1],  # one station missing
        total_length_km=plan.total_length_km,
        total_loss_db=plan.total_loss_db,
        max_segment_loss_db=plan.max_segment_loss_db,
        min_loop_bandwidth_hz=plan.min_loop_bandwidth_hz,
    )
    with pytest.raises(AssertionError, match="station count"):
        broken.self_check()


def test_prediction_improves_linearly_with_the_split():
    # under uniform noise, N equal segments predict an N-fold ADEV gain
    one = plan_cascade(route(length_km=216.0, total_loss_db=30.0,
                             min_loop_bandwidth_hz=100.0))
    assert len(one.segments) == 1
    two = plan_cascade(route(length_km=216.0, total_loss_db=50.0,
                             max_segment_loss_db=25.0))
    assert len(two.segments) == 2
    a1 = predict_cascade_adev(one, LINEIC, [1.0]).adev[0]
    a2 = predict_cascade_adev(two, LINEIC, [1.0]).adev[0]
    assert a1 / a2 == pytest.approx(2.0, rel=1e-9)


def test_prediction_scales_as_one_over_tau_and_with_bandwidth():
    plan = plan_cascade(route())
    result = predict_cascade_adev(plan, LINEIC, [1.0, 10.0, 100.0])
    assert result.adev[0] / result.adev[1] == pytest.approx(10.0)
    assert result.adev[1] / result.adev[2] == pytest.approx(10.0)
    wide = predict_cascade_adev(plan, LINEIC, [1.0],
                                measurement_bandwidth_hz=40.0)
    assert wide.adev[0] == pytest.approx(2.0 * result.adev[0])


def test_prediction_closed_form_single_segment():
    plan = plan_cascade(route(length_km=108.0, total_loss_db=38.0))
    assert len(plan.segments) == 1
    tau = 108.0e3 / 2.0e8
    s_white = (2.0 * math.pi * tau) ** 2 / 3.0 * 1.4 * 108.0
    nu0 = 1.944e14
    expected = math.sqrt(3.0 * (math.pi / 4.0) * 10.0 * s_white) \
        / (2.0 * math.pi * nu0)
    got = predict_cascade_adev(plan, LINEIC, [1.0]).adev[0]
    assert got == pytest.approx(expected, rel=1e-12)


def test_station_noise_adds_in_quadrature():
    plan = plan_cascade(route())
    base = predict_cascade_adev(plan, LINEIC, [1.0]).adev[0]
    noisy = predict_cascade_adev(plan, LINEIC, [1.0],
                                 station_noise_rad2_per_hz=1.0e-6).adev[0]
    assert noisy > base
    with pytest.raises(ValueError, match="station noise"):
        predict_cascade_adev(plan, LINEIC, [1.0],
                             station_noise_rad2_per_hz=-1.0)
    with pytest.raises(ValueError, match="lineic"):
        predict_cascade_adev(plan, PowerLawNoiseModel.white(1.0), [1.0])
