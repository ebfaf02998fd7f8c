"""Telemetry container, QoS arithmetic, and plot emission."""

import json
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfcnet.errors import MfcError
from mfcnet.metrics import (
    COLUMNS,
    QosReport,
    RunTelemetry,
    compute_qos,
    emit_plots,
    saturation_mask,
    settling_times,
)
from mfcnet.scenarios import get
from mfcnet.transport import Direction


# Oracles: the two error integrals written out directly, applied to the
# raw column arrays, with no knowledge of the report container.

def oracle_rmse(e):
    return float(np.sqrt(np.mean(np.asarray(e) ** 2)))


def oracle_iae(t, e):
    return float(np.trapezoid(np.abs(np.asarray(e)), np.asarray(t)))


def synthetic_run(t, y_true, y_star, u=None, spec=None, fault=None):
    spec = spec or get("tank-1")
    tel = RunTelemetry(header={"scenario": spec.id, "seed": "0", "mode": "lockstep", "build": "test"})
    u = u if u is not None else np.full_like(np.asarray(t), 5.0)
    fault = fault if fault is not None else np.zeros(len(t), dtype=int)
    for i in range(len(t)):
        tel.add_row(t[i], y_true[i], y_true[i], y_star[i], u[i], u[i], 0.0, fault[i])
    return tel, spec


def test_zero_error_zeroes_every_error_metric():
    t = np.arange(0, 50.0001, 0.1)
    tel, spec = synthetic_run(t, np.full_like(t, 30.0), np.full_like(t, 30.0))
    q = compute_qos(tel, spec)
    assert q.rmse_tracking == 0.0
    assert q.iae == 0.0
    assert q.rmse_outside_saturation == 0.0
    assert q.max_abs_error_outside_saturation == 0.0


def test_unit_error_trivial_integrals():
    # e = 1 for 200 s: IAE = 200 exactly (trapezoid is exact on constants),
    # RMSE = 1
    t = np.arange(0, 200.0001, 0.1)
    tel, spec = synthetic_run(t, np.ones_like(t), np.zeros_like(t))
    q = compute_qos(tel, spec)
    assert q.iae == pytest.approx(200.0, abs=1e-9)
    assert q.rmse_tracking == pytest.approx(1.0, abs=1e-12)


def test_qos_matches_oracles_on_random_run():
    rng = np.random.default_rng(7)
    t = np.arange(0, 20.0001, 0.1)
    y = rng.normal(size=t.size)
    ystar = rng.normal(size=t.size)
    tel, spec = synthetic_run(t, y, ystar)
    q = compute_qos(tel, spec)
    assert q.rmse_tracking == pytest.approx(oracle_rmse(y - ystar), rel=1e-12)
    assert q.iae == pytest.approx(oracle_iae(t, y - ystar), rel=1e-12)


def test_qos_invariant_under_row_reordering():
    rng = np.random.default_rng(11)
    t = np.arange(0, 30.0001, 0.1)
    y = rng.normal(size=t.size)
    tel, spec = synthetic_run(t, y, np.zeros_like(t))
    q0 = compute_qos(tel, spec)

    perm = rng.permutation(t.size)
    shuffled = RunTelemetry(header=dict(tel.header))
    for i in perm:
        shuffled.add_row(*[getattr(tel, c)[i] for c in COLUMNS])
    q1 = compute_qos(shuffled, spec)
    assert q1 == q0


def test_saturation_mask_needs_a_long_run_at_the_bound():
    t = np.arange(0, 10.0001, 0.1)
    u = np.full_like(t, 5.0)
    u[(t >= 2.0) & (t <= 4.0)] = 70.0  # 2 s at the top bound
    u[50] = 70.0  # one isolated sample does not count
    mask = saturation_mask(u, t, 0.0, 70.0)
    assert mask[(t >= 2.0) & (t <= 4.0)].all()
    assert not mask[50] or t[50] >= 2.0  # the isolated touch at t=5 stays out
    assert not mask[t > 4.05].any()
    assert not mask[t < 1.95].any()


def test_saturated_interval_excluded_from_sup_error():
    # large error only while the actuator is pinned for >1 s; the
    # outside-saturation figures must not see it
    t = np.arange(0, 60.0001, 0.1)
    y_star = np.full_like(t, 30.0)
    y = np.full_like(t, 29.9)
    hot = (t >= 10.0) & (t <= 20.0)
    y[hot] = 10.0  # error 20 while pinned
    u = np.full_like(t, 5.0)
    u[hot] = 70.0
    tel, spec = synthetic_run(t, y, y_star, u=u)
    q = compute_qos(tel, spec)
    assert q.max_abs_error_outside_saturation == pytest.approx(0.1, abs=1e-9)
    assert q.rmse_outside_saturation == pytest.approx(0.1, abs=1e-9)
    assert q.rmse_tracking > 1.0  # the plain RMSE still sees the transient
    assert q.saturation_seconds == pytest.approx(10.0, abs=0.2)


def test_brief_bound_touch_still_counts_as_error():
    t = np.arange(0, 30.0001, 0.1)
    y_star = np.zeros_like(t)
    y = np.zeros_like(t)
    blip = (t >= 5.0) & (t < 5.5)  # only 0.5 s at the bound: not saturation
    y[blip] = 3.0
    u = np.full_like(t, 5.0)
    u[blip] = 70.0
    tel, spec = synthetic_run(t, y, y_star, u=u)
    q = compute_qos(tel, spec)
    assert q.max_abs_error_outside_saturation == pytest.approx(3.0)
    assert q.saturation_seconds == 0.0


@given(lo=st.floats(-5, 0), hi=st.floats(1, 5))
@settings(max_examples=30, deadline=None)
def test_saturation_mask_empty_when_u_strictly_inside(lo, hi):
    t = np.arange(0, 20.0001, 0.1)
    u = np.full_like(t, (lo + hi) / 2)
    assert not saturation_mask(u, t, lo - 1.0, hi + 1.0).any()


def test_settling_time_on_synthetic_first_order_response():
    # |e| = exp(-(t-10)/1.5) after a unit step at t = 10: the 2 % band is
    # first entered at 1.5*ln(50) ~ 5.868 s after the step
    ts = 0.01
    t = np.arange(0, 40.0001, ts)
    y_star = np.where(t >= 10.0, 1.0, 0.0)
    y = np.where(t >= 10.0, 1.0 - np.exp(-(t - 10.0) / 1.5), 0.0)
    st_times = settling_times(t, y - y_star, ((0.0, 0.0), (10.0, 1.0)), 40.0)
    assert len(st_times) == 1
    t_step, settled = st_times[0]
    assert t_step == 10.0
    assert settled == pytest.approx(1.5 * np.log(50.0), abs=2 * ts)


def test_settling_never_reached_reports_none():
    t = np.arange(0, 40.0001, 0.1)
    e = np.full_like(t, 0.5)
    st_times = settling_times(t, e, ((0.0, 0.0), (10.0, 1.0)), 40.0)
    assert st_times == ((10.0, None),)


def test_settling_requires_staying_inside_for_five_seconds():
    # enters the band briefly, leaves, then settles for good
    t = np.arange(0, 40.0001, 0.1)
    e = np.full_like(t, 0.5)
    e[(t >= 12.0) & (t < 14.0)] = 0.001  # 2 s dip: too short
    e[t >= 20.0] = 0.001
    st_times = settling_times(t, e, ((0.0, 0.0), (10.0, 1.0)), 40.0)
    assert st_times[0][1] == pytest.approx(10.0, abs=0.2)


def test_realized_rates_ride_from_totals():
    t = np.arange(0, 5.0001, 0.1)
    tel, spec = synthetic_run(t, np.zeros_like(t), np.zeros_like(t))
    tel.sent = {Direction.PLANT_TO_SERVER: 200, Direction.SERVER_TO_PLANT: 200}
    tel.dropped = {Direction.PLANT_TO_SERVER: 61, Direction.SERVER_TO_PLANT: 0}
    q = compute_qos(tel, spec)
    assert q.realized_loss_rates == (61 / 200, 0.0)
    assert tel.realized_rate(Direction.PLANT_TO_SERVER) == 61 / 200


def test_empty_telemetry_refused():
    with pytest.raises(MfcError):
        compute_qos(RunTelemetry(), get("tank-1"))


def test_json_dict_keys_are_flat_and_stable():
    t = np.arange(0, 200.0001, 0.1)
    tel, spec = synthetic_run(t, np.ones_like(t), np.zeros_like(t))
    d = compute_qos(tel, spec).to_json_dict()
    for key in (
        "rmse_tracking",
        "iae",
        "rmse_outside_saturation",
        "max_abs_error_outside_saturation",
        "realized_loss_rate_fault1",
        "realized_loss_rate_fault2",
        "saturation_seconds",
    ):
        assert key in d
    # one settling entry per tank setpoint step (4 steps after the initial value)
    assert sum(1 for k in d if k.startswith("settling_time_")) == len(spec.reference.setpoints) - 1
    json.loads(json.dumps(d))  # round-trips as plain JSON


# ----------------------------------------------------------------- CSV


def _random_tel(seed=3, n=50):
    rng = np.random.default_rng(seed)
    tel = RunTelemetry(header={"scenario": "tank-1", "seed": "42", "mode": "lockstep", "build": "v0+test"})
    for i in range(n):
        tel.add_row(i * 0.1, *rng.normal(size=6), int(rng.integers(0, 3)))
    tel.sent = {Direction.PLANT_TO_SERVER: n, Direction.SERVER_TO_PLANT: n}
    tel.dropped = {Direction.PLANT_TO_SERVER: 3, Direction.SERVER_TO_PLANT: 1}
    return tel


def test_csv_round_trip_is_exact(tmp_path):
    tel = _random_tel()
    path = tmp_path / "run.csv"
    tel.to_csv(path)
    back = RunTelemetry.from_csv(path)
    for c in COLUMNS:
        assert getattr(back, c) == getattr(tel, c)  # repr() floats round-trip
    assert back.header == tel.header
    assert back.sent == tel.sent
    assert back.dropped == tel.dropped


def test_csv_bytes_stable_across_writes(tmp_path):
    tel = _random_tel()
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    tel.to_csv(a)
    tel.to_csv(b)
    assert a.read_bytes() == b.read_bytes()


def test_csv_header_line_matches_column_contract(tmp_path):
    tel = _random_tel(n=2)
    path = tmp_path / "run.csv"
    tel.to_csv(path)
    lines = path.read_text().splitlines()
    data_header = next(l for l in lines if not l.startswith("#"))
    assert data_header == ",".join(COLUMNS)


def test_csv_rejects_foreign_columns(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("t,wrong\n0.0,1.0\n")
    with pytest.raises(MfcError):
        RunTelemetry.from_csv(path)


# ---------------------------------------------------------------- plots


def test_emit_plots_writes_three_panels_and_csv(tmp_path):
    t = np.arange(0, 20.0001, 0.1)
    tel, spec = synthetic_run(t, np.full_like(t, 20.0), np.full_like(t, 22.0))
    made = emit_plots(tel, tmp_path, spec)
    names = sorted(os.path.basename(p) for p in made)
    assert names == sorted(
        ["tank-1__output.svg", "tank-1__control.svg", "tank-1__faults.svg", "tank-1.csv"]
    )
    for p in made:
        assert os.path.getsize(p) > 0


def test_emit_plots_aero_uses_motor_voltages(tmp_path):
    spec = get("aero-1")
    t = np.arange(0, 5.0001, 0.01)
    tel, _ = synthetic_run(t, np.zeros_like(t), np.zeros_like(t), u=np.full_like(t, 2.0), spec=spec)
    made = emit_plots(tel, tmp_path, spec)
    control = next(p for p in made if p.endswith("__control.svg"))
    body = open(control).read()
    assert "volts" in body  # axis label proves the voltage panel was taken


def test_emit_plots_refuses_empty_run(tmp_path):
    out = tmp_path / "sub"
    with pytest.raises(MfcError):
        emit_plots(RunTelemetry(), out, get("tank-1"))
    assert not out.exists()  # nothing half-written
