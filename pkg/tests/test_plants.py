"""Plant model tests: pointwise derivative values, integrator convergence,
hold semantics, hard limits, and the noise realization contract."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfcnet.errors import ConfigError, SimulationDiverged
from mfcnet.plants import (
    AeroParams,
    AeroPlant,
    NoiseSpec,
    TankParams,
    TankPlant,
    aero_voltage_map,
    schedule_value,
    step_plant,
    tank_derivative,
)


# --------------------------------------------------------------- tank ODE


def test_tank_derivative_values():
    p = TankParams()
    assert tank_derivative(0.0, 0.0, 10.0, p) == 0.0
    assert tank_derivative(25.0, 10.0, 10.0, p) == pytest.approx(-0.7)
    assert tank_derivative(16.0, 70.0, 50.0, p) == pytest.approx(3.2)


def test_tank_derivative_negative_level_treated_as_empty():
    p = TankParams()
    assert tank_derivative(-0.5, 10.0, 10.0, p) == pytest.approx(2.0)


def test_valve_schedule_lookup():
    sched = TankParams().valve_schedule
    for t, expect in [(0, 10), (29.99, 10), (30, 50), (119.9, 50), (120, 20), (200, 20)]:
        assert schedule_value(sched, t) == expect


def test_schedule_validation():
    with pytest.raises(ConfigError):
        TankParams(valve_schedule=((5.0, 10.0),))  # must start at 0
    with pytest.raises(ConfigError):
        TankParams(valve_schedule=((0.0, 10.0), (10.0, 20.0), (10.0, 30.0)))
    with pytest.raises(ConfigError):
        TankParams(valve_schedule=((0.0, 150.0),))  # valve coeff out of range


def test_tank_equilibrium_is_fixed_point():
    u_eq = 0.2700 * 10.0 * math.sqrt(15.0)
    plant = TankPlant(noise=NoiseSpec(power=0.0), y0=15.0)
    plant.apply_control(u_eq)
    for _ in range(100):
        plant.advance(0.1)
    assert plant.output() == pytest.approx(15.0, abs=1e-12)


def test_tank_rk4_step_halving_convergence():
    # full-resolution oracle: same 200 s trajectory at 10x substeps; input
    # held 5 s at a time like a setpoint sequence, floored so the level
    # stays clear of the sqrt kink near empty (where no scenario operates
    # and where any fixed-step integrator loses order)
    def run(substeps):
        p = TankParams(valve_schedule=((0.0, 10.0),))
        plant = TankPlant(p, noise=NoiseSpec(power=0.0), y0=5.0, substeps=substeps)
        rng = np.random.default_rng(123)
        ys = []
        for k in range(2000):
            if k % 50 == 0:
                u = float(rng.uniform(5, 70))
            plant.apply_control(u)
            plant.advance(0.1)
            ys.append(plant.output())
        return np.array(ys)

    coarse, fine = run(1), run(10)
    assert np.max(np.abs(coarse - fine)) < 1e-6


def test_tank_level_clamped_to_vessel():
    # fixed valve so inflow 70 always beats outflow and the level pegs
    plant = TankPlant(TankParams(valve_schedule=((0.0, 10.0),)), noise=NoiseSpec(power=0.0), y0=59.0)
    plant.apply_control(70.0)
    for _ in range(600):
        plant.advance(0.1)
        assert 0.0 <= plant.output() <= 60.0
    assert plant.output() == pytest.approx(60.0)  # pegged at the brim


@settings(max_examples=25)
@given(us=st.lists(st.floats(-50, 150), min_size=1, max_size=60), y0=st.floats(0, 60))
def test_tank_level_never_leaves_bounds(us, y0):
    plant = TankPlant(noise=NoiseSpec(power=0.0), y0=y0)
    for u in us:
        plant.apply_control(u)
        plant.advance(0.1)
        assert 0.0 <= plant.output() <= 60.0
        assert 0.0 <= plant.state.held_u <= 70.0


def test_apply_control_hold_and_clamp():
    plant = TankPlant()
    plant.apply_control(5.0)
    plant.apply_control(None)
    assert plant.state.held_u == 5.0
    plant.apply_control(80.0)
    assert plant.state.held_u == 70.0
    plant.apply_control(10.0)
    assert plant.state.held_u == 10.0


# ------------------------------------------------------------------ noise


def test_zero_noise_measurement_exact():
    plant = TankPlant(noise=NoiseSpec(power=0.0), y0=12.0)
    y_true, y_meas = plant.measure(0.1)
    assert y_true == y_meas == 12.0


def test_noise_statistics_match_power_over_ts():
    spec = NoiseSpec(power=0.025, seed=99)
    plant = TankPlant(noise=spec, y0=30.0)
    n = 100_000
    samples = np.array([plant.measure(0.1)[1] - 30.0 for _ in range(n)])
    sigma = spec.sigma(0.1)
    assert sigma == pytest.approx(0.5)
    assert abs(samples.mean()) < 3 * sigma / math.sqrt(n)
    assert samples.var() == pytest.approx(spec.power / 0.1, rel=0.05)


def test_noise_seed_reproducible():
    a = TankPlant(noise=NoiseSpec(power=0.025, seed=7), y0=10.0)
    b = TankPlant(noise=NoiseSpec(power=0.025, seed=7), y0=10.0)
    sa = [a.measure(0.1)[1] for _ in range(50)]
    sb = [b.measure(0.1)[1] for _ in range(50)]
    assert sa == sb  # bit-identical


def test_deterministic_trajectory_without_noise():
    def run():
        plant = TankPlant(noise=NoiseSpec(power=0.0), y0=3.0)
        out = []
        for k in range(200):
            plant.apply_control(20.0 if k < 100 else 5.0)
            plant.advance(0.1)
            out.append(plant.output())
        return out

    assert run() == run()


# ------------------------------------------------------------------- aero


def test_aero_voltage_map_values():
    p = AeroParams()
    assert aero_voltage_map(3.0, p) == (13.0, -13.0)
    assert aero_voltage_map(-3.0, p) == (-13.0, 13.0)
    assert aero_voltage_map(20.0, p) == (24.0, -24.0)
    assert aero_voltage_map(0.0, p) == (10.0, -10.0)  # zero uses the positive branch


@given(u=st.floats(-100, 100))
def test_aero_voltages_always_within_supply(u):
    p = AeroParams()
    v1, v2 = aero_voltage_map(u, p)
    assert -24.0 <= v1 <= 24.0 and -24.0 <= v2 <= 24.0


def test_aero_unforced_oscillator_decays():
    # no applied torque: damped spring returns the angle to 0 and the
    # initial angle bounds the whole trajectory
    p = AeroParams(torque_gain=0.0)
    plant = AeroPlant(params=p, x0=(0.5, 0.0))
    peak = 0.0
    for _ in range(3000):
        plant.advance(0.01)
        peak = max(peak, abs(plant.output()))
    assert peak <= 0.5 + 1e-9
    assert abs(plant.output()) < 1e-4


def test_aero_param_validation():
    with pytest.raises(ConfigError):
        AeroParams(inertia=0.0)
    with pytest.raises(ConfigError):
        AeroParams(damping=-1.0)
    with pytest.raises(ConfigError):
        AeroParams(v_min=24.0, v_max=-24.0)


def test_tank_param_validation():
    with pytest.raises(ConfigError):
        TankParams(y_min=60.0, y_max=0.0)


# ------------------------------------------------------------ bookkeeping


def test_step_plant_combined_advance_and_measure():
    plant = TankPlant(noise=NoiseSpec(power=0.0), y0=15.0)
    plant.apply_control(0.2700 * 10.0 * math.sqrt(15.0))
    y_true, y_meas = step_plant(plant, 0.1)
    assert y_true == pytest.approx(15.0, abs=1e-12)
    assert y_meas == y_true
    assert plant.state.t == pytest.approx(0.1)


def test_divergence_detected():
    plant = AeroPlant()
    plant.state.x = np.array([float("nan"), 0.0])
    with pytest.raises(SimulationDiverged):
        plant.advance(0.01)


def test_substep_validation():
    with pytest.raises(ConfigError):
        TankPlant(substeps=0)
