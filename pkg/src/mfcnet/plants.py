"""Simulated processes under control.

Two plants share one interface (measure / apply_control / advance):

* a single tank whose level obeys ``dy/dt = (u - c*K*sqrt(y))/divisor``
  with a time-varying outflow valve ``K`` and hard level/actuator limits;
* a linear 1-DOF half-quadrotor pitch rig driven through a two-motor
  voltage map with +-24 V supply clamps.

Control inputs arrive as packets that may be missing; the plant holds the
last received value (zero-order hold). Measurement noise is additive
Gaussian with variance ``power/Ts`` (the discrete realization of a
band-limited white source of the given power).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, SimulationDiverged

# (t_start, value) pairs, first t_start must be 0, times strictly increasing.
Schedule = tuple[tuple[float, float], ...]


def schedule_value(schedule: Schedule, t: float) -> float:
    """Value of a piecewise-constant schedule at time t (left-closed steps)."""
    v = schedule[0][1]
    for t_k, v_k in schedule:
        if t < t_k:
            break
        v = v_k
    return v


def validate_schedule(schedule: Schedule, name: str) -> None:
    if not schedule or schedule[0][0] != 0:
        raise ConfigError(f"{name}: schedule must start at t=0")
    times = [t for t, _ in schedule]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ConfigError(f"{name}: schedule times must strictly increase")


@dataclass(frozen=True)
class TankParams:
    outflow_coeff: float = 0.2700
    volume_divisor: float = 5.0
    y_min: float = 0.0
    y_max: float = 60.0
    u_min: float = 0.0
    u_max: float = 70.0
    # outflow valve position over time; the mid-run swings are what the
    # controller has to absorb without a model
    valve_schedule: Schedule = ((0.0, 10.0), (30.0, 50.0), (120.0, 20.0))

    def __post_init__(self):
        if not (self.y_min < self.y_max and self.u_min < self.u_max):
            raise ConfigError("tank bounds must be ordered")
        validate_schedule(self.valve_schedule, "valve_schedule")
        for t_k, k in self.valve_schedule:
            if not 0.0 < k < 100.0:
                raise ConfigError(f"valve coefficient {k} at t={t_k} outside (0, 100)")


@dataclass(frozen=True)
class AeroParams:
    """Linear pitch model J*th'' = torque - D*th' - K_sp*th.

    Net torque is torque_gain*(v1 - v2)/2 with (v1, v2) from the
    voltage map. The coefficients are surrogate values, not measured
    hardware data; they are chosen so the shipped gains close a stable
    loop and they all live in config.
    """

    inertia: float = 0.02
    damping: float = 0.05
    stiffness: float = 0.3
    torque_gain: float = 0.01
    v_min: float = -24.0
    v_max: float = 24.0
    bias_volts: float = 10.0
    # software command limit ahead of the voltage map; generous because the
    # +-24 V supply clamp is the real constraint
    u_min: float = -100.0
    u_max: float = 100.0

    def __post_init__(self):
        if self.inertia <= 0:
            raise ConfigError("inertia must be positive")
        if self.damping < 0:
            raise ConfigError("damping must be nonnegative")
        if not self.v_min < self.v_max:
            raise ConfigError("voltage bounds must be ordered")


@dataclass(frozen=True)
class NoiseSpec:
    power: float = 0.025
    seed: int = 0

    def __post_init__(self):
        if self.power < 0:
            raise ConfigError("noise power must be nonnegative")

    def sigma(self, ts: float) -> float:
        return math.sqrt(self.power / ts)


@dataclass
class PlantState:
    x: np.ndarray
    held_u: float = 0.0
    t: float = 0.0


def tank_derivative(y: float, u: float, valve_k: float, p: TankParams) -> float:
    # sqrt needs y >= 0; transient negatives are treated as empty
    return (u - p.outflow_coeff * valve_k * math.sqrt(max(y, 0.0))) / p.volume_divisor


def aero_voltage_map(u: float, p: AeroParams) -> tuple[float, float]:
    """Split one control value onto the two motors, biased off the deadzone.

    u >= 0 -> (bias + u, -bias - u); u < 0 -> (-bias + u, bias - u); each
    voltage then clamps to the supply range.
    """
    if u >= 0:
        v1, v2 = p.bias_volts + u, -p.bias_volts - u
    else:
        v1, v2 = -p.bias_volts + u, p.bias_volts - u
    clamp = lambda v: min(max(v, p.v_min), p.v_max)
    return clamp(v1), clamp(v2)


def aero_derivative(x: np.ndarray, u: float, p: AeroParams) -> np.ndarray:
    v1, v2 = aero_voltage_map(u, p)
    torque = p.torque_gain * (v1 - v2) / 2.0
    theta, omega = x
    domega = (torque - p.damping * omega - p.stiffness * theta) / p.inertia
    return np.array([omega, domega])


def rk4_step(f, t: float, x: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(t, x)
    k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2)
    k4 = f(t + dt, x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


class _BasePlant:
    """Shared hold/step/measure plumbing; subclasses provide dynamics."""

    params: TankParams | AeroParams

    def __init__(self, noise: NoiseSpec, rng: np.random.Generator | None, x0: np.ndarray, substeps: int):
        if substeps < 1:
            raise ConfigError("substeps must be >= 1")
        self.noise = noise
        self.rng = rng if rng is not None else np.random.default_rng(noise.seed)
        self.state = PlantState(x=np.asarray(x0, dtype=float).copy())
        self.substeps = substeps
        self._t_ns = 0  # integer time: schedule breakpoints must not drift

    def output(self) -> float:
        return float(self.state.x[0])

    def measure(self, ts: float) -> tuple[float, float]:
        """True and noisy output at the current instant; one RNG draw."""
        y = self.output()
        if self.noise.power == 0.0:
            return y, y
        return y, y + self.noise.sigma(ts) * self.rng.standard_normal()

    def apply_control(self, u_packet: float | None) -> None:
        """Accept a control packet (clamped to actuator limits) or hold."""
        if u_packet is None:
            return
        p = self.params
        self.state.held_u = min(max(float(u_packet), p.u_min), p.u_max)

    def _derivative(self, t: float, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _post_step(self, x: np.ndarray) -> np.ndarray:
        return x

    def advance(self, dt: float) -> None:
        st = self.state
        h = dt / self.substeps
        x = st.x
        # schedules (valve position) are piecewise constant and sampled once
        # at the tick start, like the held input; letting RK4 stages straddle
        # a breakpoint would make the result depend on the substep count
        t_tick = st.t
        for _ in range(self.substeps):
            x = rk4_step(lambda _t, xx: self._derivative(t_tick, xx), t_tick, x, h)
        x = self._post_step(x)
        if not np.all(np.isfinite(x)):
            raise SimulationDiverged(f"non-finite state {x} at t={st.t + dt:.3f}s (held_u={st.held_u})")
        st.x = x
        self._t_ns += round(dt * 1e9)
        st.t = self._t_ns * 1e-9


class TankPlant(_BasePlant):
    def __init__(
        self,
        params: TankParams = TankParams(),
        noise: NoiseSpec = NoiseSpec(),
        rng: np.random.Generator | None = None,
        y0: float = 0.0,
        substeps: int = 1,
    ):
        super().__init__(noise, rng, np.array([y0]), substeps)
        self.params = params

    def valve_k(self, t: float) -> float:
        return schedule_value(self.params.valve_schedule, t)

    def _derivative(self, t, x):
        dy = tank_derivative(float(x[0]), self.state.held_u, self.valve_k(t), self.params)
        return np.array([dy])

    def _post_step(self, x):
        # hard vessel limits: level physically cannot leave [y_min, y_max]
        return np.clip(x, self.params.y_min, self.params.y_max)


class AeroPlant(_BasePlant):
    def __init__(
        self,
        params: AeroParams = AeroParams(),
        noise: NoiseSpec = NoiseSpec(power=0.0),
        rng: np.random.Generator | None = None,
        x0: tuple[float, float] = (0.0, 0.0),
        substeps: int = 1,
    ):
        super().__init__(noise, rng, np.array(x0), substeps)
        self.params = params

    def voltages(self) -> tuple[float, float]:
        return aero_voltage_map(self.state.held_u, self.params)

    def _derivative(self, t, x):
        return aero_derivative(x, self.state.held_u, self.params)


def step_plant(plant: _BasePlant, dt: float, ts: float | None = None) -> tuple[float, float]:
    """Advance one period then sample: returns (y_true, y_measured)."""
    plant.advance(dt)
    return plant.measure(ts if ts is not None else dt)
