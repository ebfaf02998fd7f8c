"""Scenario catalog and reference-trajectory generation.

A scenario is pure data: which plant, which controller and gains, sampling
period, duration, reference program, fault description, noise, seed.
The catalog covers the tank campaign (five fault conditions plus two PI
baselines) and the rotor-rig campaign (three fault conditions plus six
joystick-steered variants).

Reference programs produce ``(y_star, y_star_dot)`` per tick:

* ``PiecewiseConstantRef`` — raw setpoint steps, slope 0;
* ``FilteredSetpointRef`` — setpoints shaped by the critically damped
  double-pole low-pass ``1/(T s + 1)^2``;
* ``FilteredJoystickRef`` — a joystick axis in [-1, 1] (recorded trace or
  live cell), scaled to the scenario amplitude, through the same filter.

The filter is discretized exactly (matrix exponential of the held-input
augmented system), and the slope comes from the filter state, never from
finite differences.
"""

from __future__ import annotations

import bisect
import csv
import importlib.resources
import os
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from .controller import IpController, IpGains, PiController, PiGains
from .errors import ConfigError
from .faults import build_schedule
from .plants import AeroParams, AeroPlant, NoiseSpec, TankParams, TankPlant, schedule_value, validate_schedule
from .transport import LossModel

Setpoints = tuple[tuple[float, float], ...]


# ------------------------------------------------------- reference filter


@lru_cache(maxsize=None)
def _filter_matrices(t_const: float, ts: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact zero-order-hold discretization of 1/(T s + 1)^2.

    State x = [y*, dy*/dt]; continuous dynamics
    x' = [[0, 1], [-1/T^2, -2/T]] x + [0, 1/T^2] r.
    """
    a = np.array([[0.0, 1.0], [-1.0 / t_const**2, -2.0 / t_const]])
    b = np.array([[0.0], [1.0 / t_const**2]])
    m = np.zeros((3, 3))
    m[:2, :2] = a
    m[:2, 2:] = b
    md = expm(m * ts)
    return md[:2, :2].copy(), md[:2, 2].copy()


class PiecewiseConstantRef:
    """Raw setpoint program: y* jumps, slope is reported as 0."""

    kind = "piecewise"

    def __init__(self, setpoints: Setpoints, duration: float):
        validate_schedule(setpoints, "setpoints")
        if setpoints[-1][0] >= duration:
            raise ConfigError("last setpoint time must fall inside the run")
        self.setpoints = tuple((float(t), float(v)) for t, v in setpoints)
        self.duration = duration

    def at(self, t: float) -> tuple[float, float]:
        if t < 0 or t > self.duration + 1e-9:
            raise ValueError(f"t={t} outside run [0, {self.duration}]")
        return schedule_value(self.setpoints, t), 0.0


class _FilteredRef:
    """Common machinery: step a 2-state filter once per tick, in order."""

    def __init__(self, t_const: float, ts: float, duration: float):
        if t_const <= 0:
            raise ConfigError("filter time constant must be positive")
        self.t_const = t_const
        self.ts = ts
        self.duration = duration
        self.ad, self.bd = _filter_matrices(t_const, ts)
        self.x = np.zeros(2)  # start at rest at zero
        self._tick = 0

    def _input(self, t: float) -> float:
        raise NotImplementedError

    def at(self, t: float) -> tuple[float, float]:
        if t < 0 or t > self.duration + 1e-9:
            raise ValueError(f"t={t} outside run [0, {self.duration}]")
        expected = self._tick * self.ts
        if abs(t - expected) > 1e-6:
            raise ValueError(
                f"filtered reference must be stepped tick by tick: got t={t}, expected {expected:.6f}"
            )
        y_star, y_star_dot = float(self.x[0]), float(self.x[1])
        self.x = self.ad @ self.x + self.bd * self._input(t)
        self._tick += 1
        return y_star, y_star_dot


class FilteredSetpointRef(_FilteredRef):
    kind = "filtered"

    def __init__(self, setpoints: Setpoints, t_const: float, ts: float, duration: float):
        super().__init__(t_const, ts, duration)
        validate_schedule(setpoints, "setpoints")
        if setpoints[-1][0] >= duration:
            raise ConfigError("last setpoint time must fall inside the run")
        self.setpoints = tuple((float(t), float(v)) for t, v in setpoints)

    def _input(self, t: float) -> float:
        return schedule_value(self.setpoints, t)


class TraceAxis:
    """Recorded joystick axis: CSV rows (t_seconds, axis in [-1, 1]), ZOH."""

    def __init__(self, rows):
        rows = [(float(t), float(a)) for t, a in rows]
        if not rows or rows[0][0] != 0.0:
            raise ConfigError("joystick trace must start at t=0")
        self._times = [t for t, _ in rows]
        if any(b <= a for a, b in zip(self._times, self._times[1:])):
            raise ConfigError("joystick trace times must strictly increase")
        self._values = [a for _, a in rows]
        self.rows = rows

    @classmethod
    def from_csv(cls, path) -> "TraceAxis":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            rows = [r for r in reader if r and not r[0].lstrip().startswith("#")]
        return cls(rows)

    @classmethod
    def bundled(cls, name: str) -> "TraceAxis":
        ref = importlib.resources.files("mfcnet").joinpath("data", name)
        with ref.open(newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
        return cls(rows)

    def at(self, t: float) -> float:
        i = bisect.bisect_right(self._times, t) - 1
        return max(-1.0, min(1.0, self._values[max(i, 0)]))


class LiveAxis:
    """Latest joystick value from the bridge; holds when nothing arrives."""

    def __init__(self):
        self._value = 0.0

    def set(self, value: float) -> None:
        self._value = max(-1.0, min(1.0, float(value)))

    def at(self, t: float) -> float:
        return self._value


class FilteredJoystickRef(_FilteredRef):
    kind = "joystick"

    def __init__(self, axis_source, amplitude: float, t_const: float, ts: float, duration: float):
        super().__init__(t_const, ts, duration)
        self.axis_source = axis_source
        self.amplitude = amplitude

    def _input(self, t: float) -> float:
        return self.amplitude * max(-1.0, min(1.0, self.axis_source.at(t)))


def reference_at(prog, t: float) -> tuple[float, float]:
    return prog.at(t)


# ------------------------------------------------------------- scenarios


@dataclass(frozen=True)
class ReferenceConfig:
    kind: str  # piecewise | filtered | joystick
    setpoints: Setpoints = ()
    t_const: float = 1.0
    amplitude: float = 1.0
    trace: str | None = None  # bundled CSV name or filesystem path
    source: str = "trace"  # trace | live

    def __post_init__(self):
        if self.kind not in ("piecewise", "filtered", "joystick"):
            raise ConfigError(f"reference.kind: unknown kind {self.kind!r}")
        if self.kind in ("piecewise", "filtered") and not self.setpoints:
            raise ConfigError("reference.setpoints: required for setpoint programs")
        if self.kind == "joystick" and self.source not in ("trace", "live"):
            raise ConfigError(f"reference.source: unknown source {self.source!r}")


@dataclass(frozen=True)
class ScenarioSpec:
    id: str
    plant: str  # tank | aero
    controller: str  # ip | pi
    sampling_period: float
    duration: float
    reference: ReferenceConfig
    # iP side
    alpha: float = 0.1
    kp: float = 0.5
    tau: float = 1.0
    estimator: str = "integral"
    # PI side
    pi_kp: float = 29.69
    pi_ki: float = 2.27009
    plant_params: TankParams | AeroParams = field(default_factory=TankParams)
    faults: tuple | None = None  # items acceptable to faults.build_schedule
    noise_power: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.plant not in ("tank", "aero"):
            raise ConfigError(f"scenario {self.id}: unknown plant {self.plant!r}")
        if self.controller not in ("ip", "pi"):
            raise ConfigError(f"scenario {self.id}: unknown controller {self.controller!r}")
        if self.sampling_period <= 0 or self.duration <= 0:
            raise ConfigError(f"scenario {self.id}: Ts and duration must be positive")
        n = self.duration / self.sampling_period
        if abs(n - round(n)) > 1e-6:
            raise ConfigError(f"scenario {self.id}: duration must be a whole number of ticks")
        if self.controller == "ip" and self.alpha == 0:
            raise ConfigError(f"scenario {self.id}: alpha must be nonzero")
        if self.controller == "ip" and self.tau <= 0:
            raise ConfigError(f"scenario {self.id}: tau must be positive")
        # materialize once to surface schedule/fault config errors at load
        self.loss_model()
        for t_k, _v in self.reference.setpoints:
            if t_k >= self.duration:
                raise ConfigError(f"scenario {self.id}: setpoint at t={t_k} past duration")

    @property
    def ticks(self) -> int:
        return round(self.duration / self.sampling_period)

    def loss_model(self) -> LossModel:
        spec = dict(self.faults) if self.faults else None
        return build_schedule(spec, seed=self.seed, duration=self.duration)

    def make_plant(self, rng: np.random.Generator | None = None):
        noise = NoiseSpec(power=self.noise_power, seed=self.seed)
        if self.plant == "tank":
            return TankPlant(self.plant_params, noise=noise, rng=rng)
        return AeroPlant(self.plant_params, noise=noise, rng=rng)

    def make_controller(self):
        if self.controller == "ip":
            return IpController(IpGains(alpha=self.alpha, kp=self.kp), tau=self.tau, estimator=self.estimator)
        p = self.plant_params
        return PiController(PiGains(kp=self.pi_kp, ki=self.pi_ki, u_min=p.u_min, u_max=p.u_max))

    def make_reference(self, live_axis: LiveAxis | None = None):
        r = self.reference
        if r.kind == "piecewise":
            return PiecewiseConstantRef(r.setpoints, self.duration)
        if r.kind == "filtered":
            return FilteredSetpointRef(r.setpoints, r.t_const, self.sampling_period, self.duration)
        if r.source == "live":
            axis = live_axis if live_axis is not None else LiveAxis()
        else:
            name = r.trace or "joystick_demo.csv"
            axis = TraceAxis.from_csv(name) if os.path.exists(name) else TraceAxis.bundled(name)
        return FilteredJoystickRef(axis, r.amplitude, r.t_const, self.sampling_period, self.duration)


# ------------------------------------------------------------ the catalog

TANK_SETPOINTS: Setpoints = ((0.0, 0.0), (10.0, 15.0), (80.0, 40.0), (100.0, 55.0), (130.0, 10.0), (180.0, 0.0))
TANK_VALVE: tuple = ((0.0, 10.0), (30.0, 50.0), (120.0, 20.0))
PI_VALVE: tuple = ((0.0, 30.0),)

# square wave +-0.5 rad, 50 s period, shaped by the T=2 s filter
AERO_SETPOINTS: Setpoints = tuple(
    [(0.0, 0.5)] + [(25.0 * k, 0.5 if k % 2 == 0 else -0.5) for k in range(1, 10)]
)

# rig cut placement: two measurement-direction cuts and one control-direction cut
AERO_CUTS = (("fault1", 60.0, 80.0), ("fault1", 160.0, 180.0), ("fault2", 110.0, 130.0))


def _tank_mfc(id_: str, faults=None) -> ScenarioSpec:
    return ScenarioSpec(
        id=id_,
        plant="tank",
        controller="ip",
        sampling_period=0.1,
        duration=200.0,
        reference=ReferenceConfig(kind="filtered", setpoints=TANK_SETPOINTS, t_const=3.0),
        alpha=0.1,
        kp=0.5,
        # 2 s window: at 70% two-way loss only ~3 measurements/s survive,
        # and the estimate needs enough surviving nodes to average the
        # sensor noise down; 1 s left it visibly under-determined
        tau=2.0,
        plant_params=TankParams(valve_schedule=TANK_VALVE),
        faults=faults,
        noise_power=0.025,
    )


def _tank_pi(id_: str, faults=None) -> ScenarioSpec:
    return ScenarioSpec(
        id=id_,
        plant="tank",
        controller="pi",
        sampling_period=0.1,
        duration=200.0,
        reference=ReferenceConfig(kind="piecewise", setpoints=TANK_SETPOINTS),
        pi_kp=29.69,
        pi_ki=2.27009,
        plant_params=TankParams(valve_schedule=PI_VALVE),
        faults=faults,
        noise_power=0.025,
    )


def _aero(id_: str, faults=None, t_const=2.0) -> ScenarioSpec:
    return ScenarioSpec(
        id=id_,
        plant="aero",
        controller="ip",
        sampling_period=0.01,
        duration=250.0,
        reference=ReferenceConfig(kind="filtered", setpoints=AERO_SETPOINTS, t_const=t_const),
        # pitch loop gains: the ultra-local first-order model sits on a
        # second-order rig, so the error pole (kp=5 -> 0.2 s) is kept
        # slower than nothing but faster than the 0.4 s rotor-speed lag
        alpha=1.0,
        kp=5.0,
        tau=0.5,
        plant_params=AeroParams(),
        faults=faults,
        noise_power=0.0,
    )


def _joy(id_: str, t_const: float, faults=None) -> ScenarioSpec:
    return ScenarioSpec(
        id=id_,
        plant="aero",
        controller="ip",
        sampling_period=0.01,
        duration=250.0,
        reference=ReferenceConfig(kind="joystick", t_const=t_const, amplitude=0.5, trace="joystick_demo.csv"),
        # pitch loop gains: the ultra-local first-order model sits on a
        # second-order rig, so the error pole (kp=5 -> 0.2 s) is kept
        # slower than nothing but faster than the 0.4 s rotor-speed lag
        alpha=1.0,
        kp=5.0,
        tau=0.5,
        plant_params=AeroParams(),
        faults=faults,
        noise_power=0.0,
    )


def catalog() -> list[ScenarioSpec]:
    tank_cuts = (("fault1", 140.0, 150.0), ("fault2", 50.0, 60.0))
    return [
        _tank_mfc("tank-1"),
        _tank_mfc("tank-2", faults=(("cut_windows", tuple(tank_cuts)),)),
        _tank_mfc("tank-3", faults=(("p_fault1", 0.30), ("p_fault2", 0.30))),
        _tank_mfc("tank-4", faults=(("p_fault1", 0.50), ("p_fault2", 0.50))),
        _tank_mfc("tank-5", faults=(("p_fault1", 0.70), ("p_fault2", 0.70))),
        _tank_pi("tank-2-pi", faults=(("cut_windows", tuple(tank_cuts)),)),
        _tank_pi("tank-5-pi", faults=(("p_fault1", 0.70), ("p_fault2", 0.70))),
        _aero("aero-1", faults=(("cut_windows", AERO_CUTS),)),
        _aero("aero-2", faults=(("p_fault1", 0.2402), ("p_fault2", 0.2485))),
        _aero("aero-3", faults=(("p_fault1", 0.3927004), ("p_fault2", 0.3964))),
        _joy("joy-4", t_const=4.0),
        _joy("joy-5", t_const=2.0),
        _joy("joy-6", t_const=0.5),
        _joy("joy-7", t_const=2.0, faults=(("cut_windows", AERO_CUTS),)),
        _joy("joy-8", t_const=2.0, faults=(("p_fault1", 0.2356), ("p_fault2", 0.2527000))),
        _joy("joy-9", t_const=2.0, faults=(("p_fault1", 0.3879), ("p_fault2", 0.4050))),
    ]


def get(scenario_id: str) -> ScenarioSpec:
    for spec in catalog():
        if spec.id == scenario_id:
            return spec
    ids = ", ".join(s.id for s in catalog())
    raise ConfigError(f"unknown scenario {scenario_id!r}; available: {ids}")


def with_overrides(spec: ScenarioSpec, **kwargs) -> ScenarioSpec:
    """Functional update; unknown keys raise (typo guard for CLI flags)."""
    return replace(spec, **kwargs)
