"""Fault bookkeeping: turning scenario fault descriptions into loss models
and accounting for what actually happened during a run.

Fault taxonomy: code 1 = a measurement packet (plant -> server) was lost
this tick, code 2 = a control packet (server -> plant) was lost, 0 = clean
tick. When both directions lose a packet in one tick the reported code is
1 (the track is single-valued); totals still count both.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError
from .transport import Direction, LossModel

_DIRECTION_NAMES = {
    "plant_to_server": Direction.PLANT_TO_SERVER,
    "server_to_plant": Direction.SERVER_TO_PLANT,
    "fault1": Direction.PLANT_TO_SERVER,
    "fault2": Direction.SERVER_TO_PLANT,
    "measurement": Direction.PLANT_TO_SERVER,
    "control": Direction.SERVER_TO_PLANT,
}


def parse_direction(value, path: str = "direction") -> Direction:
    if isinstance(value, Direction):
        return value
    if isinstance(value, str) and value.lower() in _DIRECTION_NAMES:
        return _DIRECTION_NAMES[value.lower()]
    raise ConfigError(f"{path}: unknown direction {value!r} (expected one of {sorted(set(_DIRECTION_NAMES))})")


def build_schedule(spec, seed: int, duration: float) -> LossModel:
    """Build a LossModel from a scenario fault description.

    ``spec`` is a mapping with optional keys p_fault1, p_fault2 (drop
    probabilities), cut_windows (list of [direction, t_start, t_end]),
    and split_total. Malformed entries raise ConfigError naming the field.
    """
    spec = dict(spec or {})
    known = {"p_fault1", "p_fault2", "cut_windows", "split_total"}
    for key in spec:
        if key not in known:
            raise ConfigError(f"faults.{key}: unknown field (expected {sorted(known)})")

    def rate(name):
        v = spec.get(name, 0.0)
        try:
            v = float(v)
        except (TypeError, ValueError):
            raise ConfigError(f"faults.{name}: not a number: {v!r}") from None
        if not 0.0 <= v <= 1.0:
            raise ConfigError(f"faults.{name}: {v} outside [0, 1]")
        return v

    windows = []
    for i, w in enumerate(spec.get("cut_windows") or ()):
        path = f"faults.cut_windows[{i}]"
        try:
            direction, t0, t1 = w
        except (TypeError, ValueError):
            raise ConfigError(f"{path}: expected [direction, t_start, t_end], got {w!r}") from None
        t0, t1 = float(t0), float(t1)
        if not 0.0 <= t0 < t1:
            raise ConfigError(f"{path}: window [{t0}, {t1}) is empty or negative")
        if t1 > duration:
            raise ConfigError(f"{path}: window end {t1} past run duration {duration}")
        windows.append((parse_direction(direction, path), t0, t1))

    return LossModel(
        p_fault1=rate("p_fault1"),
        p_fault2=rate("p_fault2"),
        cut_windows=tuple(windows),
        seed=seed,
        split_total=bool(spec.get("split_total", False)),
    )


def fault_code(measurement_dropped: bool, control_dropped: bool) -> int:
    if measurement_dropped:
        return 1
    if control_dropped:
        return 2
    return 0


@dataclass
class FaultLog:
    """Single-writer per-run fault record: a (t, code) track plus totals."""

    events: list[tuple[float, int]] = field(default_factory=list)
    sent: dict[Direction, int] = field(default_factory=lambda: {d: 0 for d in Direction})
    dropped: dict[Direction, int] = field(default_factory=lambda: {d: 0 for d in Direction})

    def note_send(self, direction: Direction, was_dropped: bool) -> None:
        self.sent[direction] += 1
        if was_dropped:
            self.dropped[direction] += 1

    def record_tick(self, t: float, measurement_dropped: bool, control_dropped: bool) -> int:
        code = fault_code(measurement_dropped, control_dropped)
        self.events.append((t, code))
        return code

    def realized_rate(self, direction: Direction) -> float:
        n = self.sent[direction]
        return self.dropped[direction] / n if n else 0.0
