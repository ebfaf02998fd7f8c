"""Per-run telemetry, QoS measures, and figure emission.

Telemetry is one row per tick with the stable column order

    t, y_true, y_measured, y_star, u_commanded, u_held, f_est, fault_code

(this order is a contract shared with the CSV files, the dashboard feed
and the tests). QoS condenses a run into tracking RMSE/IAE, the largest
error outside actuator-saturation intervals, per-step settling times, and
the realized per-direction loss rates.

Saturation handling: intervals where the commanded control sits at an
actuator bound for more than one second are excluded from the max-error
and the saturation-free RMSE — a pegged actuator says nothing about the
control law, the plant simply cannot follow.
"""

from __future__ import annotations

import json
import math
import os
import subprocess
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, MfcError
from .transport import Direction

COLUMNS = ("t", "y_true", "y_measured", "y_star", "u_commanded", "u_held", "f_est", "fault_code")


def build_stamp() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=5,
            cwd=os.path.dirname(os.path.abspath(__file__)),
        )
        if out.returncode == 0:
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return "unknown"


@dataclass
class RunTelemetry:
    header: dict = field(default_factory=dict)
    t: list = field(default_factory=list)
    y_true: list = field(default_factory=list)
    y_measured: list = field(default_factory=list)
    y_star: list = field(default_factory=list)
    u_commanded: list = field(default_factory=list)
    u_held: list = field(default_factory=list)
    f_est: list = field(default_factory=list)
    fault_code: list = field(default_factory=list)
    sent: dict = field(default_factory=lambda: {d: 0 for d in Direction})
    dropped: dict = field(default_factory=lambda: {d: 0 for d in Direction})

    def add_row(self, t, y_true, y_measured, y_star, u_commanded, u_held, f_est, fault_code):
        self.t.append(float(t))
        self.y_true.append(float(y_true))
        self.y_measured.append(float(y_measured))
        self.y_star.append(float(y_star))
        self.u_commanded.append(float(u_commanded))
        self.u_held.append(float(u_held))
        self.f_est.append(float(f_est))
        self.fault_code.append(int(fault_code))

    def __len__(self):
        return len(self.t)

    def column(self, name: str) -> np.ndarray:
        return np.asarray(getattr(self, name), dtype=float)

    def realized_rate(self, direction: Direction) -> float:
        n = self.sent[direction]
        return self.dropped[direction] / n if n else 0.0

    # ------------------------------------------------------------- CSV

    def to_csv(self, path) -> None:
        lines = []
        for key in sorted(self.header):
            lines.append(f"# {key}={self.header[key]}")
        for d in Direction:
            lines.append(f"# sent_{d.name.lower()}={self.sent[d]}")
            lines.append(f"# dropped_{d.name.lower()}={self.dropped[d]}")
        lines.append(",".join(COLUMNS))
        for i in range(len(self.t)):
            row = [repr(getattr(self, c)[i]) for c in COLUMNS[:-1]]
            row.append(str(self.fault_code[i]))
            lines.append(",".join(row))
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path) -> "RunTelemetry":
        tel = cls()
        with open(path) as fh:
            rows = fh.read().splitlines()
        data_started = False
        for line in rows:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                for d in Direction:
                    if key == f"sent_{d.name.lower()}":
                        tel.sent[d] = int(value)
                        break
                    if key == f"dropped_{d.name.lower()}":
                        tel.dropped[d] = int(value)
                        break
                else:
                    tel.header[key] = value
                continue
            if not data_started:
                if line.split(",") != list(COLUMNS):
                    raise MfcError(f"unexpected CSV columns in {path}: {line}")
                data_started = True
                continue
            parts = line.split(",")
            tel.add_row(*[float(p) for p in parts[:-1]], int(parts[-1]))
        return tel


# ------------------------------------------------------------------- QoS


@dataclass(frozen=True)
class QosReport:
    rmse_tracking: float
    iae: float
    rmse_outside_saturation: float
    max_abs_error_outside_saturation: float
    settling_times: tuple  # ((t_step, seconds or None), ...)
    realized_loss_rates: tuple  # (fault1 fraction, fault2 fraction)
    saturation_seconds: float

    def to_json_dict(self) -> dict:
        d = {
            "rmse_tracking": self.rmse_tracking,
            "iae": self.iae,
            "rmse_outside_saturation": self.rmse_outside_saturation,
            "max_abs_error_outside_saturation": self.max_abs_error_outside_saturation,
            "realized_loss_rate_fault1": self.realized_loss_rates[0],
            "realized_loss_rate_fault2": self.realized_loss_rates[1],
            "saturation_seconds": self.saturation_seconds,
        }
        for t_step, settled in self.settling_times:
            d[f"settling_time_{t_step:g}"] = settled
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)


def saturation_mask(u_commanded: np.ndarray, t: np.ndarray, u_min: float, u_max: float) -> np.ndarray:
    """True where u sits at a bound as part of a run longer than 1 s."""
    at_bound = (np.abs(u_commanded - u_max) < 1e-9) | (np.abs(u_commanded - u_min) < 1e-9)
    mask = np.zeros_like(at_bound)
    n = len(at_bound)
    i = 0
    while i < n:
        if not at_bound[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and at_bound[j + 1]:
            j += 1
        if t[j] - t[i] > 1.0:
            mask[i : j + 1] = True
        i = j + 1
    return mask


def settling_times(t, e, setpoints, duration, window_s=5.0, band_frac=0.02):
    """First time |e| stays inside 2% of the step for 5 s, per setpoint step."""
    out = []
    prev_value = None
    times = [s[0] for s in setpoints]
    for idx, (t_step, value) in enumerate(setpoints):
        if prev_value is None:
            prev_value = value
            continue
        step = abs(value - prev_value)
        prev_value = value
        if step == 0:
            continue
        band = band_frac * step
        seg_end = times[idx + 1] if idx + 1 < len(times) else duration
        sel = (t >= t_step) & (t <= seg_end)
        tt, ee = t[sel], np.abs(e[sel])
        settled = None
        inside = ee < band
        k = 0
        while k < len(tt):
            if not inside[k]:
                k += 1
                continue
            j = k
            while j + 1 < len(tt) and inside[j + 1]:
                j += 1
            if tt[j] - tt[k] >= window_s:
                settled = tt[k] - t_step
                break
            k = j + 1
        out.append((t_step, settled))
    return tuple(out)


def compute_qos(tel: RunTelemetry, spec) -> QosReport:
    if len(tel) == 0:
        raise MfcError("cannot compute QoS of empty telemetry")
    order = np.argsort(tel.column("t"), kind="stable")
    t = tel.column("t")[order]
    e = (tel.column("y_true") - tel.column("y_star"))[order]
    u = tel.column("u_commanded")[order]

    rmse = float(np.sqrt(np.mean(e**2)))
    iae = float(np.trapezoid(np.abs(e), t))

    p = spec.plant_params
    sat = saturation_mask(u, t, p.u_min, p.u_max)
    free = ~sat
    rmse_free = float(np.sqrt(np.mean(e[free] ** 2))) if free.any() else float("nan")
    max_free = float(np.max(np.abs(e[free]))) if free.any() else float("nan")
    sat_seconds = float(np.sum(sat) * (t[1] - t[0])) if len(t) > 1 else 0.0

    st = settling_times(t, e, spec.reference.setpoints, spec.duration) if spec.reference.setpoints else ()

    return QosReport(
        rmse_tracking=rmse,
        iae=iae,
        rmse_outside_saturation=rmse_free,
        max_abs_error_outside_saturation=max_free,
        settling_times=st,
        realized_loss_rates=(
            tel.realized_rate(Direction.PLANT_TO_SERVER),
            tel.realized_rate(Direction.SERVER_TO_PLANT),
        ),
        saturation_seconds=sat_seconds,
    )


# ------------------------------------------------------------------ plots


def emit_plots(tel: RunTelemetry, out_dir, spec) -> list:
    """Write the three per-run panels as SVGs plus the telemetry CSV.

    Panels: output vs reference, control (voltages for the rotor rig),
    and the 0/1/2 fault track. Returns the created paths.
    """
    if len(tel) == 0:
        raise MfcError("refusing to plot empty telemetry")

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs(out_dir, exist_ok=True)
    sid = spec.id
    t = tel.column("t")
    made = []

    fig, ax = plt.subplots(figsize=(9, 3.2))
    ax.plot(t, tel.column("y_true"), "r", lw=1.0, label="output")
    ax.plot(t, tel.column("y_star"), "b", lw=1.0, label="reference")
    if spec.reference.setpoints:
        sp_t, sp_v = zip(*spec.reference.setpoints)
        ax.step(list(sp_t) + [spec.duration], list(sp_v) + [sp_v[-1]], "k--", lw=0.8, where="post", label="setpoint")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("output")
    ax.legend(loc="best", fontsize=8)
    ax.set_title(f"{sid}: output")
    path = os.path.join(out_dir, f"{sid}__output.svg")
    fig.savefig(path)
    plt.close(fig)
    made.append(path)

    fig, ax = plt.subplots(figsize=(9, 3.2))
    if spec.plant == "aero":
        from .plants import aero_voltage_map

        held = tel.column("u_held")
        volts = np.array([aero_voltage_map(ui, spec.plant_params) for ui in held])
        ax.plot(t, volts[:, 0], "b", lw=0.8, label="v1")
        ax.plot(t, volts[:, 1], "r", lw=0.8, label="v2")
        ax.set_ylabel("volts")
    else:
        ax.plot(t, tel.column("u_commanded"), "g", lw=0.8, label="u commanded")
        ax.plot(t, tel.column("u_held"), "m", lw=0.8, alpha=0.7, label="u at plant")
        ax.set_ylabel("control")
    ax.set_xlabel("t [s]")
    ax.legend(loc="best", fontsize=8)
    ax.set_title(f"{sid}: control")
    path = os.path.join(out_dir, f"{sid}__control.svg")
    fig.savefig(path)
    plt.close(fig)
    made.append(path)

    fig, ax = plt.subplots(figsize=(9, 1.8))
    ax.step(t, tel.column("fault_code"), "k", lw=0.8, where="post")
    ax.set_yticks([0, 1, 2])
    ax.set_ylim(-0.2, 2.2)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("fault")
    ax.set_title(f"{sid}: fault track (0 none, 1 measurement lost, 2 control lost)")
    path = os.path.join(out_dir, f"{sid}__faults.svg")
    fig.savefig(path)
    plt.close(fig)
    made.append(path)

    csv_path = os.path.join(out_dir, f"{sid}.csv")
    tel.to_csv(csv_path)
    made.append(csv_path)
    return made
