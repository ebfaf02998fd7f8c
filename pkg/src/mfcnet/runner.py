"""Run driver: one tick loop, three transports.

Tick semantics (t = k*Ts, k = 0..N where N = duration/Ts):

1. the plant samples its output (true + measurement noise) and sends a
   Measurement datagram, seq = k;
2. the injector may drop it (that is fault 1);
3. the server steps the reference, then — on an accepted measurement —
   updates the estimator window and computes the control; on a miss it
   freezes both the estimate and the output and re-emits the last value;
4. the server sends a Control datagram, seq = k;
5. the injector may drop it (fault 2);
6. the plant applies the control if one arrived, else holds;
7. a telemetry row is appended; the plant then integrates one period.

Modes: ``lockstep`` executes the sub-steps inline under virtual time (a
pure function of (spec, seed)); ``udp-loopback`` pushes every datagram
through real loopback sockets in one process, reproducing the lockstep
controller decisions exactly because drops are injected at the sender;
``udp-remote`` splits plant and server into two processes with wall-clock
pacing, a latest-value mailbox per endpoint, and a 5 s watchdog.

Measurement payload: (y_measured, y_true, u_held, ack_ctrl_seq,
sent_meas, dropped_meas). Only y_measured feeds the control law; the rest
lets the server-side telemetry carry plant truth and fault-1 accounting
in remote mode, where the server cannot observe them directly.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .controller import IpController, PiController
from .errors import ConfigError, TransportWatchdog
from .faults import FaultLog
from .metrics import RunTelemetry, build_stamp
from .scenarios import LiveAxis, ScenarioSpec
from .transport import (
    Datagram,
    DatagramKind,
    Direction,
    LockstepChannel,
    LossInjector,
    UdpLink,
)

WATCHDOG_S = 5.0
MODES = ("lockstep", "udp-loopback", "udp-remote")


@dataclass(frozen=True)
class RunMode:
    kind: str = "lockstep"
    realtime: bool = False
    plant_addr: tuple | None = None
    server_addr: tuple | None = None

    def __post_init__(self):
        if self.kind not in MODES:
            raise ConfigError(f"unknown run mode {self.kind!r}, expected one of {MODES}")
        if self.kind == "lockstep" and self.realtime:
            raise ConfigError("lockstep mode is virtual-time only")


class ServerSide:
    """Controller + reference + freeze bookkeeping (one per run)."""

    def __init__(self, spec: ScenarioSpec, live_axis: LiveAxis | None = None):
        self.spec = spec
        self.controller = spec.make_controller()
        self.reference = spec.make_reference(live_axis=live_axis)
        p = spec.plant_params
        self.u_bounds = (p.u_min, p.u_max)
        self.u_frozen = 0.0
        self.is_ip = isinstance(self.controller, IpController)

    @property
    def f_est(self) -> float:
        return self.controller.f_est if self.is_ip else 0.0

    def tick(self, t: float, measurement: Datagram | None) -> tuple[float, float, float]:
        """Advance one tick; returns (u_commanded, y_star, y_star_dot)."""
        y_star, y_star_dot = self.reference.at(t)
        if measurement is None:
            return self.u_frozen, y_star, y_star_dot
        y = measurement.payload[0]
        lo, hi = self.u_bounds
        if self.is_ip:
            # payload[2] is the input the plant really held over the last
            # interval; under control-direction loss it differs from what
            # this side commanded, and the estimator must see the truth
            u_raw = self.controller.step(t, y, y_star, y_star_dot,
                                         u_active=measurement.payload[2])
            u = min(max(u_raw, lo), hi)
            self.controller.note_applied(u)
        else:
            u = self.controller.step(y_star - y, self.spec.sampling_period)
        self.u_frozen = u
        return u, y_star, y_star_dot


def _measurement(seq: int, t: float, y_meas: float, y_true: float, held_u: float,
                 ack: int, sent1: int, dropped1: int) -> Datagram:
    return Datagram(
        kind=DatagramKind.MEASUREMENT,
        seq=seq,
        timestamp_us=round(t * 1e6),
        payload=(y_meas, y_true, held_u, float(ack), float(sent1), float(dropped1)),
    )


def _control(seq: int, t: float, u: float) -> Datagram:
    return Datagram(kind=DatagramKind.CONTROL, seq=seq, timestamp_us=round(t * 1e6), payload=(u,))


# ------------------------------------------------- single-process transports


class _LockstepTransport:
    def __init__(self):
        self.ch = LockstepChannel()

    def send(self, direction: Direction, d: Datagram, delivered: bool) -> None:
        if delivered:
            self.ch.send(direction, d)

    def recv(self, direction: Direction, expect_seq: int, delivered: bool) -> Datagram | None:
        return self.ch.take(direction)

    def close(self):
        pass


class _LoopbackTransport:
    """Real UDP sockets on 127.0.0.1, still driven tick by tick.

    The caller knows whether a datagram was injected-dropped, so delivery
    waits (bounded by the watchdog) only for packets that are really in
    flight — controller decisions end up identical to lockstep.
    """

    def __init__(self):
        self.plant_link = UdpLink(("127.0.0.1", 0))
        self.server_link = UdpLink(("127.0.0.1", 0), peer=self.plant_link.addr)
        self.plant_link.peer = self.server_link.addr

    def _rx_link(self, direction: Direction) -> UdpLink:
        return self.server_link if direction == Direction.PLANT_TO_SERVER else self.plant_link

    def _tx_link(self, direction: Direction) -> UdpLink:
        return self.plant_link if direction == Direction.PLANT_TO_SERVER else self.server_link

    def send(self, direction: Direction, d: Datagram, delivered: bool) -> None:
        if delivered:
            self._tx_link(direction).send(d)

    def recv(self, direction: Direction, expect_seq: int, delivered: bool) -> Datagram | None:
        link = self._rx_link(direction)
        if not delivered:
            link.drain()  # clear any stragglers; stale seqs are discarded anyway
            return None
        deadline = time.monotonic() + WATCHDOG_S
        while True:
            d = link.drain()
            if d is not None and d.seq == expect_seq:
                return d
            if time.monotonic() > deadline:
                raise TransportWatchdog(
                    f"loopback datagram seq={expect_seq} never arrived within {WATCHDOG_S}s"
                )
            time.sleep(0)

    def close(self):
        self.plant_link.close()
        self.server_link.close()


def _single_process_run(spec: ScenarioSpec, transport, realtime: bool,
                        mode_name: str, live_axis: LiveAxis | None = None,
                        on_row=None) -> RunTelemetry:
    rng_noise = np.random.default_rng(spec.seed)
    plant = spec.make_plant(rng=rng_noise)
    server = ServerSide(spec, live_axis=live_axis)
    injector = LossInjector(spec.loss_model())
    log = FaultLog()
    ts = spec.sampling_period
    n = spec.ticks

    tel = RunTelemetry(header={
        "scenario": spec.id,
        "seed": str(spec.seed),
        "mode": mode_name,
        "build": build_stamp(),
    })

    t_wall0 = time.monotonic()
    try:
        for k in range(n + 1):
            t = k * ts
            if realtime:
                pause = t_wall0 + t - time.monotonic()
                if pause > 0:
                    time.sleep(pause)

            y_true, y_meas = plant.measure(ts)
            d1 = not injector.should_drop(Direction.PLANT_TO_SERVER, t)
            log.note_send(Direction.PLANT_TO_SERVER, not d1)
            meas = _measurement(k, t, y_meas, y_true, plant.state.held_u, k - 1,
                                log.sent[Direction.PLANT_TO_SERVER], log.dropped[Direction.PLANT_TO_SERVER])
            transport.send(Direction.PLANT_TO_SERVER, meas, d1)

            arrived = transport.recv(Direction.PLANT_TO_SERVER, k, d1)
            u_cmd, y_star, _ysd = server.tick(t, arrived)

            d2 = not injector.should_drop(Direction.SERVER_TO_PLANT, t)
            log.note_send(Direction.SERVER_TO_PLANT, not d2)
            transport.send(Direction.SERVER_TO_PLANT, _control(k, t, u_cmd), d2)

            ctrl = transport.recv(Direction.SERVER_TO_PLANT, k, d2)
            plant.apply_control(ctrl.payload[0] if ctrl is not None else None)

            code = log.record_tick(t, not d1, not d2)
            tel.add_row(t, y_true, y_meas, y_star, u_cmd, plant.state.held_u, server.f_est, code)
            if on_row is not None:
                on_row((t, y_true, y_meas, y_star, u_cmd, plant.state.held_u, server.f_est, code))

            if k < n:
                plant.advance(ts)
    finally:
        transport.close()

    tel.sent = dict(log.sent)
    tel.dropped = dict(log.dropped)
    return tel


def run(spec: ScenarioSpec, mode: RunMode = RunMode(), live_axis: LiveAxis | None = None,
        on_row=None) -> RunTelemetry:
    if mode.kind == "lockstep":
        return _single_process_run(spec, _LockstepTransport(), realtime=False,
                                   mode_name="lockstep", live_axis=live_axis, on_row=on_row)
    if mode.kind == "udp-loopback":
        return _single_process_run(spec, _LoopbackTransport(), realtime=mode.realtime,
                                   mode_name="udp-loopback", live_axis=live_axis, on_row=on_row)
    raise ConfigError("udp-remote runs are started via plant_main and serve_main (two processes)")


# ------------------------------------------------------------ remote halves


def plant_main(spec: ScenarioSpec, listen: tuple, realtime: bool = True) -> FaultLog:
    """Plant endpoint: waits for the server's kickoff, then ticks.

    Injects fault-1 drops at this sender; piggybacks truth and loss
    accounting on each measurement (see module docstring).
    """
    link = UdpLink(listen)
    injector = LossInjector(spec.loss_model())
    log = FaultLog()
    rng_noise = np.random.default_rng(spec.seed)
    plant = spec.make_plant(rng=rng_noise)
    ts = spec.sampling_period
    n = spec.ticks
    last_applied_seq = -1

    link.start_reader()
    deadline = time.monotonic() + WATCHDOG_S
    while link.mailbox.take() is None:
        if time.monotonic() > deadline:
            link.close()
            raise TransportWatchdog("no kickoff datagram from the server within 5 s")
        time.sleep(0.005)

    t0 = time.monotonic()
    try:
        for k in range(n + 1):
            t = k * ts
            if realtime:
                pause = t0 + t - time.monotonic()
                if pause > 0:
                    time.sleep(pause)

            y_true, y_meas = plant.measure(ts)
            dropped = injector.should_drop(Direction.PLANT_TO_SERVER, t)
            log.note_send(Direction.PLANT_TO_SERVER, dropped)
            if not dropped:
                link.send(_measurement(k, t, y_meas, y_true, plant.state.held_u, last_applied_seq,
                                       log.sent[Direction.PLANT_TO_SERVER],
                                       log.dropped[Direction.PLANT_TO_SERVER]))

            ctrl = link.mailbox.take()
            if ctrl is not None and ctrl.kind == DatagramKind.CONTROL:
                plant.apply_control(ctrl.payload[0])
                last_applied_seq = ctrl.seq
            if link.last_rx_wall is not None and time.monotonic() - link.last_rx_wall > WATCHDOG_S:
                raise TransportWatchdog(f"no packets from the server for {WATCHDOG_S}s")

            if k < n:
                plant.advance(ts)
    finally:
        link.close()
    return log


def serve_main(spec: ScenarioSpec, plant_addr: tuple, realtime: bool = True,
               live_axis: LiveAxis | None = None) -> RunTelemetry:
    """Controller endpoint: kicks the plant off, ticks on its own timer.

    Rows where no measurement arrived re-use the last accepted plant view
    (the server's frozen picture of the world); fault-2 codes are deduced
    one tick late from the plant's acknowledged control seq.
    """
    link = UdpLink(("0.0.0.0", 0), peer=tuple(plant_addr))
    server = ServerSide(spec, live_axis=live_axis)
    injector = LossInjector(spec.loss_model())
    log = FaultLog()
    ts = spec.sampling_period
    n = spec.ticks

    tel = RunTelemetry(header={
        "scenario": spec.id,
        "seed": str(spec.seed),
        "mode": "udp-remote",
        "build": build_stamp(),
    })

    link.start_reader()
    link.send(Datagram(kind=DatagramKind.REFERENCE, seq=0, timestamp_us=0, payload=()))

    # the clock starts when the plant's first measurement lands
    first = link.mailbox.take()
    deadline = time.monotonic() + WATCHDOG_S
    while first is None:
        if time.monotonic() > deadline:
            link.close()
            raise TransportWatchdog("plant never started sending measurements")
        time.sleep(0.0005)
        first = link.mailbox.take()

    t0 = time.monotonic()
    pending = first
    last_plant_view = first.payload
    try:
        for k in range(n + 1):
            t = k * ts
            if realtime:
                pause = t0 + t - time.monotonic()
                if pause > 0:
                    time.sleep(pause)

            newest = link.mailbox.take()
            if newest is not None:
                pending = newest
            meas = pending if (pending is not None and pending.kind == DatagramKind.MEASUREMENT) else None
            pending = None
            if meas is not None:
                last_plant_view = meas.payload

            u_cmd, y_star, _ysd = server.tick(t, meas)

            dropped2 = injector.should_drop(Direction.SERVER_TO_PLANT, t)
            log.note_send(Direction.SERVER_TO_PLANT, dropped2)
            if not dropped2:
                link.send(_control(k, t, u_cmd))

            code = log.record_tick(t, meas is None, dropped2)
            y_meas_v, y_true_v, held_v = last_plant_view[0], last_plant_view[1], last_plant_view[2]
            tel.add_row(t, y_true_v, y_meas_v, y_star, u_cmd, held_v, server.f_est, code)

            if link.last_rx_wall is not None and time.monotonic() - link.last_rx_wall > WATCHDOG_S:
                raise TransportWatchdog(f"no packets from the plant for {WATCHDOG_S}s")
    finally:
        link.close()

    # fault-1 totals ride on the last accepted measurement
    tel.sent = {
        Direction.PLANT_TO_SERVER: int(last_plant_view[4]),
        Direction.SERVER_TO_PLANT: log.sent[Direction.SERVER_TO_PLANT],
    }
    tel.dropped = {
        Direction.PLANT_TO_SERVER: int(last_plant_view[5]),
        Direction.SERVER_TO_PLANT: log.dropped[Direction.SERVER_TO_PLANT],
    }
    return tel
