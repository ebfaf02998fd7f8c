"""Websocket gateway between a run and a browser dashboard.

The JSON frame schema (the whole contract with the dashboard):

outbound
    {"type": "hello", "scenario_id": str, "ts": seconds}     on connect
    {"type": "telemetry", "t": s, "y": measured output,
     "y_star": reference, "u": commanded control, "fault": 0|1|2}
    {"type": "end"}                                          source exhausted
inbound
    {"type": "joystick", "axis": value, "t_client": any}

Axis values are clamped to [-1, 1] on this side; a stale or absent
joystick simply holds the last value (same hold philosophy as the
control channel). Outbound telemetry is decimated to at most
``rate_hz`` messages per second for display — the newest row wins, and
the CSV written elsewhere keeps every row.

Two sources: ``start_live_bridge`` drives a real run (the joystick
scenario reads the live axis cell), ``start_replay_bridge`` paces the
rows of a finished run back out, which is how the dashboard is
exercised without hardware. Joystick input only ever shapes the
reference; the control path has no idea whether the axis came from a
websocket or a recorded trace.

First client to connect owns the joystick; later clients are viewers.
"""

from __future__ import annotations

import asyncio
import json
import threading
import time
from collections import deque

from websockets.asyncio.server import serve

from .errors import MfcError
from .metrics import RunTelemetry
from .runner import RunMode, run
from .scenarios import LiveAxis, ScenarioSpec

_END = object()  # feeder -> hub sentinel


def telemetry_message(row) -> dict:
    """Map one telemetry row tuple onto the wire frame."""
    t, _y_true, y_meas, y_star, u_cmd, _u_held, _f_est, code = row
    return {"type": "telemetry", "t": t, "y": y_meas, "y_star": y_star,
            "u": u_cmd, "fault": int(code)}


class _Hub:
    """Connected clients + broadcast, all on the loop thread."""

    def __init__(self, hello: dict, axis: LiveAxis | None):
        self.hello = hello
        self.axis = axis
        self.clients: set = set()
        self.writer = None  # first client owns the joystick

    async def handler(self, ws):
        self.clients.add(ws)
        if self.writer is None:
            self.writer = ws
        try:
            await ws.send(json.dumps(self.hello))
            async for raw in ws:
                try:
                    msg = json.loads(raw)
                except (ValueError, TypeError):
                    continue  # garbage frames never kill the session
                if (msg.get("type") == "joystick" and self.axis is not None
                        and ws is self.writer):
                    try:
                        self.axis.set(float(msg.get("axis", 0.0)))
                    except (TypeError, ValueError):
                        continue
        finally:
            self.clients.discard(ws)
            if ws is self.writer:
                self.writer = None

    async def broadcast(self, payload: dict):
        dead = []
        data = json.dumps(payload)
        for ws in self.clients:
            try:
                await ws.send(data)
            except Exception:
                dead.append(ws)
        for ws in dead:
            self.clients.discard(ws)


class BridgeHandle:
    """Owner handle for a bridge running on its own thread.

    ``port`` blocks until the socket is bound. ``result`` joins the
    source (the run or the replay) and re-raises anything it raised.
    """

    def __init__(self):
        self._ready = threading.Event()
        self._port: int | None = None
        self._thread: threading.Thread | None = None
        self._stop: asyncio.Event | None = None
        self._loop: asyncio.AbstractEventLoop | None = None
        self._result: RunTelemetry | None = None
        self._error: BaseException | None = None

    @property
    def port(self) -> int:
        if not self._ready.wait(timeout=10.0):
            raise MfcError("bridge never came up")
        if self._error is not None:
            raise self._error
        assert self._port is not None
        return self._port

    def stop(self) -> None:
        if self._loop is not None and self._stop is not None:
            self._loop.call_soon_threadsafe(self._stop.set)

    def result(self, timeout: float | None = None) -> RunTelemetry | None:
        assert self._thread is not None
        self._thread.join(timeout=timeout)
        if self._thread.is_alive():
            raise MfcError("bridge still running")
        if self._error is not None:
            raise self._error
        return self._result


def _run_bridge(handle: BridgeHandle, hub: _Hub, feeder_coro_factory,
                host: str, port: int, linger_s: float):
    async def main():
        handle._stop = asyncio.Event()
        async with serve(hub.handler, host, port) as server:
            handle._port = server.sockets[0].getsockname()[1]
            handle._ready.set()
            feeder = asyncio.ensure_future(feeder_coro_factory())
            stopper = asyncio.ensure_future(handle._stop.wait())
            done, _ = await asyncio.wait({feeder, stopper},
                                         return_when=asyncio.FIRST_COMPLETED)
            if feeder in done:
                feeder.result()  # re-raise run errors
                await hub.broadcast({"type": "end"})
                # give clients a beat to read the tail before tearing down
                try:
                    await asyncio.wait_for(handle._stop.wait(), timeout=linger_s)
                except asyncio.TimeoutError:
                    pass
            else:
                feeder.cancel()

    def thread_body():
        handle._loop = asyncio.new_event_loop()
        asyncio.set_event_loop(handle._loop)
        try:
            handle._loop.run_until_complete(main())
        except BaseException as exc:  # handed to the caller via result()
            handle._error = exc
            handle._ready.set()
        finally:
            handle._loop.close()

    handle._thread = threading.Thread(target=thread_body, daemon=True)
    handle._thread.start()


def start_replay_bridge(tel: RunTelemetry, host: str = "127.0.0.1", port: int = 0,
                        rate_hz: float = 30.0, speed: float = 1.0,
                        linger_s: float = 3.0) -> BridgeHandle:
    """Stream a finished run's rows, paced by their own timestamps."""
    if len(tel) == 0:
        raise MfcError("nothing to replay")
    if speed <= 0:
        raise MfcError("replay speed must be positive")
    ts = tel.t[1] - tel.t[0] if len(tel) > 1 else 0.0
    hello = {"type": "hello",
             "scenario_id": tel.header.get("scenario", "unknown"), "ts": ts}
    hub = _Hub(hello, axis=None)
    handle = BridgeHandle()
    min_gap = 1.0 / rate_hz

    async def feeder():
        last_sent = -1e9
        t0_wall = time.monotonic()
        t0 = tel.t[0]
        for i in range(len(tel)):
            due = t0_wall + (tel.t[i] - t0) / speed
            delay = due - time.monotonic()
            if delay > 0:
                await asyncio.sleep(delay)
            now = time.monotonic()
            if now - last_sent >= min_gap or i == len(tel) - 1:
                row = tuple(getattr(tel, c)[i] for c in
                            ("t", "y_true", "y_measured", "y_star",
                             "u_commanded", "u_held", "f_est", "fault_code"))
                await hub.broadcast(telemetry_message(row))
                last_sent = now
        handle._result = tel

    _run_bridge(handle, hub, feeder, host, port, linger_s)
    return handle


def start_live_bridge(spec: ScenarioSpec, host: str = "127.0.0.1", port: int = 0,
                      rate_hz: float = 30.0, mode: RunMode | None = None,
                      linger_s: float = 3.0) -> BridgeHandle:
    """Run the scenario for real and stream it as it happens.

    The run sits on a worker thread feeding a newest-wins queue; the
    scenario's live axis (if it has one) is wired to incoming joystick
    frames.
    """
    mode = mode if mode is not None else RunMode(kind="udp-loopback", realtime=True)
    axis = LiveAxis()
    hello = {"type": "hello", "scenario_id": spec.id, "ts": spec.sampling_period}
    hub = _Hub(hello, axis=axis)
    handle = BridgeHandle()
    rows: deque = deque()
    min_gap = 1.0 / rate_hz

    def worker():
        try:
            handle._result = run(spec, mode, live_axis=axis, on_row=rows.append)
        except BaseException as exc:  # surfaced to the owner via result()
            handle._error = exc
        finally:
            rows.append(_END)

    runner_thread = threading.Thread(target=worker, daemon=True)

    async def feeder():
        runner_thread.start()
        last_sent = -1e9
        newest = None
        while True:
            ended = False
            while rows:
                item = rows.popleft()
                if item is _END:
                    ended = True
                    break
                newest = item
            now = time.monotonic()
            if newest is not None and now - last_sent >= min_gap:
                await hub.broadcast(telemetry_message(newest))
                last_sent = now
                newest = None
            if ended:
                if newest is not None:
                    await hub.broadcast(telemetry_message(newest))
                runner_thread.join(timeout=5.0)
                return
            await asyncio.sleep(min_gap / 4.0)

    _run_bridge(handle, hub, feeder, host, port, linger_s)
    return handle
