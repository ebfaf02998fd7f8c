"""Command-line front end.

Subcommands: ``list`` the catalog, ``run`` a scenario (lockstep or UDP
loopback), ``plant``/``serve`` as the two halves of a two-process UDP
run, ``bridge`` to expose a run (live or replayed CSV) to the
dashboard, ``replay`` to re-run a joystick scenario against a recorded
trace file.

Exit codes: 0 ok, 2 configuration/usage error, 3 simulation divergence,
4 transport watchdog. Every flag override lands verbatim in the
telemetry header so a CSV is always attributable to its exact inputs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from .errors import ConfigError, MfcError, SimulationDiverged, TransportWatchdog
from .metrics import RunTelemetry, compute_qos, emit_plots
from .runner import RunMode, plant_main, run, serve_main
from .scenarios import catalog, get, with_overrides

SEED_ENV = "MFC_NET_SEED"


def _parse_addr(text: str) -> tuple:
    host, _, port = text.rpartition(":")
    if not host:
        raise ConfigError(f"address {text!r} must look like HOST:PORT")
    try:
        return (host, int(port))
    except ValueError:
        raise ConfigError(f"address {text!r} has a non-numeric port") from None


def _load_spec(scenario_id: str):
    try:
        return get(scenario_id)
    except ConfigError:
        print("unknown scenario; available:", file=sys.stderr)
        for s in catalog():
            print(f"  {s.id}", file=sys.stderr)
        raise


def _apply_overrides(spec, args) -> tuple:
    """Returns (spec, header entries recording exactly what was changed)."""
    recorded = {}
    seed = getattr(args, "seed", None)
    if seed is None and os.environ.get(SEED_ENV):
        try:
            seed = int(os.environ[SEED_ENV])
        except ValueError:
            raise ConfigError(f"{SEED_ENV}={os.environ[SEED_ENV]!r} is not an integer") from None
    if seed is not None:
        spec = with_overrides(spec, seed=seed)
        recorded["override_seed"] = str(seed)

    p1 = getattr(args, "loss_p1", None)
    p2 = getattr(args, "loss_p2", None)
    if p1 is not None or p2 is not None:
        fault_spec = dict(spec.faults or ())
        if p1 is not None:
            fault_spec["p_fault1"] = p1
            recorded["override_loss_p1"] = repr(p1)
        if p2 is not None:
            fault_spec["p_fault2"] = p2
            recorded["override_loss_p2"] = repr(p2)
        spec = with_overrides(spec, faults=tuple(fault_spec.items()))
    return spec, recorded


def _emit_outputs(tel, spec, out_dir) -> None:
    qos = compute_qos(tel, spec)
    if out_dir:
        made = emit_plots(tel, out_dir, spec)
        qos_path = os.path.join(out_dir, "qos.json")
        with open(qos_path, "w") as fh:
            fh.write(qos.to_json() + "\n")
        made.append(qos_path)
        for p in made:
            print(p)
    else:
        print(qos.to_json())


def _cmd_list(_args) -> int:
    for s in catalog():
        print(f"{s.id:10s} {s.plant:4s} {s.controller:2s} Ts={s.sampling_period:g}s "
              f"dur={s.duration:g}s ref={s.reference.kind}")
    return 0


def _cmd_run(args) -> int:
    spec = _load_spec(args.scenario)
    spec, recorded = _apply_overrides(spec, args)
    kind = {"udp": "udp-loopback"}.get(args.mode, args.mode)
    mode = RunMode(kind=kind, realtime=args.realtime)
    tel = run(spec, mode)
    tel.header.update(recorded)
    _emit_outputs(tel, spec, args.out)
    return 0


def _cmd_plant(args) -> int:
    spec = _load_spec(args.scenario)
    spec, _ = _apply_overrides(spec, args)
    log = plant_main(spec, _parse_addr(args.listen), realtime=True)
    from .transport import Direction

    d = Direction.PLANT_TO_SERVER
    print(f"plant done: sent {log.sent[d]} measurements, dropped {log.dropped[d]} at the injector")
    return 0


def _cmd_serve(args) -> int:
    spec = _load_spec(args.scenario)
    spec, recorded = _apply_overrides(spec, args)
    tel = serve_main(spec, _parse_addr(args.plant), realtime=True)
    tel.header.update(recorded)
    _emit_outputs(tel, spec, args.out)
    return 0


def _cmd_bridge(args) -> int:
    from .bridge import start_live_bridge, start_replay_bridge

    if args.replay:
        tel = RunTelemetry.from_csv(args.replay)
        handle = start_replay_bridge(tel, host=args.host, port=args.ws_port, speed=args.speed)
    else:
        if not args.scenario:
            raise ConfigError("bridge needs --scenario ID or --replay CSV")
        spec = _load_spec(args.scenario)
        spec, _ = _apply_overrides(spec, args)
        if spec.reference.kind == "joystick":
            spec = with_overrides(spec, reference=replace(spec.reference, source="live"))
        handle = start_live_bridge(spec, host=args.host, port=args.ws_port)
    print(f"bridge listening on ws://{args.host}:{handle.port}")
    try:
        handle.result()
    except KeyboardInterrupt:
        handle.stop()
    return 0


def _cmd_replay(args) -> int:
    spec = _load_spec(args.scenario)
    if spec.reference.kind != "joystick":
        raise ConfigError(f"scenario {spec.id} takes no joystick trace")
    if not os.path.exists(args.trace):
        raise ConfigError(f"trace file {args.trace!r} not found")
    spec, recorded = _apply_overrides(spec, args)
    spec = with_overrides(spec, reference=replace(spec.reference, trace=args.trace, source="trace"))
    tel = run(spec, RunMode(kind="lockstep"))
    tel.header.update(recorded)
    tel.header["override_trace"] = args.trace
    _emit_outputs(tel, spec, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mfcnet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="print the scenario catalog").set_defaults(fn=_cmd_list)

    def common_run_flags(p, with_out=True):
        p.add_argument("--scenario", required=True)
        p.add_argument("--seed", type=int, default=None,
                       help=f"RNG seed (default: {SEED_ENV} or the catalog value)")
        p.add_argument("--loss-p1", type=float, default=None, dest="loss_p1",
                       help="override measurement-direction loss probability")
        p.add_argument("--loss-p2", type=float, default=None, dest="loss_p2",
                       help="override control-direction loss probability")
        if with_out:
            p.add_argument("--out", default=None, help="directory for CSV/plots/qos.json")

    p_run = sub.add_parser("run", help="run one scenario to completion")
    common_run_flags(p_run)
    p_run.add_argument("--mode", choices=("lockstep", "udp-loopback", "udp"), default="lockstep")
    p_run.add_argument("--realtime", action="store_true",
                       help="pace ticks to the wall clock (UDP modes only)")
    p_run.set_defaults(fn=_cmd_run)

    p_plant = sub.add_parser("plant", help="plant endpoint of a two-process UDP run")
    common_run_flags(p_plant, with_out=False)
    p_plant.add_argument("--listen", required=True, metavar="HOST:PORT")
    p_plant.set_defaults(fn=_cmd_plant)

    p_serve = sub.add_parser("serve", help="controller endpoint of a two-process UDP run")
    common_run_flags(p_serve)
    p_serve.add_argument("--plant", required=True, metavar="HOST:PORT")
    p_serve.set_defaults(fn=_cmd_serve)

    p_bridge = sub.add_parser("bridge", help="websocket gateway for the dashboard")
    p_bridge.add_argument("--scenario", default=None)
    p_bridge.add_argument("--seed", type=int, default=None)
    p_bridge.add_argument("--replay", default=None, metavar="CSV",
                          help="stream a finished run instead of a live one")
    p_bridge.add_argument("--speed", type=float, default=1.0)
    p_bridge.add_argument("--host", default="127.0.0.1")
    p_bridge.add_argument("--ws-port", type=int, default=8765, dest="ws_port")
    p_bridge.set_defaults(fn=_cmd_bridge)

    p_replay = sub.add_parser("replay", help="re-run a joystick scenario on a recorded trace")
    p_replay.add_argument("--trace", required=True, metavar="CSV")
    p_replay.add_argument("--scenario", default="joy-5")
    p_replay.add_argument("--seed", type=int, default=None)
    p_replay.add_argument("--out", default=None)
    p_replay.set_defaults(fn=_cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except SimulationDiverged as exc:
        print(f"simulation diverged: {exc}", file=sys.stderr)
        return 3
    except TransportWatchdog as exc:
        print(f"transport watchdog: {exc}", file=sys.stderr)
        return 4
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except MfcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
