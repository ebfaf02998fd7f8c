#!/usr/bin/env python3
"""Capture a websocket frame fixture for the dashboard tests.

Runs tank-2 in lockstep, replays it through the real bridge at 25x with the
standard 30 Hz decimation, and records every frame verbatim (JSON lines,
first line is the hello). The dashboard test suite replays this file against
its store, so the frames it sees are exactly what a browser would have seen.
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from websockets.sync.client import connect

from mfcnet.bridge import start_replay_bridge
from mfcnet.runner import RunMode, run
from mfcnet.scenarios import get

OUT = pathlib.Path(__file__).resolve().parent.parent / "frontend" / "test" / "fixtures" / "tank-2-frames.jsonl"


def main() -> int:
    tel = run(get("tank-2"), RunMode(kind="lockstep"))
    handle = start_replay_bridge(tel, speed=25.0, linger_s=2.0)
    frames = []
    with connect(f"ws://127.0.0.1:{handle.port}", close_timeout=1) as ws:
        while True:
            raw = ws.recv(timeout=30)
            frames.append(raw if isinstance(raw, str) else raw.decode())
            if '"end"' in frames[-1]:
                break
    handle.stop()
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text("\n".join(frames) + "\n")
    print(f"{OUT}: {len(frames)} frames")
    return 0


if __name__ == "__main__":
    sys.exit(main())
