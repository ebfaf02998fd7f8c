#!/usr/bin/env python3
"""Synthesize the bundled joystick trace (deterministic).

Produces a plausible 250 s human stick recording: hold a target for a few
seconds, ramp to a new one over ~1 s, repeat. Axis values stay in [-1, 1].
Run from the repo root; rewrites src/mfcnet/data/joystick_demo.csv.
"""

import csv
import pathlib

import numpy as np

OUT = pathlib.Path(__file__).resolve().parent.parent / "src" / "mfcnet" / "data" / "joystick_demo.csv"
DURATION = 250.0
STEP = 0.1  # recording rate during ramps


def main():
    rng = np.random.default_rng(20240917)
    rows = [(0.0, 0.0)]
    t, axis = 0.0, 0.0
    while t < DURATION - 8.0:
        hold = float(rng.uniform(2.0, 6.0))
        t += hold
        target = float(rng.uniform(-1.0, 1.0))
        ramp = float(rng.uniform(0.6, 1.4))
        n = max(2, int(ramp / STEP))
        for i in range(1, n + 1):
            ti = t + i * STEP
            if ti >= DURATION:
                break
            rows.append((round(ti, 3), round(axis + (target - axis) * i / n, 4)))
        t += (n + 1) * STEP
        axis = target
    # ease back to center near the end
    rows.append((round(min(t + 2.0, DURATION - 1.0), 3), 0.0))

    OUT.parent.mkdir(parents=True, exist_ok=True)
    with OUT.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["# t_seconds", "axis"])
        w.writerows(rows)
    print(f"wrote {OUT} ({len(rows)} rows)")


if __name__ == "__main__":
    main()
