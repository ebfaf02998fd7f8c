import type { Telemetry } from "./protocol.js";

/** Value range with a little headroom; degenerate (flat) series get a
 * symmetric band so the trace stays visible instead of hugging an edge. */
export function autoScale(values: ArrayLike<number>, padFrac = 0.08): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (let i = 0; i < values.length; i++) {
    const v = values[i]!;
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!(lo <= hi)) return [-1, 1];
  if (hi - lo < 1e-9) return [lo - 1, hi + 1];
  const pad = (hi - lo) * padFrac;
  return [lo - pad, hi + pad];
}

export interface TraceSpec {
  pick: (f: Telemetry) => number;
  color: string;
  label: string;
}

/** Redraw one strip chart over the rolling window. X is the bridge's run
 * time spanning [tLatest - spanS, tLatest]; all traces share one Y scale. */
export function drawStrip(
  canvas: HTMLCanvasElement,
  frames: readonly Telemetry[],
  traces: TraceSpec[],
  spanS: number,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  ctx.fillStyle = "#11151a";
  ctx.fillRect(0, 0, w, h);
  if (frames.length === 0) return;

  const tMax = frames[frames.length - 1]!.t;
  const tMin = tMax - spanS;
  const all: number[] = [];
  for (const tr of traces) for (const f of frames) all.push(tr.pick(f));
  const [vLo, vHi] = autoScale(all);
  const x = (t: number) => ((t - tMin) / spanS) * w;
  const y = (v: number) => h - ((v - vLo) / (vHi - vLo)) * h;

  ctx.strokeStyle = "#2a3542";
  ctx.lineWidth = 1;
  ctx.beginPath();
  const yZero = y(0);
  if (yZero >= 0 && yZero <= h) {
    ctx.moveTo(0, yZero);
    ctx.lineTo(w, yZero);
  }
  ctx.stroke();

  for (const tr of traces) {
    ctx.strokeStyle = tr.color;
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    let started = false;
    for (const f of frames) {
      const px = x(f.t);
      const py = y(tr.pick(f));
      if (started) ctx.lineTo(px, py);
      else {
        ctx.moveTo(px, py);
        started = true;
      }
    }
    ctx.stroke();
  }

  ctx.font = "11px system-ui, sans-serif";
  ctx.textBaseline = "top";
  let lx = 8;
  for (const tr of traces) {
    ctx.fillStyle = tr.color;
    ctx.fillText(tr.label, lx, 6);
    lx += ctx.measureText(tr.label).width + 14;
  }
  ctx.fillStyle = "#8b98a5";
  const range = `[${vLo.toPrecision(3)}, ${vHi.toPrecision(3)}]`;
  ctx.fillText(range, w - ctx.measureText(range).width - 8, 6);
}
