import { drawStrip } from "./charts.js";
import { BridgeClient, type Status } from "./client.js";
import { axisFromPointer, gamepadAxis } from "./joystick.js";
import { OutboundGate } from "./rate.js";
import { FAULT_LABELS, SessionStore, type FaultCode } from "./store.js";

const SPAN_S = 60;
const COMMAND_HZ = 30;

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el as T;
};

const params = new URLSearchParams(location.search);
const wsUrl = params.get("ws") ?? `ws://${location.hostname || "127.0.0.1"}:8765`;

const store = new SessionStore(SPAN_S);
const banner = $("banner");
const meta = $("meta");
const lamp = $("lamp");
const lampText = $("lamp-text");
const axisReadout = $("axis-readout");
const outputCanvas = $<HTMLCanvasElement>("chart-output");
const controlCanvas = $<HTMLCanvasElement>("chart-control");
const pad = $("pad");
const knob = $("knob");

let status: Status = { kind: "connecting" };
const client = new BridgeClient(
  wsUrl,
  store,
  (s) => {
    status = s;
  },
  WebSocket as unknown as ConstructorParameters<typeof BridgeClient>[3],
);
const gate = new OutboundGate(COMMAND_HZ, (axis) => client.sendAxis(axis, performance.now() / 1000));

// ------------------------------------------------------------- joystick

let dragging = false;
let axis = 0;

function setAxis(value: number): void {
  axis = value;
  gate.offer(axis, performance.now());
}

pad.addEventListener("pointerdown", (ev) => {
  dragging = true;
  pad.setPointerCapture(ev.pointerId);
  setAxis(axisFromPointer(pad.getBoundingClientRect(), ev.clientY));
});
pad.addEventListener("pointermove", (ev) => {
  if (dragging) setAxis(axisFromPointer(pad.getBoundingClientRect(), ev.clientY));
});
const release = () => {
  if (dragging) {
    dragging = false;
    setAxis(0); // spring return to center
  }
};
pad.addEventListener("pointerup", release);
pad.addEventListener("pointercancel", release);

function pollGamepad(): void {
  if (dragging) return; // pointer wins while held
  const pads = navigator.getGamepads?.() ?? [];
  for (const p of pads) {
    const value = gamepadAxis(p);
    if (value !== null) {
      if (value !== axis) setAxis(value);
      return;
    }
  }
}

// --------------------------------------------------------------- render

const LAMP_CLASSES: Record<FaultCode, string> = { 0: "ok", 1: "meas", 2: "ctl" };

function render(): void {
  pollGamepad();
  gate.tick(performance.now());

  if (store.hello) {
    meta.textContent = `${store.hello.scenario_id} · Ts = ${(store.hello.ts * 1000).toFixed(0)} ms`;
  }
  if (status.kind === "live") {
    banner.textContent = store.ended ? "run ended" : "live";
    banner.className = store.ended ? "banner ended" : "banner live";
  } else if (status.kind === "retrying") {
    banner.textContent = `connection lost — retrying in ${(status.delayMs / 1000).toFixed(1)} s`;
    banner.className = "banner lost";
  } else {
    banner.textContent = status.kind;
    banner.className = "banner lost";
  }

  const code = store.lamp;
  lamp.className = `lamp ${LAMP_CLASSES[code]}`;
  lampText.textContent = `${code} — ${FAULT_LABELS[code]}`;

  drawStrip(
    outputCanvas,
    store.window.frames,
    [
      { pick: (f) => f.y, color: "#ef5350", label: "y" },
      { pick: (f) => f.y_star, color: "#42a5f5", label: "y*" },
    ],
    SPAN_S,
  );
  drawStrip(controlCanvas, store.window.frames, [{ pick: (f) => f.u, color: "#66bb6a", label: "u" }], SPAN_S);

  knob.style.top = `${50 - axis * 42}%`;
  axisReadout.textContent = axis.toFixed(2);

  requestAnimationFrame(render);
}

client.connect();
requestAnimationFrame(render);
