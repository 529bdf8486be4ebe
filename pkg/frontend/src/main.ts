// Operator console wiring: DOM widgets in, protocol lines out, canvas
// painting on every animation frame.

import { CommandThrottle, ConsoleModel } from "./model.js";
import { ConsoleLink } from "./net.js";
import {
  CommandRequest,
  Vec3,
  advanceModeLine,
  clampRequest,
  commandLine,
} from "./protocol.js";
import { drawSideStrip, drawTopView, formatVec } from "./render.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

const topCanvas = byId<HTMLCanvasElement>("top-view");
const sideCanvas = byId<HTMLCanvasElement>("side-view");
const topCtx = topCanvas.getContext("2d")!;
const sideCtx = sideCanvas.getContext("2d")!;

const fieldSlider = byId<HTMLInputElement>("field-mt");
const fieldReadout = byId<HTMLSpanElement>("field-readout");
const amfToggle = byId<HTMLInputElement>("amf");
const rotationInput = byId<HTMLInputElement>("rotation-hz");
const pauseButton = byId<HTMLButtonElement>("pause");
const targetSelect = byId<HTMLSelectElement>("target");
const pad = byId<HTMLDivElement>("pad");
const knob = byId<HTMLDivElement>("knob");
const banner = byId<HTMLDivElement>("banner");
const roleBadge = byId<HTMLSpanElement>("role");
const statusLine = byId<HTMLDivElement>("status-line");
const ackLine = byId<HTMLDivElement>("ack-line");
const fpsBadge = byId<HTMLSpanElement>("fps");

const model = new ConsoleModel();
const throttle = new CommandThrottle(50);

// Joystick deflection in [-1, 1]^2, pad up meaning +y (toward branch A).
let stick: [number, number] = [0, 0];

function currentRequest(): CommandRequest {
  const envelope = model.hello?.envelope ?? { max_field_t: 0.03, max_gradient_tpm: 1.0 };
  const gradient: Vec3 = [
    stick[0] * envelope.max_gradient_tpm,
    stick[1] * envelope.max_gradient_tpm,
    0,
  ];
  const raw: CommandRequest = {
    field_magnitude_t: Number(fieldSlider.value) / 1000,
    field_direction: [1, 0, 0],
    gradient_tpm: gradient,
    amf_on: amfToggle.checked,
    rotation_hz: Number(rotationInput.value) || 0,
  };
  return clampRequest(raw, envelope);
}

function pushCommand(): void {
  const request = throttle.offer(currentRequest(), performance.now());
  if (request) link.send(commandLine(request));
}

const link = new ConsoleLink(wsUrl(), {
  onMessage: (message) => {
    model.ingest(message);
    if (message.kind === "hello") {
      roleBadge.textContent = message.role;
      roleBadge.className = message.role;
      fieldSlider.max = String(message.envelope.max_field_t * 1000);
    }
  },
  onUp: () => {
    model.connection = "live";
  },
  onDown: () => {
    model.connection = "reconnecting";
    roleBadge.textContent = "reconnecting";
    roleBadge.className = "observer";
  },
});

function wsUrl(): string {
  const scheme = location.protocol === "https:" ? "wss" : "ws";
  return `${scheme}://${location.host}/`;
}

function setKnob(dx: number, dy: number): void {
  const limit = pad.clientWidth / 2 - knob.clientWidth / 2;
  knob.style.transform = `translate(${dx * limit}px, ${dy * limit}px)`;
}

function padHandler(event: PointerEvent): void {
  const rect = pad.getBoundingClientRect();
  let dx = ((event.clientX - rect.left) / rect.width) * 2 - 1;
  let dy = ((event.clientY - rect.top) / rect.height) * 2 - 1;
  const len = Math.hypot(dx, dy);
  if (len > 1) {
    dx /= len;
    dy /= len;
  }
  stick = [dx, -dy];
  setKnob(dx, dy);
  pushCommand();
}

pad.addEventListener("pointerdown", (event) => {
  pad.setPointerCapture(event.pointerId);
  padHandler(event);
});
pad.addEventListener("pointermove", (event) => {
  if (pad.hasPointerCapture(event.pointerId)) padHandler(event);
});
const releaseStick = (event: PointerEvent) => {
  if (pad.hasPointerCapture(event.pointerId)) pad.releasePointerCapture(event.pointerId);
  stick = [0, 0];
  setKnob(0, 0);
  pushCommand();
};
pad.addEventListener("pointerup", releaseStick);
pad.addEventListener("pointercancel", releaseStick);

fieldSlider.addEventListener("input", pushCommand);
amfToggle.addEventListener("change", pushCommand);
rotationInput.addEventListener("change", pushCommand);

pauseButton.addEventListener("click", () => {
  const next = model.mode === "running" ? "paused" : "running";
  link.send(advanceModeLine(next));
});

targetSelect.addEventListener("change", () => {
  model.targetBranch = targetSelect.value === "B" ? "B" : "A";
});

let frames = 0;
let fpsStamp = performance.now();

function hud(): void {
  fieldReadout.textContent = `${fieldSlider.value} mT`;
  pauseButton.textContent = model.mode === "running" ? "pause" : "run";

  const s = model.latest;
  const dilation = model.hello ? `x${model.hello.time_dilation}` : "";
  statusLine.textContent = s
    ? `t=${s.t.toFixed(3)} s ${dilation}  ${model.status}  ${s.region}  ` +
      `T=${s.temperature_c.toFixed(1)} C  dissolved ${(s.dissolved_fraction * 100).toFixed(0)}%  ` +
      `contacts ${s.wall_contacts}`
    : `${model.connection}...`;

  const ack = model.effective;
  ackLine.textContent = ack
    ? `acked: ${(ack.field_magnitude_t * 1000).toFixed(1)} mT  ` +
      `grad [${formatVec(ack.gradient_tpm, 2)}] T/m  ` +
      `AMF ${ack.amf_on ? "on" : "off"}  rot ${ack.rotation_hz.toFixed(1)} Hz`
    : "acked: none yet";

  const note = model.banner();
  banner.textContent = note ? note.text : "";
  banner.className = note ? (note.good ? "good" : "bad") : "hidden";
}

function frame(): void {
  const pending = throttle.due(performance.now());
  if (pending) link.send(commandLine(pending));

  drawTopView(topCtx, model, topCanvas.width, topCanvas.height);
  drawSideStrip(sideCtx, model, sideCanvas.width, sideCanvas.height);
  hud();

  frames += 1;
  const now = performance.now();
  if (now - fpsStamp >= 1000) {
    fpsBadge.textContent = `${frames} fps`;
    frames = 0;
    fpsStamp = now;
  }
  requestAnimationFrame(frame);
}

link.connect();
requestAnimationFrame(frame);
