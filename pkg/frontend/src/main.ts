// Entry point: canvas + orbit camera + panel, fed by snapshots over /ws.

import { OrbitCamera } from "./camera.js";
import { ViewportClient } from "./client.js";
import { drawScene } from "./render.js";
import { buildScene } from "./scene.js";
import { SimController } from "./simcontroller.js";
import { Panel } from "./ui.js";
import type { Snapshot } from "./protocol.js";

const canvas = document.getElementById("viewport") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const camera = new OrbitCamera();
const sim = new SimController("sim1");

let latest: Snapshot | null = null;

const statusLine = document.getElementById("status")!;
const client = new ViewportClient(`ws://${location.host}/ws`, {
  onSnapshot: (snap) => {
    latest = snap;
    panel.sync(snap);
  },
  onHello: (msg) => {
    statusLine.textContent = `connected (tick ${msg.tick_rate} Hz, snapshots ${msg.snapshot_rate} Hz)`;
  },
  onStatus: (text) => {
    statusLine.textContent = text;
  },
  onServerError: (msg) => {
    statusLine.textContent = `engine: ${msg.code}: ${msg.message}`;
  },
});
const panel = new Panel(document.getElementById("panel")!, client);
client.connect();

function resize(): void {
  canvas.width = canvas.clientWidth;
  canvas.height = canvas.clientHeight;
}
window.addEventListener("resize", resize);
resize();

function frame(): void {
  if (latest) {
    drawScene(ctx, camera, buildScene(latest), canvas.width, canvas.height);
  }
  requestAnimationFrame(frame);
}
requestAnimationFrame(frame);

// pointer input: orbit by default, drive the simulated controller when armed
let dragging = false;
let lastX = 0;
let lastY = 0;

canvas.addEventListener("pointerdown", (e) => {
  dragging = true;
  lastX = e.offsetX;
  lastY = e.offsetY;
  canvas.setPointerCapture(e.pointerId);
});
canvas.addEventListener("pointerup", () => {
  dragging = false;
});
canvas.addEventListener("pointermove", (e) => {
  const dx = e.offsetX - lastX;
  const dy = e.offsetY - lastY;
  lastX = e.offsetX;
  lastY = e.offsetY;
  if (!dragging) return;
  if (panel.driving) {
    const sample = sim.pointerMove(
      camera, e.offsetX, e.offsetY, canvas.width, canvas.height, e.shiftKey, dx, dy,
    );
    if (sample) client.sendSample(sample);
  } else {
    camera.rotate(-dx * 0.008, dy * 0.006);
  }
});
canvas.addEventListener("wheel", (e) => {
  e.preventDefault();
  if (panel.driving) {
    const sample = sim.wheel(e.deltaY);
    if (sample) client.sendSample(sample);
  } else {
    camera.zoom(e.deltaY > 0 ? 1.1 : 1 / 1.1);
  }
});
