// Control panel: bind / jig / record / replay / edit / layer, driven by
// snapshots and acks only. Buttons reflect engine truth, never local hope.

import type { ViewportClient } from "./client.js";
import type { Snapshot } from "./protocol.js";
import { ROTATE_TAP_DEGREES, ZOOM_TAP_FACTOR } from "./protocol.js";

export interface UiRefs {
  status: HTMLElement;
  mode: HTMLElement;
  log: HTMLElement;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text) node.textContent = text;
  return node;
}

export class Panel {
  private client: ViewportClient;
  private root: HTMLElement;
  private modeLine: HTMLElement;
  private logBox: HTMLElement;
  private trajSelect: HTMLSelectElement;
  private takeSelect: HTMLSelectElement;
  selectedTraj: string | null = null;
  driving = false;

  constructor(root: HTMLElement, client: ViewportClient) {
    this.client = client;
    this.root = root;
    this.modeLine = el("div", { class: "mode" }, "mode: -");
    this.logBox = el("div", { class: "log" });
    this.trajSelect = el("select");
    this.takeSelect = el("select");
    this.build();
  }

  private log(text: string): void {
    const line = el("div", {}, text);
    this.logBox.prepend(line);
    while (this.logBox.childElementCount > 8) this.logBox.lastChild?.remove();
  }

  private async run(payload: Record<string, unknown> & { cmd: string }): Promise<void> {
    const reply = await this.client.dispatch(payload);
    if (reply.type === "ack") {
      const extra = "id" in reply ? ` -> ${(reply as { id?: string }).id}` : "";
      this.log(`${payload.cmd} ok${extra}`);
    } else {
      this.log(`${payload.cmd} failed: ${reply.code}`);
    }
  }

  private build(): void {
    const bindRow = el("div", { class: "row" });
    const deviceInput = el("input", { value: "sim1", size: "6" });
    const boneInput = el("input", { value: "ctrl_body", size: "12" });
    const bindBtn = el("button", {}, "bind");
    bindBtn.onclick = () => this.run({ cmd: "bind", device: deviceInput.value, bone: boneInput.value });
    const unbindBtn = el("button", {}, "unbind");
    unbindBtn.onclick = () => this.run({ cmd: "unbind", device: deviceInput.value });
    bindRow.append("device ", deviceInput, " bone ", boneInput, bindBtn, unbindBtn);

    const driveRow = el("div", { class: "row" });
    const driveBtn = el("button", {}, "drive with mouse");
    driveBtn.onclick = () => {
      this.driving = !this.driving;
      driveBtn.textContent = this.driving ? "stop driving" : "drive with mouse";
    };
    driveRow.append(driveBtn, el("span", { class: "hint" }, " drag = move, shift = rotate, wheel = depth"));

    const jigRow = el("div", { class: "row" });
    const jigSelect = el("select");
    for (const name of ["none", "weight:default", "weight:heavy", "pendulum:default", "pendulum:long", "stick:line", "band:default"]) {
      jigSelect.append(el("option", { value: name }, name));
    }
    const jigBtn = el("button", {}, "set jig");
    jigBtn.onclick = () => {
      const name = jigSelect.value;
      if (name === "none") {
        this.run({ cmd: "set_jig", devices: [deviceInput.value], kind: null });
      } else {
        this.run({ cmd: "set_jig", devices: [deviceInput.value], kind: name.split(":")[0], preset: name });
      }
    };
    jigRow.append("jig ", jigSelect, jigBtn);

    const recRow = el("div", { class: "row" });
    const recTrajBtn = el("button", {}, "record sketch");
    recTrajBtn.onclick = () => this.run({ cmd: "record_start", kind: "trajectory", device: deviceInput.value });
    const recTakeBtn = el("button", {}, "record take");
    recTakeBtn.onclick = () => this.run({ cmd: "record_start", kind: "take" });
    const stopBtn = el("button", {}, "stop");
    stopBtn.onclick = () => this.run({ cmd: "record_stop" });
    recRow.append(recTrajBtn, recTakeBtn, stopBtn);

    const replayRow = el("div", { class: "row" });
    const speedInput = el("input", { value: "1.0", size: "4" });
    const replayBtn = el("button", {}, "replay");
    replayBtn.onclick = () => {
      if (this.trajSelect.value) {
        this.run({ cmd: "replay", ids: [this.trajSelect.value], speed: Number(speedInput.value) });
      }
    };
    const stopReplayBtn = el("button", {}, "stop replay");
    stopReplayBtn.onclick = () => this.run({ cmd: "stop_replay" });
    replayRow.append("traj ", this.trajSelect, " speed ", speedInput, replayBtn, stopReplayBtn);

    const editRow = el("div", { class: "row" });
    for (const [label, payload] of [
      ["rot -", { op: "rotate", axis: "y", angle_deg: -ROTATE_TAP_DEGREES }],
      ["rot +", { op: "rotate", axis: "y", angle_deg: ROTATE_TAP_DEGREES }],
      ["zoom -", { op: "zoom", factor: 1 / ZOOM_TAP_FACTOR }],
      ["zoom +", { op: "zoom", factor: ZOOM_TAP_FACTOR }],
    ] as const) {
      const btn = el("button", {}, label);
      btn.onclick = () => {
        if (this.trajSelect.value) {
          this.run({ cmd: "edit", id: this.trajSelect.value, ...payload });
        }
      };
      editRow.append(btn);
    }

    const layerRow = el("div", { class: "row" });
    const offsetInput = el("input", { value: "0.0", size: "5" });
    const layerBtn = el("button", {}, "layer take");
    layerBtn.onclick = () => {
      if (this.takeSelect.value) {
        this.run({ cmd: "layer", take: this.takeSelect.value, offset: Number(offsetInput.value) });
      }
    };
    layerRow.append("take ", this.takeSelect, " offset ", offsetInput, layerBtn);

    this.root.append(
      this.modeLine,
      bindRow,
      driveRow,
      jigRow,
      recRow,
      replayRow,
      editRow,
      layerRow,
      this.logBox,
    );
  }

  /** Refresh selects and the mode line from engine truth. */
  sync(snap: Snapshot): void {
    this.modeLine.textContent = `mode: ${snap.mode}   clock: ${snap.clock.toFixed(2)}s   pending: ${this.client.pendingCount}`;
    syncOptions(this.trajSelect, snap.trajectories.map((t) => t.id));
    syncOptions(this.takeSelect, snap.takes);
    this.selectedTraj = this.trajSelect.value || null;
  }
}

function syncOptions(select: HTMLSelectElement, ids: string[]): void {
  const current = new Set(Array.from(select.options).map((o) => o.value));
  const wanted = new Set(ids);
  if (current.size === wanted.size && ids.every((i) => current.has(i))) return;
  const chosen = select.value;
  select.innerHTML = "";
  for (const id of ids) {
    const opt = document.createElement("option");
    opt.value = id;
    opt.textContent = id;
    select.append(opt);
  }
  if (wanted.has(chosen)) select.value = chosen;
}
