// Protocol conformance against the real engine: a scripted WebSocket
// session drives bind -> record -> replay -> layer; every command must be
// acked, and for 100 replay frames the waypoints the render model draws
// opaque must be exactly the snapshot's visibility window.

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { spawn, ChildProcess } from "node:child_process";
import WebSocket from "ws";

import { buildScene, opaqueWaypoints } from "../src/scene.js";
import type { AckMsg, ServerMsg, Snapshot } from "../src/protocol.js";

const PORT = 18640 + Math.floor(Math.random() * 200);
const URL = `ws://127.0.0.1:${PORT}/ws`;

let server: ChildProcess;

class WireSession {
  private ws!: WebSocket;
  private queue: ServerMsg[] = [];
  private waiters: ((msg: ServerMsg) => void)[] = [];
  private nextSeq = 1;
  acked: number[] = [];
  failed: { seq: number; code: string }[] = [];

  async connect(url: string): Promise<void> {
    for (let attempt = 0; attempt < 80; attempt++) {
      try {
        await new Promise<void>((resolve, reject) => {
          const ws = new WebSocket(url);
          ws.once("open", () => {
            this.ws = ws;
            resolve();
          });
          ws.once("error", reject);
        });
        this.ws.on("message", (data) => {
          const msg = JSON.parse(String(data)) as ServerMsg;
          const waiter = this.waiters.shift();
          if (waiter) waiter(msg);
          else this.queue.push(msg);
        });
        return;
      } catch {
        await sleep(250);
      }
    }
    throw new Error(`server never came up on ${url}`);
  }

  next(): Promise<ServerMsg> {
    const queued = this.queue.shift();
    if (queued) return Promise.resolve(queued);
    return new Promise((resolve) => this.waiters.push(resolve));
  }

  async nextOfType<T extends ServerMsg["type"]>(type: T, limit = 400): Promise<Extract<ServerMsg, { type: T }>> {
    for (let i = 0; i < limit; i++) {
      const msg = await this.next();
      if (msg.type === type) return msg as Extract<ServerMsg, { type: T }>;
    }
    throw new Error(`no ${type} within ${limit} messages`);
  }

  /** Sends a command and waits for its ack/error, recording the outcome. */
  async command(payload: Record<string, unknown>): Promise<AckMsg> {
    const seq = this.nextSeq++;
    this.ws.send(JSON.stringify({ type: "command", seq, ...payload }));
    for (let i = 0; i < 600; i++) {
      const msg = await this.next();
      if ((msg.type === "ack" || msg.type === "error") && msg.seq === seq) {
        if (msg.type === "ack") {
          this.acked.push(seq);
          return msg;
        }
        this.failed.push({ seq, code: msg.code });
        throw new Error(`command ${payload.cmd} failed: ${msg.code}: ${msg.message}`);
      }
    }
    throw new Error(`no reply for seq ${seq}`);
  }

  sample(t: number, device: string, pos: [number, number, number]): void {
    this.ws.send(JSON.stringify({ type: "sample", t, device, pos, quat: [1, 0, 0, 0] }));
  }

  close(): void {
    this.ws?.close();
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

beforeAll(async () => {
  server = spawn(
    "python3",
    [
      "-m", "movesketch.cli", "serve",
      "--rig", "legs",
      "--port", String(PORT),
      "--tick-rate", "120",
      "--snapshot-rate", "60",
    ],
    { cwd: "..", stdio: ["ignore", "pipe", "pipe"] },
  );
  server.stderr?.on("data", () => {});
}, 30_000);

afterAll(() => {
  server?.kill("SIGTERM");
});

describe("scripted session against the live engine", () => {
  it("drives bind -> record -> replay -> layer with every command acked, and the rendered window matches the snapshot for 100 replay frames", async () => {
    const session = new WireSession();
    await session.connect(URL);

    const hello = await session.nextOfType("hello");
    expect(hello.v).toBe(1);
    await session.nextOfType("snapshot");

    // --- bind ---
    await session.command({ cmd: "bind", device: "sim1", bone: "ctrl_ankle_l" });

    // --- record a trajectory sketch from streamed samples ---
    await session.command({ cmd: "record_start", kind: "trajectory", device: "sim1" });
    const seconds = 2.0;
    for (let i = 0; i <= seconds * 60; i++) {
      const t = i / 60;
      session.sample(t, "sim1", [
        0.1 + 0.2 * Math.sin(2 * Math.PI * t * 0.7),
        0.1 + 0.15 * t,
        0.2 * Math.sin(2 * Math.PI * t * 0.4),
      ]);
    }
    await sleep(seconds * 1000 + 500); // rebased samples drain in session time
    const recAck = await session.command({ cmd: "record_stop" });
    const trajId = String(recAck.id);
    expect(trajId).toMatch(/^traj-/);

    // --- record a take with the same binding ---
    await session.command({ cmd: "record_start", kind: "take" });
    await sleep(400);
    const takeAck = await session.command({ cmd: "record_stop" });
    const takeId = String(takeAck.id);
    expect(takeId).toMatch(/^take-/);

    // --- layer the take onto the timeline ---
    await session.command({ cmd: "layer", take: takeId, offset: 0.0 });

    // --- replay at half speed and verify the rendered window every frame ---
    await session.command({ cmd: "replay", ids: [trajId], speed: 0.5 });
    let checked = 0;
    const deadline = Date.now() + 30_000;
    while (checked < 100 && Date.now() < deadline) {
      const snap = (await session.nextOfType("snapshot")) as Snapshot;
      const cursor = snap.cursors.find((c) => c.id === trajId);
      if (!cursor || cursor.finished) {
        if (snap.mode === "idle") break;
        continue;
      }
      expect(cursor.visible.length).toBeLessThanOrEqual(5);
      const scene = buildScene(snap);
      expect(opaqueWaypoints(scene, trajId)).toEqual([...cursor.visible].sort((a, b) => a - b));
      checked++;
    }
    expect(checked).toBeGreaterThanOrEqual(100);

    // every command in the session got exactly one ack, none failed
    expect(session.failed).toEqual([]);
    expect(session.acked.length).toBe(7);
    expect(new Set(session.acked).size).toBe(7);

    session.close();
  }, 60_000);
});
