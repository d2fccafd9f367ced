// Wire protocol types and the command bookkeeping used by the client.
// Mirrors PROTOCOL.md at the repository root.

export interface HelloMsg {
  type: "hello";
  v: number;
  tick_rate: number;
  snapshot_rate: number;
}

export interface BoneRow {
  name: string;
  head: [number, number, number];
  tail: [number, number, number];
  q: [number, number, number, number];
}

export interface CursorRow {
  id: string;
  pos: [number, number, number];
  visible: number[];
  finished: boolean;
}

export interface JigRow {
  devices: string[];
  kind: string;
  positions?: [number, number, number][];
  path?: [number, number, number][];
}

export interface BindingRow {
  device: string;
  bone: string;
  mode: string;
}

export interface TrajectoryRow {
  id: string;
  waypoints: [number, number, number][];
}

export interface Snapshot {
  type: "snapshot";
  v: number;
  clock: number;
  mode: string;
  bones: BoneRow[];
  cursors: CursorRow[];
  jigs: JigRow[];
  bindings: BindingRow[];
  trajectories: TrajectoryRow[];
  takes: string[];
  timeline: { take: string; offset: number }[];
}

export interface AckMsg {
  type: "ack";
  seq: number;
  cmd: string;
  [key: string]: unknown;
}

export interface ErrorMsg {
  type: "error";
  seq: number | null;
  code: string;
  message: string;
}

export type ServerMsg = HelloMsg | Snapshot | AckMsg | ErrorMsg;

export interface SampleMsg {
  type: "sample";
  t: number;
  device: string;
  pos: [number, number, number];
  quat: [number, number, number, number];
}

export type CommandPayload = { cmd: string } & Record<string, unknown>;

export interface CommandMsg extends Record<string, unknown> {
  type: "command";
  seq: number;
}

export function parseServerMsg(text: string): ServerMsg | null {
  let data: unknown;
  try {
    data = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const t = (data as { type?: unknown }).type;
  if (t === "hello" || t === "snapshot" || t === "ack" || t === "error") {
    return data as ServerMsg;
  }
  return null;
}

/** Allocates client-unique sequence numbers and tracks in-flight commands. */
export class CommandTracker {
  private nextSeq = 1;
  private pending = new Map<
    number,
    { cmd: string; resolve: (msg: AckMsg | ErrorMsg) => void }
  >();

  /** Builds the wire message and registers its resolution callback. */
  issue(payload: CommandPayload, resolve: (msg: AckMsg | ErrorMsg) => void): CommandMsg {
    const seq = this.nextSeq++;
    this.pending.set(seq, { cmd: payload.cmd, resolve });
    return { type: "command", seq, ...payload };
  }

  /** Routes an ack/error to its command; returns false for unknown seqs. */
  settle(msg: AckMsg | ErrorMsg): boolean {
    if (msg.seq === null || msg.seq === undefined) return false;
    const entry = this.pending.get(msg.seq);
    if (!entry) return false;
    this.pending.delete(msg.seq);
    entry.resolve(msg);
    return true;
  }

  /** Fails every in-flight command (connection loss drops the queue). */
  dropAll(reason: string): number {
    const count = this.pending.size;
    for (const [seq, entry] of this.pending) {
      entry.resolve({ type: "error", seq, code: "ConnectionLost", message: reason });
    }
    this.pending.clear();
    return count;
  }

  get inFlight(): number {
    return this.pending.size;
  }
}

// Per-tap edit magnitudes, matching the engine's trajectory module.
export const ROTATE_TAP_DEGREES = 5.0;
export const ZOOM_TAP_FACTOR = 1.1;
