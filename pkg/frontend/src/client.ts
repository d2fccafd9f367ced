// WebSocket client: connect, greet, dispatch commands, route replies.
//
// The view renders only what snapshots say; pending commands show as
// in-flight until their ack or error lands. On connection loss every queued
// action fails visibly and a fresh hello starts the next session.

import {
  AckMsg,
  CommandPayload,
  CommandTracker,
  ErrorMsg,
  HelloMsg,
  SampleMsg,
  Snapshot,
  parseServerMsg,
} from "./protocol.js";

export interface ClientEvents {
  onSnapshot?: (snap: Snapshot) => void;
  onHello?: (msg: HelloMsg) => void;
  onServerError?: (msg: ErrorMsg) => void;
  onStatus?: (text: string) => void;
}

type SocketLike = {
  send(data: string): void;
  close(): void;
  addEventListener(type: string, handler: (event: any) => void): void;
};

export class ViewportClient {
  private socket: SocketLike | null = null;
  private tracker = new CommandTracker();
  private events: ClientEvents;
  private makeSocket: (url: string) => SocketLike;
  readonly url: string;
  connected = false;

  constructor(
    url: string,
    events: ClientEvents = {},
    makeSocket: (url: string) => SocketLike = (u) => new WebSocket(u) as unknown as SocketLike,
  ) {
    this.url = url;
    this.events = events;
    this.makeSocket = makeSocket;
  }

  connect(): void {
    const socket = this.makeSocket(this.url);
    this.socket = socket;
    socket.addEventListener("open", () => {
      this.connected = true;
      socket.send(JSON.stringify({ type: "hello", client: "viewport", v: 1 }));
      this.events.onStatus?.("connected");
    });
    socket.addEventListener("message", (event: MessageEvent) => {
      this.handleText(String(event.data));
    });
    socket.addEventListener("close", () => {
      this.connected = false;
      const dropped = this.tracker.dropAll("connection lost");
      this.events.onStatus?.(
        dropped > 0 ? `disconnected; ${dropped} queued action(s) dropped` : "disconnected",
      );
      // reconnect with a fresh hello
      setTimeout(() => this.connect(), 1000);
    });
  }

  handleText(text: string): void {
    const msg = parseServerMsg(text);
    if (msg === null) return;
    if (msg.type === "snapshot") {
      this.events.onSnapshot?.(msg);
    } else if (msg.type === "hello") {
      this.events.onHello?.(msg);
    } else if (msg.type === "ack" || msg.type === "error") {
      const routed = this.tracker.settle(msg);
      if (!routed && msg.type === "error") {
        this.events.onServerError?.(msg);
      }
    }
  }

  /** One command per action, fresh seq, resolves with the ack or error. */
  dispatch(payload: CommandPayload): Promise<AckMsg | ErrorMsg> {
    return new Promise((resolve) => {
      if (!this.socket || !this.connected) {
        resolve({ type: "error", seq: null, code: "NotConnected", message: "socket is not open" });
        return;
      }
      const msg = this.tracker.issue(payload, resolve);
      this.socket.send(JSON.stringify(msg));
    });
  }

  sendSample(sample: SampleMsg): void {
    if (this.socket && this.connected) {
      this.socket.send(JSON.stringify(sample));
    }
  }

  get pendingCount(): number {
    return this.tracker.inFlight;
  }
}
