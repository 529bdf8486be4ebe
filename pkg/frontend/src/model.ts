// Console view state, kept free of DOM types so it runs under vitest.

import {
  CommandMsg,
  CommandRequest,
  EndMsg,
  HelloMsg,
  ServerMsg,
  StateMsg,
  Vec3,
} from "./protocol.js";

export type Connection = "connecting" | "live" | "reconnecting";

export class ConsoleModel {
  hello: HelloMsg | null = null;
  latest: StateMsg | null = null;
  ack: CommandMsg | null = null;
  end: EndMsg | null = null;
  mode: "running" | "paused" = "paused";
  connection: Connection = "connecting";
  targetBranch: "A" | "B" = "A";
  trace: Vec3[] = [];
  staleDropped = 0;

  constructor(private traceLimit = 600) {}

  /** Fold one server message in; returns true when the view changed. */
  ingest(message: ServerMsg): boolean {
    switch (message.kind) {
      case "hello":
        this.hello = message;
        this.mode = message.status === "running" ? "running" : "paused";
        this.connection = "live";
        return true;
      case "state":
        return this.ingestState(message);
      case "command":
        if (!message.acked) return false;
        this.ack = message;
        return true;
      case "advance_mode":
        if (message.mode === "running" || message.mode === "paused") {
          this.mode = message.mode;
        }
        return true;
      case "end":
        this.end = message;
        return true;
    }
  }

  private ingestState(message: StateMsg): boolean {
    // Snapshots can arrive out of order across a reconnect; the render
    // must stay monotone in simulation time.
    if (this.latest && (message.seq <= this.latest.seq || message.t < this.latest.t)) {
      this.staleDropped += 1;
      return false;
    }
    this.latest = message;
    this.trace.push(message.position);
    if (this.trace.length > this.traceLimit) {
      this.trace.splice(0, this.trace.length - this.traceLimit);
    }
    return true;
  }

  get status(): string {
    if (this.end) return "finished";
    if (this.latest) return this.latest.status;
    return this.hello ? this.hello.status : "waiting";
  }

  get role(): string {
    return this.hello ? this.hello.role : "joining";
  }

  /** Effective command for display: always the server's clamped ack. */
  get effective(): CommandMsg | null {
    return this.ack;
  }

  banner(): { text: string; good: boolean } | null {
    if (!this.end) return null;
    const out = this.end.outcome;
    if (out === "exited_A" || out === "exited_B") {
      const branch = out.endsWith("A") ? "A" : "B";
      const good = branch === this.targetBranch;
      return {
        text: good ? `target reached: branch ${branch}` : `missed: exited branch ${branch}`,
        good,
      };
    }
    if (out === "dissolved") return { text: "capsule dissolved", good: true };
    if (out === "stalled") return { text: "capsule stalled", good: false };
    return { text: `session ended: ${out}`, good: false };
  }
}

/**
 * Trailing-edge rate limiter for outgoing commands. Drags on the
 * joystick arrive per mouse move; the wire sees at most one command
 * per period, always the newest.
 */
export class CommandThrottle {
  private lastSent = -Infinity;
  private pending: CommandRequest | null = null;

  constructor(private periodMs = 50) {}

  /** Offer a fresh request; returns it if it should go out now. */
  offer(request: CommandRequest, nowMs: number): CommandRequest | null {
    if (nowMs - this.lastSent >= this.periodMs) {
      this.lastSent = nowMs;
      this.pending = null;
      return request;
    }
    this.pending = request;
    return null;
  }

  /** Poll from the render loop so the last drag position still lands. */
  due(nowMs: number): CommandRequest | null {
    if (this.pending && nowMs - this.lastSent >= this.periodMs) {
      const request = this.pending;
      this.pending = null;
      this.lastSent = nowMs;
      return request;
    }
    return null;
  }
}
