// WebSocket link to the session service with automatic reconnection.

import { ServerMsg, helloLine, parseMessage } from "./protocol.js";

export function backoffMs(attempt: number): number {
  return Math.min(500 * 2 ** attempt, 8000);
}

export interface LinkHandlers {
  onMessage(message: ServerMsg): void;
  onUp(): void;
  onDown(): void;
}

export class ConsoleLink {
  private ws: WebSocket | null = null;
  private attempt = 0;
  private closed = false;

  constructor(
    private url: string,
    private handlers: LinkHandlers,
  ) {}

  connect(): void {
    const ws = new WebSocket(this.url);
    this.ws = ws;

    ws.onopen = () => {
      // Ask for control every time; the server demotes us to observer
      // when another controller is already seated, and the hello it
      // answers with carries the role we actually got.
      ws.send(helloLine("controller"));
      this.attempt = 0;
      this.handlers.onUp();
    };

    ws.onmessage = (event) => {
      if (typeof event.data !== "string") return;
      for (const line of event.data.split("\n")) {
        if (!line) continue;
        const message = parseMessage(line);
        if (message) this.handlers.onMessage(message);
      }
    };

    ws.onclose = () => this.reconnect();
    ws.onerror = () => ws.close();
  }

  private reconnect(): void {
    if (this.closed) return;
    this.handlers.onDown();
    const wait = backoffMs(this.attempt);
    this.attempt += 1;
    setTimeout(() => {
      if (!this.closed) this.connect();
    }, wait);
  }

  send(line: string): boolean {
    if (this.ws && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(line);
      return true;
    }
    return false;
  }

  close(): void {
    this.closed = true;
    this.ws?.close();
  }
}
