// Thin WebSocket wrapper: JSON in/out, auto-reconnect with backoff.

import type { ClientCmd, ServerMsg } from "./types.js";

export class ServerLink {
  private ws: WebSocket | null = null;
  private retryMs = 500;
  private closed = false;

  constructor(
    private url: string,
    private onMessage: (msg: ServerMsg) => void,
    private onStatus: (status: "connecting" | "open" | "closed") => void,
  ) {}

  connect(): void {
    this.onStatus("connecting");
    this.ws = new WebSocket(this.url);
    this.ws.onopen = () => {
      this.retryMs = 500;
      this.onStatus("open");
    };
    this.ws.onmessage = (ev) => {
      try {
        this.onMessage(JSON.parse(ev.data) as ServerMsg);
      } catch {
        // non-JSON payloads are ignored
      }
    };
    this.ws.onclose = () => {
      this.onStatus("closed");
      this.ws = null;
      if (!this.closed) {
        setTimeout(() => this.connect(), this.retryMs);
        this.retryMs = Math.min(this.retryMs * 2, 5000);
      }
    };
    this.ws.onerror = () => this.ws?.close();
  }

  send(cmd: ClientCmd): boolean {
    if (this.ws && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(JSON.stringify(cmd));
      return true;
    }
    return false;
  }

  close(): void {
    this.closed = true;
    this.ws?.close();
  }
}
