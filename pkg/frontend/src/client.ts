/** Thin HTTP/WebSocket wrappers over the mission service protocol. */

import type { ServerMessage, WireAction } from "./types.js";

export class SessionClient {
  constructor(private readonly baseUrl: string = "") {}

  async createSession(config: Record<string, unknown>): Promise<string> {
    const response = await fetch(`${this.baseUrl}/sessions`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(config),
    });
    if (!response.ok) throw new Error(`create failed: ${response.status}`);
    const payload = (await response.json()) as { id: string };
    return payload.id;
  }

  async startSession(sessionId: string): Promise<void> {
    const response = await fetch(`${this.baseUrl}/sessions/${sessionId}/start`, {
      method: "POST",
    });
    if (!response.ok) throw new Error(`start failed: ${response.status}`);
  }

  async submitAction(sessionId: string, action: WireAction): Promise<void> {
    await fetch(`${this.baseUrl}/sessions/${sessionId}/action`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(action),
    });
  }

  openStream(sessionId: string, onMessage: (m: ServerMessage) => void): WebSocket {
    const proto = location.protocol === "https:" ? "wss:" : "ws:";
    const socket = new WebSocket(
      `${proto}//${location.host}${this.baseUrl}/sessions/${sessionId}/stream`,
    );
    socket.onmessage = (event) => {
      onMessage(JSON.parse(event.data as string) as ServerMessage);
    };
    return socket;
  }
}
