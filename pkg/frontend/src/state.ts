/** Console state: everything rendered comes verbatim from the last message. */

import type { EpisodeResultPayload, ServerMessage, StateMessage } from "./types.js";

export type ConnectionStatus = "idle" | "connecting" | "open" | "closed";
export type SessionStatus = "created" | "running" | "done";

export interface ConsoleState {
  connection: ConnectionStatus;
  sessionId: string | null;
  status: SessionStatus;
  latest: StateMessage | null;
  result: EpisodeResultPayload | null;
  terminationReason: string | null;
  recording: boolean;
}

export function initialState(): ConsoleState {
  return {
    connection: "idle",
    sessionId: null,
    status: "created",
    latest: null,
    result: null,
    terminationReason: null,
    recording: false,
  };
}

/** Fold one server message into the console state (no physics here). */
export function reduceMessage(state: ConsoleState, message: ServerMessage): ConsoleState {
  if (message.type === "state") {
    return { ...state, latest: message, status: "running", recording: true };
  }
  return {
    ...state,
    status: "done",
    recording: false,
    result: message.result,
    terminationReason: message.termination_reason,
  };
}

/**
 * Submits the held-keys action exactly once per received state tick;
 * done messages stop all submission.
 */
export class PilotLoop {
  private lastSubmittedTick = -1;
  private finished = false;

  constructor(private readonly submit: (tick: number) => void) {}

  onMessage(message: ServerMessage): void {
    if (this.finished) return;
    if (message.type === "done") {
      this.finished = true;
      return;
    }
    if (message.tick === this.lastSubmittedTick) return; // duplicate frame
    this.lastSubmittedTick = message.tick;
    this.submit(message.tick);
  }
}
