/** Wire types mirroring the mission service's HTTP/WebSocket protocol. */

export type FtLabel = "backward" | "none" | "forward";
export type RtLabel = "left" | "none" | "right";
export type DtLabel = "down" | "none" | "up";

export interface WireAction {
  ft: FtLabel;
  rt: RtLabel;
  dt: DtLabel;
}

export interface WireObservation {
  time_elapsed: number;
  vehicle_mass: number;
  vehicle_propellant: number;
  pursuer_pos: [number, number, number];
  pursuer_vel: [number, number, number];
  evader_pos: [number, number, number];
  evader_vel: [number, number, number];
  prograde: [number, number, number] | null;
  range: number;
  range_rate: number;
}

export interface ScoreSnapshot {
  closest_distance: number;
  speed_at_closest: number;
  fuel_used: number;
  elapsed: number;
  total: number;
}

export interface StateMessage {
  type: "state";
  tick: number;
  observation: WireObservation;
  prograde: [number, number, number] | null;
  range: number;
  range_rate: number;
  propellant: number;
  score: ScoreSnapshot;
}

export interface EpisodeResultPayload {
  closest_distance: number;
  speed_at_closest: number;
  fuel_used: number;
  elapsed: number;
  score: number;
  termination_reason: string;
  seed: number;
}

export interface DoneMessage {
  type: "done";
  tick: number;
  result: EpisodeResultPayload;
  termination_reason: string;
}

export type ServerMessage = StateMessage | DoneMessage;
