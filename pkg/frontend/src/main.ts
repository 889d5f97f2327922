/** DOM wiring: session lifecycle, key handling, render loop. */

import { SessionClient } from "./client.js";
import { BOUND_KEYS, HeldKeys, KEY_BINDINGS } from "./input.js";
import { markerPosition } from "./navball.js";
import { ConsoleState, PilotLoop, initialState, reduceMessage } from "./state.js";
import type { ServerMessage } from "./types.js";

const client = new SessionClient("");
const keys = new HeldKeys();
let state: ConsoleState = initialState();
let socket: WebSocket | null = null;
let pilot: PilotLoop | null = null;

const $ = (id: string) => document.getElementById(id) as HTMLElement;

function fmt(value: number | undefined, digits = 2): string {
  return value === undefined ? "-" : value.toFixed(digits);
}

function renderTick(): void {
  const latest = state.latest;
  $("status").textContent =
    `${state.connection} / ${state.status}${state.recording ? " (recording)" : ""}`;
  $("tick").textContent = latest ? String(latest.tick) : "-";
  $("range").textContent = fmt(latest?.range);
  $("range-rate").textContent = fmt(latest?.range_rate);
  $("propellant").textContent = fmt(latest?.propellant, 1);
  $("elapsed").textContent = fmt(latest?.observation.time_elapsed, 1);
  $("score-total").textContent = fmt(latest?.score.total);
  $("score-closest").textContent = fmt(latest?.score.closest_distance);
  $("score-fuel").textContent = fmt(latest?.score.fuel_used, 1);

  drawNavball(latest?.prograde ?? null);

  const overlay = $("result-overlay");
  if (state.result) {
    overlay.style.display = "flex";
    $("result-text").textContent =
      `closest ${fmt(state.result.closest_distance)} m @ ` +
      `${fmt(state.result.speed_at_closest)} m/s\n` +
      `fuel ${fmt(state.result.fuel_used, 1)} kg, ` +
      `elapsed ${fmt(state.result.elapsed, 1)} s\n` +
      `score ${fmt(state.result.score)} (${state.terminationReason})`;
  } else {
    overlay.style.display = "none";
  }
}

function drawNavball(prograde: [number, number, number] | null): void {
  const canvas = $("navball") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const cx = canvas.width / 2;
  const cy = canvas.height / 2;
  const radius = Math.min(cx, cy) - 10;

  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#3a4b5c";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.arc(cx, cy, radius, 0, 2 * Math.PI);
  ctx.stroke();
  ctx.beginPath();
  ctx.moveTo(cx - radius, cy);
  ctx.lineTo(cx + radius, cy);
  ctx.moveTo(cx, cy - radius);
  ctx.lineTo(cx, cy + radius);
  ctx.stroke();

  const marker = markerPosition(prograde, cx, cy, radius);
  if (!marker.visible) return;
  ctx.strokeStyle = marker.receding ? "#d9534f" : "#7ee081";
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.arc(marker.x, marker.y, 7, 0, 2 * Math.PI);
  ctx.stroke();
  ctx.beginPath();
  ctx.moveTo(marker.x, marker.y - 11);
  ctx.lineTo(marker.x, marker.y + 11);
  ctx.moveTo(marker.x - 11, marker.y);
  ctx.lineTo(marker.x + 11, marker.y);
  ctx.stroke();
}

function onServerMessage(message: ServerMessage): void {
  state = reduceMessage(state, message);
  pilot?.onMessage(message);
  renderTick();
}

async function newSession(): Promise<void> {
  const seed = Number((($("seed") as HTMLInputElement).value || "0"));
  const duration = Number((($("duration") as HTMLInputElement).value || "240"));
  state = initialState();
  state.connection = "connecting";
  renderTick();

  const id = await client.createSession({ seed, max_duration: duration });
  state.sessionId = id;
  pilot = new PilotLoop(() => {
    void client.submitAction(id, keys.toAction());
  });
  socket = client.openStream(id, onServerMessage);
  socket.onopen = () => {
    state.connection = "open";
    renderTick();
  };
  socket.onclose = () => {
    state.connection = "closed";
    renderTick();
  };
  $("session-id").textContent = id;
}

async function startSession(): Promise<void> {
  if (state.sessionId) await client.startSession(state.sessionId);
}

document.addEventListener("keydown", (event) => {
  if (BOUND_KEYS.has(event.key.toLowerCase())) {
    keys.keyDown(event.key);
    event.preventDefault();
  }
});
document.addEventListener("keyup", (event) => keys.keyUp(event.key));
window.addEventListener("blur", () => keys.clear());

$("btn-new").addEventListener("click", () => void newSession());
$("btn-start").addEventListener("click", () => void startSession());
$("bindings").textContent =
  `${KEY_BINDINGS.forward.toUpperCase()}/${KEY_BINDINGS.backward.toUpperCase()} fwd/back  ` +
  `${KEY_BINDINGS.left.toUpperCase()}/${KEY_BINDINGS.right.toUpperCase()} left/right  ` +
  `${KEY_BINDINGS.up.toUpperCase()}/${KEY_BINDINGS.down.toUpperCase()} up/down`;
renderTick();
