/** Keyboard-to-throttle mapping with fail-safe conflict handling. */

import type { DtLabel, FtLabel, RtLabel, WireAction } from "./types.js";

/** Key bindings (lower-case KeyboardEvent.key values). */
export const KEY_BINDINGS = {
  forward: "w",
  backward: "s",
  left: "a",
  right: "d",
  up: "r",
  down: "f",
} as const;

export const BOUND_KEYS: ReadonlySet<string> = new Set(Object.values(KEY_BINDINGS));

function axisLabel<L extends string>(
  negHeld: boolean,
  posHeld: boolean,
  negLabel: L,
  posLabel: L,
): L | "none" {
  if (negHeld && posHeld) return "none"; // conflicting pair resolves to none
  if (negHeld) return negLabel;
  if (posHeld) return posLabel;
  return "none";
}

/** Tracks currently held keys and maps them to a throttle action. */
export class HeldKeys {
  private held = new Set<string>();

  keyDown(key: string): void {
    const k = key.toLowerCase();
    if (BOUND_KEYS.has(k)) this.held.add(k);
  }

  keyUp(key: string): void {
    this.held.delete(key.toLowerCase());
  }

  clear(): void {
    this.held.clear();
  }

  isHeld(key: string): boolean {
    return this.held.has(key.toLowerCase());
  }

  toAction(): WireAction {
    const b = KEY_BINDINGS;
    const ft: FtLabel = axisLabel(
      this.held.has(b.backward), this.held.has(b.forward), "backward", "forward");
    const rt: RtLabel = axisLabel(
      this.held.has(b.left), this.held.has(b.right), "left", "right");
    const dt: DtLabel = axisLabel(
      this.held.has(b.down), this.held.has(b.up), "down", "up");
    return { ft, rt, dt };
  }
}
