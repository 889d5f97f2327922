/**
 * 2D prograde indicator: the unit prograde's (x, z) components plotted
 * on crosshairs. Centered marker means the relative velocity points
 * straight at the target (x right, z up on screen means y toward it).
 */

export interface MarkerPlacement {
  visible: boolean;
  /** Pixel position on the indicator canvas. */
  x: number;
  y: number;
  /** True when the relative motion is away from the target (prograde y < 0). */
  receding: boolean;
}

export function markerPosition(
  prograde: [number, number, number] | null,
  centerX: number,
  centerY: number,
  radius: number,
): MarkerPlacement {
  if (prograde === null) {
    return { visible: false, x: centerX, y: centerY, receding: false };
  }
  const [px, py, pz] = prograde;
  return {
    visible: true,
    x: centerX + px * radius,
    y: centerY - pz * radius, // screen y grows downward
    receding: py < 0,
  };
}
