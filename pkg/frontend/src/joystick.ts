/** Pointer/gamepad geometry -> one vertical axis in [-1, 1], up positive. */

export interface PadRect {
  top: number;
  height: number;
}

/** Map a pointer's clientY inside (or past) the pad to an axis value.
 * The pad center is 0; dragging past the edge clamps rather than grows.
 */
export function axisFromPointer(rect: PadRect, clientY: number): number {
  if (!(rect.height > 0)) return 0;
  const center = rect.top + rect.height / 2;
  const raw = (center - clientY) / (rect.height / 2);
  return Math.min(1, Math.max(-1, raw));
}

export const GAMEPAD_DEADZONE = 0.08;

/** Read the pitch axis off a connected gamepad (stick Y, up positive).
 * Returns null when there is no usable reading so the virtual pad keeps
 * control; small values inside the deadzone read as exactly 0.
 */
export function gamepadAxis(pad: { axes: ReadonlyArray<number> } | null | undefined): number | null {
  const raw = pad?.axes[1];
  if (raw === undefined || !Number.isFinite(raw)) return null;
  const inverted = -raw; // browsers report stick-up as negative
  if (Math.abs(inverted) < GAMEPAD_DEADZONE) return 0;
  return Math.min(1, Math.max(-1, inverted));
}
