/** Q-value -> arrow color.
 *
 * Values are normalized against the table's current global min/max and
 * mapped linearly from red (lowest) to green (highest). A table with no
 * spread yet (min == max, e.g. all zeros at session start) renders the
 * neutral mid-hue.
 */

export const RED_HUE = 0;
export const GREEN_HUE = 120;
export const NEUTRAL_HUE = 60;

/** Hue in [RED_HUE, GREEN_HUE], exact at both endpoints, monotone in q. */
export function hueForQ(q: number, qMin: number, qMax: number): number {
  if (qMin === qMax) {
    return NEUTRAL_HUE;
  }
  let t = (q - qMin) / (qMax - qMin);
  if (t < 0) t = 0;
  if (t > 1) t = 1;
  return RED_HUE + t * (GREEN_HUE - RED_HUE);
}

export function colorForQ(q: number, qMin: number, qMax: number): string {
  return `hsl(${hueForQ(q, qMin, qMax)}, 75%, 42%)`;
}
