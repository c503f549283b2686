/** Client-side mirror of the server's action masking.
 *
 * Used only to disable controls and omit masked arrows; the server stays
 * authoritative and re-checks every submission.
 */

import { ACTIONS, ActionName, MazeConfigView } from "./types";

export const DELTAS: Record<ActionName, [number, number]> = {
  up: [-1, 0],
  down: [1, 0],
  left: [0, -1],
  right: [0, 1],
};

export function legalActions(row: number, col: number, config: MazeConfigView): ActionName[] {
  const out: ActionName[] = [];
  for (const action of ACTIONS) {
    const [dr, dc] = DELTAS[action];
    const r = row + dr;
    const c = col + dc;
    if (r >= 0 && r < config.height && c >= 0 && c < config.width) {
      out.push(action);
    }
  }
  return out;
}

export function actionIndex(action: ActionName): number {
  return ACTIONS.indexOf(action);
}

/** State indexing: flag selects the upper half of the table. */
export function stateIndex(row: number, col: number, flag: boolean, config: MazeConfigView): number {
  return (flag ? config.width * config.height : 0) + row * config.width + col;
}

export function cellOfState(
  state: number,
  config: MazeConfigView,
): { row: number; col: number; flag: boolean } {
  const cells = config.width * config.height;
  const flag = state >= cells;
  const rem = state % cells;
  return { row: Math.floor(rem / config.width), col: rem % config.width, flag };
}

export function isWall(a: [number, number], b: [number, number], config: MazeConfigView): boolean {
  const key = edgeKey(a, b);
  return config.walls.some((w) => edgeKey(w[0], w[1]) === key);
}

function edgeKey(a: [number, number], b: [number, number]): string {
  const [first, second] =
    a[0] < b[0] || (a[0] === b[0] && a[1] <= b[1]) ? [a, b] : [b, a];
  return `${first[0]},${first[1]}|${second[0]},${second[1]}`;
}
