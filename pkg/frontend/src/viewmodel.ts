/** Pure view models: what the grid and panels should show, minus the DOM. */

import { hueForQ } from "./colormap";
import { cellOfState, legalActions } from "./legality";
import { awaiting, ClientModel, qBounds } from "./model";
import { ActionName, Phase } from "./types";

export interface ArrowView {
  action: ActionName;
  hue: number;
  value: number;
}

/** Arrows for one cell of the chosen slice; boundary-masked ones omitted. */
export function arrowsForCell(
  model: ClientModel,
  row: number,
  col: number,
  flag: boolean,
): ArrowView[] {
  if (row === model.config.exit[0] && col === model.config.exit[1]) {
    return []; // terminal cell: nothing to choose
  }
  const { min, max } = qBounds(model);
  const base = (flag ? model.config.width * model.config.height : 0) + row * model.config.width + col;
  return legalActions(row, col, model.config).map((action) => {
    const value = model.q[base][actionColumn(action)];
    return { action, hue: hueForQ(value, min, max), value };
  });
}

export interface VisitLabel {
  action: ActionName;
  count: number;
}

export function visitLabelsForCell(
  model: ClientModel,
  row: number,
  col: number,
  flag: boolean,
): VisitLabel[] {
  const base = (flag ? model.config.width * model.config.height : 0) + row * model.config.width + col;
  return legalActions(row, col, model.config).map((action) => ({
    action,
    count: model.visits[base][actionColumn(action)],
  }));
}

function actionColumn(action: ActionName): number {
  return ["up", "down", "left", "right"].indexOf(action);
}

/** Which slice of the doubled state space to draw by default: follow the robot. */
export function currentFlag(model: ClientModel): boolean {
  return cellOfState(model.currentState, model.config).flag;
}

export function robotCell(model: ClientModel): { row: number; col: number } {
  const { row, col } = cellOfState(model.currentState, model.config);
  return { row, col };
}

/** Step-loop highlight: in manual mode the awaited phase lights up. */
export function highlightedPhase(model: ClientModel): Phase | null {
  return awaiting(model) === null ? null : model.phase;
}

/** Upper-panel field highlight paired with the loop highlight:
 *  awaiting advice lights "action", awaiting reward lights "reward". */
export function highlightedStatusField(model: ClientModel): "action" | "reward" | null {
  const kind = awaiting(model);
  if (kind === "advice") return "action";
  if (kind === "reward") return "reward";
  return null;
}

export interface DirectionButton {
  action: ActionName;
  enabled: boolean;
}

/** The four advice buttons; only legal directions are clickable, and only
 * while the loop is actually waiting for advice. */
export function directionButtons(model: ClientModel): DirectionButton[] {
  const { row, col } = robotCell(model);
  const legal = new Set(legalActions(row, col, model.config));
  const active = awaiting(model) === "advice";
  return (["up", "down", "left", "right"] as ActionName[]).map((action) => ({
    action,
    enabled: active && legal.has(action),
  }));
}

export function rewardControlsEnabled(model: ClientModel): boolean {
  return awaiting(model) === "reward";
}
