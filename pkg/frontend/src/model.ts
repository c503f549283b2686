/** Client model: a pure function of the replayed event stream.
 *
 * Every rendered value derives from this model; the UI never updates
 * optimistically. applyEvent returns a fresh model, so replaying the
 * same log always lands on the same state (that property is under test).
 */

import { actionIndex, cellOfState } from "./legality";
import {
  ActionName,
  EpisodeCompletedPayload,
  MazeConfigView,
  Phase,
  QTablePayload,
  StatusPayload,
  StepCompletedPayload,
  TrainingEvent,
  TrajectoryPayload,
  VisitsPayload,
} from "./types";

export interface TrajectoryStep {
  cell: [number, number];
  nextCell: [number, number];
  action: ActionName;
  reward: number;
  event: string;
}

export interface ClientModel {
  config: MazeConfigView;
  mode: "auto" | "manual";
  phase: Phase;
  episode: number;
  score: number;
  epsilon: number;
  lastAction: ActionName | null;
  lastReward: number | null;
  currentState: number;
  q: number[][];
  visits: number[][];
  currentSteps: TrajectoryStep[];
  lastTrajectory: TrajectoryStep[];
  lastTrajectoryEpisode: number | null;
  bridgeDown: boolean;
  lastSeq: number;
}

export function initialModel(config: MazeConfigView): ClientModel {
  const numStates = 2 * config.width * config.height;
  return {
    config,
    mode: "auto",
    phase: "observe_state",
    episode: 0,
    score: 0,
    epsilon: 0.3,
    lastAction: null,
    lastReward: null,
    currentState: stateOfCell(config.start, false, config),
    q: zeros(numStates),
    visits: zeros(numStates),
    currentSteps: [],
    lastTrajectory: [],
    lastTrajectoryEpisode: null,
    bridgeDown: false,
    lastSeq: 0,
  };
}

function zeros(numStates: number): number[][] {
  return Array.from({ length: numStates }, () => [0, 0, 0, 0]);
}

function stateOfCell(cell: [number, number], flag: boolean, config: MazeConfigView): number {
  return (flag ? config.width * config.height : 0) + cell[0] * config.width + cell[1];
}

/** Fold one server event into the model. Pure: the input is not touched. */
export function applyEvent(model: ClientModel, event: TrainingEvent): ClientModel {
  const next: ClientModel = { ...model, lastSeq: event.seq };
  switch (event.kind) {
    case "phase_changed": {
      next.phase = event.payload.phase as Phase;
      return next;
    }
    case "mode_changed": {
      next.mode = event.payload.mode as "auto" | "manual";
      return next;
    }
    case "epsilon_changed": {
      next.epsilon = event.payload.epsilon as number;
      return next;
    }
    case "q_cell_updated": {
      const state = event.payload.state as number;
      const column = actionIndex(event.payload.action as ActionName);
      next.q = model.q.map((row, s) =>
        s === state ? row.map((v, a) => (a === column ? (event.payload.new_value as number) : v)) : row,
      );
      return next;
    }
    case "step_completed": {
      const p = event.payload as unknown as StepCompletedPayload;
      const column = actionIndex(p.action);
      next.visits = model.visits.map((row, s) =>
        s === p.state ? row.map((v, a) => (a === column ? v + 1 : v)) : row,
      );
      next.lastAction = p.action;
      next.lastReward = p.reward;
      next.score = p.score;
      next.currentState = p.next_state;
      const from = cellOfState(p.state, model.config);
      const to = cellOfState(p.next_state, model.config);
      next.currentSteps = [
        ...model.currentSteps,
        {
          cell: [from.row, from.col],
          nextCell: [to.row, to.col],
          action: p.action,
          reward: p.reward,
          event: p.event,
        },
      ];
      return next;
    }
    case "episode_completed": {
      const p = event.payload as unknown as EpisodeCompletedPayload;
      if (!p.aborted) {
        next.lastTrajectory = model.currentSteps;
        next.lastTrajectoryEpisode = p.episode;
      }
      next.currentSteps = [];
      next.episode = p.episode + 1;
      next.score = 0;
      next.currentState = stateOfCell(model.config.start, false, model.config);
      return next;
    }
    case "awaiting_input": {
      if (event.payload.kind === "bridge_down") {
        next.bridgeDown = true;
      }
      return next;
    }
    default:
      return next;
  }
}

export function applyEvents(model: ClientModel, events: TrainingEvent[]): ClientModel {
  return events.reduce(applyEvent, model);
}

/** Awaited manual input, derived exactly like the server's loop status. */
export function awaiting(model: ClientModel): "advice" | "reward" | null {
  if (model.mode !== "manual") return null;
  if (model.phase === "choose_action") return "advice";
  if (model.phase === "receive_reward") return "reward";
  return null;
}

export function qBounds(model: ClientModel): { min: number; max: number } {
  let min = Infinity;
  let max = -Infinity;
  for (const row of model.q) {
    for (const v of row) {
      if (v < min) min = v;
      if (v > max) max = v;
    }
  }
  return { min, max };
}

/** Seed the model from REST snapshots when attaching to a live session. */
export function hydrate(
  model: ClientModel,
  status: StatusPayload,
  qtable: QTablePayload,
  visits: VisitsPayload,
  trajectory: TrajectoryPayload,
): ClientModel {
  return {
    ...model,
    mode: status.mode,
    phase: status.phase as Phase,
    episode: status.episode,
    score: status.score,
    epsilon: status.epsilon,
    lastAction: status.last_action,
    lastReward: status.last_reward,
    currentState: status.current_state,
    q: qtable.values.map((row) => [...row]),
    visits: visits.counts.map((row) => [...row]),
    lastTrajectory: trajectory.has_episode
      ? trajectory.steps.map((s) => ({
          cell: s.cell,
          nextCell: s.next_cell,
          action: s.action,
          reward: s.reward,
          event: s.event,
        }))
      : [],
    lastTrajectoryEpisode: trajectory.has_episode ? trajectory.episode : null,
  };
}
