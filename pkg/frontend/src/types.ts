/** Wire types shared with the session server. */

export type ActionName = "up" | "down" | "left" | "right";

/** Column order of the Q/visit tables; matches the server's encoding. */
export const ACTIONS: ActionName[] = ["up", "down", "left", "right"];

export type Cell = [number, number]; // [row, col]

export interface MazeConfigView {
  schema_version: number;
  kind: string;
  width: number;
  height: number;
  start: Cell;
  treasure: Cell;
  exit: Cell;
  walls: [Cell, Cell][];
  rewards: { treasure: number; exit: number; wall: number; step: number };
  max_steps_per_episode: number;
}

export interface TrainingEvent {
  seq: number;
  kind: string;
  payload: Record<string, unknown>;
}

export interface StepCompletedPayload {
  episode: number;
  state: number;
  action: ActionName;
  reward: number;
  next_state: number;
  done: boolean;
  event: string;
  reward_source: string;
  action_source: string;
  score: number;
}

export interface EpisodeCompletedPayload {
  episode: number;
  score: number;
  steps: number;
  found_treasure: boolean;
  terminated_by: string;
  aborted: boolean;
}

export interface StatusPayload {
  session_id: string;
  mode: "auto" | "manual";
  phase: string;
  current_state: number;
  current_cell: Cell;
  treasure_collected: boolean;
  last_action: ActionName | null;
  last_reward: number | null;
  episode: number;
  score: number;
  awaiting: "advice" | "reward" | null;
  epsilon: number;
  running: boolean;
  legal_actions: ActionName[];
}

export interface QTablePayload {
  width: number;
  height: number;
  num_states: number;
  num_actions: number;
  values: number[][];
  min: number;
  max: number;
}

export interface VisitsPayload {
  width: number;
  height: number;
  counts: number[][];
  total: number;
}

export interface TrajectoryStepPayload {
  cell: Cell;
  next_cell: Cell;
  action: ActionName;
  reward: number;
  event: string;
}

export interface TrajectoryPayload {
  has_episode: boolean;
  episode: number | null;
  score?: number;
  found_treasure?: boolean;
  steps: TrajectoryStepPayload[];
}

export const PHASES = [
  "observe_state",
  "choose_action",
  "execute_action",
  "receive_reward",
  "update_q",
] as const;

export type Phase = (typeof PHASES)[number];
