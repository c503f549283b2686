import { describe, expect, it } from "vitest";

import { applyEvents, awaiting, initialModel } from "../src/model";
import {
  arrowsForCell,
  directionButtons,
  highlightedPhase,
  highlightedStatusField,
  visitLabelsForCell,
} from "../src/viewmodel";
import { MazeConfigView, TrainingEvent } from "../src/types";

import fixture from "./fixtures/events_3ep.json";

// Recorded from the real backend (see scripts/record_fixture.py): three
// automatic episodes, a switch to manual, and a park awaiting advice.
const config = fixture.config as unknown as MazeConfigView;
const events = fixture.events as unknown as TrainingEvent[];

function replay() {
  return applyEvents(initialModel(config), events);
}

describe("event replay", () => {
  it("two replays of the same log produce identical final model state", () => {
    const first = replay();
    const second = replay();
    expect(second).toEqual(first);
    expect(JSON.stringify(second)).toBe(JSON.stringify(first));
  });

  it("replay does not mutate the starting model", () => {
    const start = initialModel(config);
    const frozen = JSON.stringify(start);
    applyEvents(start, events);
    expect(JSON.stringify(start)).toBe(frozen);
  });

  it("reproduces the backend's Q table exactly", () => {
    expect(replay().q).toEqual(fixture.final_q);
  });

  it("reproduces the backend's visit counts exactly", () => {
    expect(replay().visits).toEqual(fixture.final_visits);
  });

  it("reproduces the backend's status fields", () => {
    const model = replay();
    const status = fixture.final_status;
    expect(model.mode).toBe(status.mode);
    expect(model.phase).toBe(status.phase);
    expect(model.episode).toBe(status.episode);
    expect(model.score).toBe(status.score);
    expect(model.epsilon).toBe(status.epsilon);
    expect(model.lastAction).toBe(status.last_action);
    expect(model.lastReward).toBe(status.last_reward);
    expect(model.currentState).toBe(status.current_state);
    expect(awaiting(model)).toBe(status.awaiting);
  });

  it("tracks the last completed episode's trajectory", () => {
    const model = replay();
    const backend = fixture.last_trajectory;
    expect(model.lastTrajectoryEpisode).toBe(backend.episode);
    expect(model.lastTrajectory.map((s) => [s.cell, s.action, s.reward, s.event])).toEqual(
      backend.steps.map((s: any) => [s.cell, s.action, s.reward, s.event]),
    );
  });
});

describe("grid rendering", () => {
  it("a fresh session renders every arrow in the identical neutral hue", () => {
    const fresh = initialModel(config); // all-zero table: min == max
    const hues = new Set<number>();
    for (let row = 0; row < config.height; row++) {
      for (let col = 0; col < config.width; col++) {
        for (const arrow of arrowsForCell(fresh, row, col, false)) {
          hues.add(arrow.hue);
        }
      }
    }
    expect(hues).toEqual(new Set([60]));
  });

  it("corner cells render exactly the unmasked arrow count", () => {
    const model = replay();
    expect(arrowsForCell(model, 0, 0, false)).toHaveLength(2); // corner
    expect(arrowsForCell(model, 0, 1, false)).toHaveLength(3); // edge
    expect(arrowsForCell(model, 1, 1, false)).toHaveLength(4); // interior
    expect(arrowsForCell(model, 2, 1, true)).toHaveLength(3); // edge, other slice
  });

  it("never renders an arrow for a masked action", () => {
    const model = replay();
    for (let row = 0; row < config.height; row++) {
      for (let col = 0; col < config.width; col++) {
        for (const arrow of arrowsForCell(model, row, col, false)) {
          const r = row + { up: -1, down: 1, left: 0, right: 0 }[arrow.action];
          const c = col + { up: 0, down: 0, left: -1, right: 1 }[arrow.action];
          expect(r).toBeGreaterThanOrEqual(0);
          expect(r).toBeLessThan(config.height);
          expect(c).toBeGreaterThanOrEqual(0);
          expect(c).toBeLessThan(config.width);
        }
      }
    }
  });

  it("the exit cell renders no arrows", () => {
    const model = replay();
    expect(arrowsForCell(model, config.exit[0], config.exit[1], false)).toHaveLength(0);
  });

  it("visit labels cover exactly the legal actions", () => {
    const model = replay();
    const labels = visitLabelsForCell(model, 0, 0, false);
    expect(labels.map((l) => l.action).sort()).toEqual(["down", "right"]);
    const total = model.visits.flat().reduce((a, b) => a + b, 0);
    const stepEvents = events.filter((e) => e.kind === "step_completed").length;
    expect(total).toBe(stepEvents);
  });
});

describe("manual-mode highlight rule", () => {
  it("awaiting advice lights Choose Action in the loop and Action in the panel", () => {
    const model = replay(); // the log ends parked awaiting advice
    expect(awaiting(model)).toBe("advice");
    expect(highlightedPhase(model)).toBe("choose_action");
    expect(highlightedStatusField(model)).toBe("action");
  });

  it("direction buttons enable exactly the legal advice directions", () => {
    const model = replay(); // robot is back on the start corner
    const buttons = Object.fromEntries(directionButtons(model).map((b) => [b.action, b.enabled]));
    expect(buttons).toEqual({ up: false, left: false, down: true, right: true });
  });

  it("score resets to zero at the episode boundary", () => {
    const firstEpisodeEnd = events.findIndex((e) => e.kind === "episode_completed");
    const justBefore = applyEvents(initialModel(config), events.slice(0, firstEpisodeEnd));
    const justAfter = applyEvents(initialModel(config), events.slice(0, firstEpisodeEnd + 1));
    expect(justBefore.score).not.toBe(0);
    expect(justAfter.score).toBe(0);
    expect(justAfter.episode).toBe(justBefore.episode + 1);
  });

  it("no highlight in auto mode", () => {
    const upToModeSwitch = events.filter((e) => e.kind !== "mode_changed");
    const model = applyEvents(initialModel(config), upToModeSwitch);
    expect(awaiting(model)).toBe(null);
    expect(highlightedPhase(model)).toBe(null);
    expect(highlightedStatusField(model)).toBe(null);
    expect(directionButtons(model).every((b) => !b.enabled)).toBe(true);
  });
});
