/** The three foldable panels around the grid: status, controls, teaching. */

import { SessionApi } from "./api";
import { awaiting, ClientModel } from "./model";
import {
  directionButtons,
  highlightedPhase,
  highlightedStatusField,
  rewardControlsEnabled,
  robotCell,
} from "./viewmodel";
import { LayerFlags, SliceChoice } from "./grid";
import { PHASES } from "./types";

const PHASE_LABELS: Record<string, string> = {
  observe_state: "Observe State",
  choose_action: "Choose Action",
  execute_action: "Execute Action",
  receive_reward: "Receive Reward",
  update_q: "Update Q",
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = "",
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function foldable(root: HTMLElement, label: string): HTMLElement {
  const wrap = el("div", "panel");
  const button = el("button", "fold-toggle", label);
  const body = el("div", "panel-body");
  button.addEventListener("click", () => body.classList.toggle("folded"));
  wrap.append(button, body);
  root.appendChild(wrap);
  return body;
}

/** Upper panel: the five live training variables. */
export class StatusPanel {
  private fields = new Map<string, HTMLElement>();

  constructor(root: HTMLElement) {
    const body = foldable(root, "status");
    const row = el("div", "status-row");
    for (const name of ["state", "action", "reward", "episode", "score"]) {
      const box = el("div", "status-field");
      box.append(el("div", "status-label", name), el("div", "status-value", "-"));
      this.fields.set(name, box);
      row.appendChild(box);
    }
    body.appendChild(row);
  }

  render(model: ClientModel): void {
    const { row, col } = robotCell(model);
    const flagged = model.currentState >= model.config.width * model.config.height;
    this.set("state", `(${row},${col})${flagged ? " +T" : ""}`);
    this.set("action", model.lastAction ?? "-");
    this.set("reward", model.lastReward === null ? "-" : String(model.lastReward));
    this.set("episode", String(model.episode));
    this.set("score", String(model.score));
    const lit = highlightedStatusField(model);
    for (const [name, box] of this.fields) {
      box.classList.toggle("highlighted", name === lit);
    }
  }

  private set(name: string, value: string): void {
    const box = this.fields.get(name)!;
    (box.lastChild as HTMLElement).textContent = value;
  }
}

/** Left panel: run controls, epsilon slider, layer checkboxes, slice pick. */
export class ControlPanel {
  layers: LayerFlags = { learningExperience: true, visitedCounts: false, pastTrajectory: false };
  slice: SliceChoice = "follow";
  private epsilonValue: HTMLElement;
  private epsilonSlider: HTMLInputElement;

  constructor(
    root: HTMLElement,
    private api: SessionApi,
    private onLocalChange: () => void,
    private onError: (message: string) => void,
  ) {
    const body = foldable(root, "training");

    const buttons = el("div", "button-row");
    for (const command of ["start", "pause", "step", "reset"] as const) {
      const button = el("button", "control", command);
      button.addEventListener("click", () => {
        this.api.control(command).catch((err) => this.onError(err.message));
      });
      buttons.appendChild(button);
    }
    body.appendChild(buttons);

    const epsRow = el("div", "slider-row");
    epsRow.appendChild(el("span", "slider-label", "exploration ε"));
    this.epsilonSlider = el("input") as HTMLInputElement;
    this.epsilonSlider.type = "range";
    this.epsilonSlider.min = "0";
    this.epsilonSlider.max = "1";
    this.epsilonSlider.step = "0.01";
    this.epsilonSlider.addEventListener("change", () => {
      this.api.setEpsilon(Number(this.epsilonSlider.value)).catch((err) => this.onError(err.message));
    });
    this.epsilonValue = el("span", "slider-value", "0.30");
    epsRow.append(this.epsilonSlider, this.epsilonValue);
    body.appendChild(epsRow);

    const layerBox = el("div", "layer-box");
    const defs: [keyof LayerFlags, string][] = [
      ["learningExperience", "Learning Experience"],
      ["visitedCounts", "State-Action Pair Visited"],
      ["pastTrajectory", "Past Trajectory"],
    ];
    for (const [key, label] of defs) {
      const line = el("label", "layer-line");
      const box = el("input") as HTMLInputElement;
      box.type = "checkbox";
      box.checked = this.layers[key];
      box.addEventListener("change", () => {
        this.layers[key] = box.checked;
        this.onLocalChange();
      });
      line.append(box, document.createTextNode(" " + label));
      layerBox.appendChild(line);
    }
    const sliceLine = el("label", "layer-line");
    const select = el("select") as HTMLSelectElement;
    for (const [value, label] of [
      ["follow", "follow robot"],
      ["before", "before treasure"],
      ["after", "after treasure"],
    ]) {
      const option = el("option", "", label) as HTMLOptionElement;
      option.value = value;
      select.appendChild(option);
    }
    select.addEventListener("change", () => {
      this.slice = select.value as SliceChoice;
      this.onLocalChange();
    });
    sliceLine.append(document.createTextNode("table slice "), select);
    layerBox.appendChild(sliceLine);
    body.appendChild(layerBox);
  }

  render(model: ClientModel): void {
    this.epsilonValue.textContent = model.epsilon.toFixed(2);
    if (document.activeElement !== this.epsilonSlider) {
      this.epsilonSlider.value = String(model.epsilon);
    }
  }
}

/** Right panel: mode switch, step-loop animation, advice and reward input. */
export class TeachPanel {
  private modeButton: HTMLButtonElement;
  private phaseBoxes = new Map<string, HTMLElement>();
  private dirButtons = new Map<string, HTMLButtonElement>();
  private rewardSlider: HTMLInputElement;
  private rewardValue: HTMLElement;
  private rewardSubmit: HTMLButtonElement;
  private rewardConfirm: HTMLButtonElement;

  constructor(
    root: HTMLElement,
    private api: SessionApi,
    private onError: (message: string) => void,
  ) {
    const body = foldable(root, "teaching");

    this.modeButton = el("button", "control mode-toggle", "switch to manual");
    this.modeButton.addEventListener("click", () => {
      const next = this.modeButton.dataset.mode === "manual" ? "auto" : "manual";
      this.api.setMode(next).catch((err) => this.onError(err.message));
    });
    body.appendChild(this.modeButton);

    const loop = el("div", "phase-loop");
    for (const phase of PHASES) {
      const box = el("div", "phase-box", PHASE_LABELS[phase]);
      this.phaseBoxes.set(phase, box);
      loop.appendChild(box);
    }
    body.appendChild(loop);

    const pad = el("div", "dir-pad");
    const order: [string, string][] = [["up", "▲"], ["left", "◀"], ["right", "▶"], ["down", "▼"]];
    for (const [action, glyph] of order) {
      const button = el("button", `dir dir-${action}`, glyph);
      button.addEventListener("click", () => {
        this.api.advise(action as any).catch((err) => this.onError(err.message));
      });
      this.dirButtons.set(action, button);
      pad.appendChild(button);
    }
    body.appendChild(el("div", "pad-label", "advise next move"));
    body.appendChild(pad);

    const rewardRow = el("div", "slider-row");
    rewardRow.appendChild(el("span", "slider-label", "reward"));
    this.rewardSlider = el("input") as HTMLInputElement;
    this.rewardSlider.type = "range";
    this.rewardSlider.min = "-30";
    this.rewardSlider.max = "30";
    this.rewardSlider.step = "1";
    this.rewardSlider.value = "0";
    this.rewardValue = el("span", "slider-value", "0");
    this.rewardSlider.addEventListener("input", () => {
      this.rewardValue.textContent = this.rewardSlider.value;
    });
    rewardRow.append(this.rewardSlider, this.rewardValue);
    body.appendChild(rewardRow);

    const rewardButtons = el("div", "button-row");
    this.rewardSubmit = el("button", "control", "override reward");
    this.rewardSubmit.addEventListener("click", () => {
      this.api.overrideReward(Number(this.rewardSlider.value)).catch((err) => this.onError(err.message));
    });
    this.rewardConfirm = el("button", "control", "keep automatic");
    this.rewardConfirm.addEventListener("click", () => {
      this.api.confirmReward().catch((err) => this.onError(err.message));
    });
    rewardButtons.append(this.rewardSubmit, this.rewardConfirm);
    body.appendChild(rewardButtons);
  }

  render(model: ClientModel): void {
    this.modeButton.dataset.mode = model.mode;
    this.modeButton.textContent =
      model.mode === "manual" ? "switch to automatic" : "switch to manual";

    const lit = highlightedPhase(model);
    for (const [phase, box] of this.phaseBoxes) {
      box.classList.toggle("highlighted", phase === lit);
      box.classList.toggle("current", phase === model.phase);
    }

    for (const { action, enabled } of directionButtons(model)) {
      this.dirButtons.get(action)!.disabled = !enabled;
    }
    const rewardOn = rewardControlsEnabled(model);
    this.rewardSlider.disabled = !rewardOn;
    this.rewardSubmit.disabled = !rewardOn;
    this.rewardConfirm.disabled = !rewardOn;

    const kind = awaiting(model);
    this.modeButton.title = kind ? `waiting for ${kind}` : "";
  }
}
