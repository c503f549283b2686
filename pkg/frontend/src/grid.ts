/** SVG grid: maze structure plus the three optional information layers. */

import { colorForQ } from "./colormap";
import { DELTAS, isWall } from "./legality";
import { ClientModel, qBounds, TrajectoryStep } from "./model";
import { arrowsForCell, robotCell, visitLabelsForCell } from "./viewmodel";
import { ActionName } from "./types";

export interface LayerFlags {
  learningExperience: boolean;
  visitedCounts: boolean;
  pastTrajectory: boolean;
}

export type SliceChoice = "follow" | "before" | "after";

const CELL = 110;
const PAD = 14;
const SVG_NS = "http://www.w3.org/2000/svg";

// arrow geometry per direction: offset from cell center and rotation
const ARROW_LAYOUT: Record<ActionName, { dx: number; dy: number; rot: number }> = {
  up: { dx: 0, dy: -32, rot: 0 },
  down: { dx: 0, dy: 32, rot: 180 },
  left: { dx: -32, dy: 0, rot: 270 },
  right: { dx: 32, dy: 0, rot: 90 },
};

export class GridView {
  private svg: SVGSVGElement;
  private animationTimer: number | null = null;
  private animationStep = 0;
  private animatedEpisode: number | null = null;

  constructor(private root: HTMLElement) {
    this.svg = document.createElementNS(SVG_NS, "svg");
    this.root.appendChild(this.svg);
  }

  render(model: ClientModel, layers: LayerFlags, slice: SliceChoice): void {
    const { width, height } = model.config;
    this.svg.setAttribute("width", String(width * CELL + 2 * PAD));
    this.svg.setAttribute("height", String(height * CELL + 2 * PAD));
    this.svg.replaceChildren();

    const flag =
      slice === "follow"
        ? model.currentState >= width * height
        : slice === "after";

    this.drawCells(model);
    if (layers.learningExperience) this.drawArrows(model, flag);
    if (layers.visitedCounts) this.drawVisits(model, flag);
    this.drawWalls(model);
    this.drawMarkers(model);
    this.drawRobot(model);
    if (layers.pastTrajectory) {
      this.ensureAnimation(model);
      this.drawTrajectory(model);
    } else {
      this.stopAnimation();
    }
  }

  private cellOrigin(row: number, col: number): { x: number; y: number } {
    return { x: PAD + col * CELL, y: PAD + row * CELL };
  }

  private drawCells(model: ClientModel): void {
    for (let row = 0; row < model.config.height; row++) {
      for (let col = 0; col < model.config.width; col++) {
        const { x, y } = this.cellOrigin(row, col);
        const rect = this.el("rect", {
          x, y, width: CELL, height: CELL,
          class: "cell",
        });
        this.svg.appendChild(rect);
      }
    }
  }

  private drawWalls(model: ClientModel): void {
    for (const [a, b] of model.config.walls) {
      // the wall sits on the shared edge of the two cells
      const [ar, ac] = a;
      const [br, bc] = b;
      let x1: number, y1: number, x2: number, y2: number;
      if (ar === br) {
        const col = Math.max(ac, bc);
        const { x, y } = this.cellOrigin(ar, col);
        [x1, y1, x2, y2] = [x, y, x, y + CELL];
      } else {
        const row = Math.max(ar, br);
        const { x, y } = this.cellOrigin(row, ac);
        [x1, y1, x2, y2] = [x, y, x + CELL, y];
      }
      this.svg.appendChild(this.el("line", { x1, y1, x2, y2, class: "wall" }));
    }
  }

  private drawMarkers(model: ClientModel): void {
    const marks: [number, number, string, string][] = [
      [...model.config.start, "start", "S"],
      [...model.config.treasure, "treasure", "T"],
      [...model.config.exit, "exit", "E"],
    ];
    for (const [row, col, kind, label] of marks) {
      const { x, y } = this.cellOrigin(row, col);
      const text = this.el("text", {
        x: x + 10, y: y + 22, class: `marker marker-${kind}`,
      });
      text.textContent = label;
      this.svg.appendChild(text);
    }
  }

  private drawRobot(model: ClientModel): void {
    const { row, col } = robotCell(model);
    const { x, y } = this.cellOrigin(row, col);
    this.svg.appendChild(
      this.el("circle", {
        cx: x + CELL / 2, cy: y + CELL / 2, r: 14, class: "robot",
      }),
    );
  }

  private drawArrows(model: ClientModel, flag: boolean): void {
    const { min, max } = qBounds(model);
    for (let row = 0; row < model.config.height; row++) {
      for (let col = 0; col < model.config.width; col++) {
        const { x, y } = this.cellOrigin(row, col);
        const cx = x + CELL / 2;
        const cy = y + CELL / 2;
        for (const arrow of arrowsForCell(model, row, col, flag)) {
          const layout = ARROW_LAYOUT[arrow.action];
          const g = this.el("g", {
            transform: `translate(${cx + layout.dx}, ${cy + layout.dy}) rotate(${layout.rot})`,
          });
          const head = this.el("path", {
            d: "M 0 -12 L 9 8 L -9 8 Z",
            fill: colorForQ(arrow.value, min, max),
            class: "q-arrow",
          });
          const title = this.el("title", {});
          title.textContent = `${arrow.action}: ${arrow.value.toFixed(3)}`;
          head.appendChild(title);
          g.appendChild(head);
          this.svg.appendChild(g);
        }
      }
    }
  }

  private drawVisits(model: ClientModel, flag: boolean): void {
    for (let row = 0; row < model.config.height; row++) {
      for (let col = 0; col < model.config.width; col++) {
        const { x, y } = this.cellOrigin(row, col);
        const cx = x + CELL / 2;
        const cy = y + CELL / 2;
        for (const label of visitLabelsForCell(model, row, col, flag)) {
          const layout = ARROW_LAYOUT[label.action];
          const text = this.el("text", {
            x: cx + layout.dx * 1.45,
            y: cy + layout.dy * 1.45 + 4,
            class: "visit-count",
          });
          text.textContent = String(label.count);
          this.svg.appendChild(text);
        }
      }
    }
  }

  /** Replays the last episode step by step; wall hits pulse in place. */
  private ensureAnimation(model: ClientModel): void {
    if (model.lastTrajectoryEpisode === this.animatedEpisode) return;
    this.stopAnimation();
    this.animatedEpisode = model.lastTrajectoryEpisode;
    this.animationStep = 0;
    if (model.lastTrajectory.length > 0) {
      this.animationTimer = window.setInterval(() => {
        this.animationStep += 1;
        if (this.animationStep >= model.lastTrajectory.length) {
          this.animationStep = model.lastTrajectory.length;
          this.stopAnimation();
        }
      }, 350);
    }
  }

  private stopAnimation(): void {
    if (this.animationTimer !== null) {
      window.clearInterval(this.animationTimer);
      this.animationTimer = null;
    }
  }

  private drawTrajectory(model: ClientModel): void {
    const steps = model.lastTrajectory.slice(0, this.animationStep || model.lastTrajectory.length);
    for (const [i, step] of steps.entries()) {
      this.svg.appendChild(this.trajectoryMark(step, i === steps.length - 1));
    }
  }

  private trajectoryMark(step: TrajectoryStep, last: boolean): SVGElement {
    const from = this.cellOrigin(step.cell[0], step.cell[1]);
    const fx = from.x + CELL / 2;
    const fy = from.y + CELL / 2;
    if (step.event === "wall_hit") {
      // zero displacement: mark the bounce where it happened
      const [dr, dc] = DELTAS[step.action];
      return this.el("circle", {
        cx: fx + dc * 28, cy: fy + dr * 28, r: 7,
        class: `traj-bounce${last ? " traj-head" : ""}`,
      });
    }
    const to = this.cellOrigin(step.nextCell[0], step.nextCell[1]);
    return this.el("line", {
      x1: fx, y1: fy,
      x2: to.x + CELL / 2, y2: to.y + CELL / 2,
      class: `traj-line${last ? " traj-head" : ""}`,
    });
  }

  private el(tag: string, attrs: Record<string, string | number>): SVGElement {
    const node = document.createElementNS(SVG_NS, tag);
    for (const [key, value] of Object.entries(attrs)) {
      node.setAttribute(key, String(value));
    }
    return node;
  }
}
