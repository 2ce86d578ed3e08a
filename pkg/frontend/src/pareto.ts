// Pareto panel view model. Front membership, dominance relations and every
// displayed cost come verbatim from the server payload; the client computes
// nothing beyond layout.

import type { ParetoPayload } from "./api.js";

export interface ScatterPoint {
  id: string;
  x: number;
  y: number;
  onFront: boolean;
  dimmed: boolean; // dominated strategies render dimmed
  selected: boolean;
}

export class ParetoPanel {
  constructor(private readonly payload: ParetoPayload) {}

  get frontIds(): string[] {
    return this.payload.front.members;
  }

  get selected(): string {
    return this.payload.selected;
  }

  get strategyIds(): string[] {
    return Object.keys(this.payload.strategies).sort();
  }

  criteria(): string[] {
    const first = Object.values(this.payload.strategies)[0];
    return first ? first.criteria : [];
  }

  expected(strategyId: string): number[] {
    return this.payload.strategies[strategyId].expected;
  }

  coveredFraction(strategyId: string): number {
    return this.payload.strategies[strategyId].covered_fraction;
  }

  dominatedBy(strategyId: string): string[] {
    return this.payload.front.dominated_by[strategyId] ?? [];
  }

  // 2-D scatter over any two chosen criteria.
  scatter(critX: string, critY: string): ScatterPoint[] {
    const names = this.criteria();
    const ix = names.indexOf(critX);
    const iy = names.indexOf(critY);
    if (ix < 0 || iy < 0) {
      throw new Error(`unknown criteria ${critX}/${critY}, have ${names}`);
    }
    const front = new Set(this.frontIds);
    return this.strategyIds.map((id) => ({
      id,
      x: this.payload.strategies[id].expected[ix],
      y: this.payload.strategies[id].expected[iy],
      onFront: front.has(id),
      dimmed: !front.has(id),
      selected: id === this.payload.selected,
    }));
  }

  renderTable(): string[] {
    const names = this.criteria();
    const header = `strategy      ${names.map((n) => n.padStart(12)).join("")}  coverage`;
    const lines = [header];
    for (const id of this.strategyIds) {
      const s = this.payload.strategies[id];
      const mark = this.frontIds.includes(id)
        ? id === this.selected
          ? ">"
          : "*"
        : " ";
      lines.push(
        `${mark} ${id.padEnd(12)}` +
          s.expected.map((v) => String(v).padStart(12)).join("") +
          `  ${s.covered_fraction}`,
      );
    }
    return lines;
  }
}
