// Console application state: active session, map selection, Pareto panel and
// the event cursor. State changes render only after server confirmation.

import { ApiClient, type SessionDoc } from "./api.js";
import { EventCursor } from "./events.js";
import { ParetoPanel } from "./pareto.js";
import { ReviewQueueView } from "./reports.js";

export type Overlay = "fire" | "belief";

export class ConsoleState {
  readonly queue: ReviewQueueView;
  readonly cursor = new EventCursor();
  session: SessionDoc | null = null;
  panel: ParetoPanel | null = null;
  scenarioId = "s0000";
  timeStep = 0;
  overlay: Overlay = "fire";
  private selected: string | null = null;

  constructor(readonly client: ApiClient) {
    this.queue = new ReviewQueueView(client);
  }

  // invariant: the selected strategy is always a member of the latest front
  get selectedStrategy(): string | null {
    return this.selected;
  }

  selectStrategy(strategyId: string): void {
    if (!this.panel) throw new Error("no plan loaded");
    if (!this.panel.frontIds.includes(strategyId)) {
      throw new Error(
        `strategy ${strategyId} is not on the front ${this.panel.frontIds}`,
      );
    }
    this.selected = strategyId;
  }

  async openSession(sessionId: string): Promise<SessionDoc> {
    this.session = await this.client.getSession(sessionId);
    const runs = this.session.runs;
    if (runs.length > 0) {
      await this.loadRun(runs[runs.length - 1]);
    }
    return this.session;
  }

  async loadRun(runId: string): Promise<ParetoPanel> {
    this.panel = new ParetoPanel(await this.client.pareto(runId));
    this.selected = this.panel.selected;
    return this.panel;
  }

  async replan(
    trigger: "NEW_EVIDENCE" | "TIMER" | "OPERATOR",
  ): Promise<ParetoPanel> {
    if (!this.session) throw new Error("no session open");
    const { run_id } = await this.client.replan(this.session.session_id, trigger);
    const panel = await this.loadRun(run_id);
    this.session = await this.client.getSession(this.session.session_id);
    return panel;
  }

  async commitSelected(): Promise<SessionDoc> {
    if (!this.session || !this.selected) throw new Error("nothing to commit");
    this.session = await this.client.commit(
      this.session.session_id,
      this.selected,
    );
    return this.session;
  }

  summaryBlock(): string[] {
    const lines: string[] = [];
    if (this.session) {
      lines.push(
        `session ${this.session.session_id} ` +
          `t=${this.session.horizon.t_now}/${this.session.horizon.t_end} ` +
          `belief gen ${this.session.belief_generation} ` +
          `committed ${this.session.committed ?? "-"}`,
      );
    }
    if (this.panel && this.selected) {
      lines.push(
        `selected ${this.selected} ` +
          `coverage ${this.panel.coveredFraction(this.selected)}`,
      );
    }
    lines.push(`event cursor at seq ${this.cursor.lastSeq}`);
    return lines;
  }
}
