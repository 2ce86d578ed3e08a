// Review queue view model: renders the server's report listing verbatim and
// posts review decisions. The queue state shown is always a server payload,
// never a local prediction (optimistic updates disabled).

import type { ApiClient, ReportDoc } from "./api.js";

export interface QueueRow {
  id: string;
  position: number;
  phenomenon: string;
  location: string;
  sigmaM: number;
  confidence: number;
  status: string;
}

export function queueRows(reports: ReportDoc[]): QueueRow[] {
  return reports.map((r, i) => ({
    id: r.id,
    position: i,
    phenomenon: r.phenomenon,
    location: `(${r.x}, ${r.y})`,
    sigmaM: r.sigma_m,
    confidence: r.confidence,
    status: r.status,
  }));
}

export function renderQueue(rows: QueueRow[]): string[] {
  if (rows.length === 0) return ["(queue empty)"];
  return rows.map(
    (r) =>
      `${String(r.position).padStart(3)} ${r.id.padEnd(10)} ` +
      `${r.phenomenon.padEnd(8)} ${r.location.padEnd(16)} ` +
      `sigma=${r.sigmaM}m conf=${r.confidence} ${r.status}`,
  );
}

export class ReviewQueueView {
  private rows: QueueRow[] = [];

  constructor(private readonly client: ApiClient) {}

  get pending(): QueueRow[] {
    return this.rows;
  }

  async refresh(): Promise<QueueRow[]> {
    const { reports } = await this.client.listReports("PENDING");
    this.rows = queueRows(reports);
    return this.rows;
  }

  // Posts the decision, then refreshes from the server; the report leaves
  // the pending view only once the server says so.
  async review(
    reportId: string,
    decision: "ACCEPT" | "REJECT",
    reviewer: string,
  ): Promise<QueueRow[]> {
    await this.client.review(reportId, decision, reviewer);
    return this.refresh();
  }
}
