// Typed client over the planning service HTTP API. The console performs no
// cost or dominance computation of its own: every payload is passed through
// verbatim to the view layer.

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export type ReportStatus = "PENDING" | "ACCEPTED" | "REJECTED";

export interface ReportDoc {
  id: string;
  t: number;
  x: number;
  y: number;
  sigma_m: number;
  phenomenon: string;
  confidence: number;
  status: ReportStatus;
}

export interface StrategyDoc {
  expected: number[];
  criteria: string[];
  covered_fraction: number;
  low_confidence: boolean;
  resource_cost: number;
  per_scenario: Record<string, number[]>;
}

export interface ParetoPayload {
  front: {
    members: string[];
    dominated_by: Record<string, string[]>;
  };
  selected: string;
  strategies: Record<string, StrategyDoc>;
}

export interface SessionDoc {
  session_id: string;
  horizon: { t_begin: number; t_now: number; t_end: number };
  committed: string | null;
  belief_generation: number;
  runs: string[];
}

export interface ProgressDoc {
  completed: number;
  total: number;
  elapsed_s: number;
  status: string;
  per_strategy: Record<string, [number, number]>;
}

export interface ApiEvent {
  seq: number;
  ts: number;
  kind: string;
  payload: Record<string, unknown>;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly body: string,
  ) {
    super(`HTTP ${status}: ${body}`);
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, init);
    const text = await resp.text();
    if (!resp.ok) throw new ApiError(resp.status, text);
    return JSON.parse(text) as T;
  }

  private async requestText(path: string): Promise<string> {
    const resp = await this.fetchFn(this.baseUrl + path);
    const text = await resp.text();
    if (!resp.ok) throw new ApiError(resp.status, text);
    return text;
  }

  listReports(status?: ReportStatus): Promise<{ reports: ReportDoc[] }> {
    const qs = status ? `?status=${status}` : "";
    return this.request(`/api/reports${qs}`);
  }

  ingestReports(ndjson: string): Promise<{ ids: string[] }> {
    return this.request("/api/reports", { method: "POST", body: ndjson });
  }

  review(
    reportId: string,
    decision: "ACCEPT" | "REJECT",
    reviewer: string,
  ): Promise<ReportDoc> {
    return this.request(`/api/reports/${reportId}/review`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ decision, reviewer }),
    });
  }

  beliefRaster(): Promise<string> {
    return this.requestText("/api/belief.asc");
  }

  stateRaster(runId: string, scenarioId: string, t: number): Promise<string> {
    return this.requestText(`/api/state/${runId}/${scenarioId}/${t}.asc`);
  }

  getSession(sessionId: string): Promise<SessionDoc> {
    return this.request(`/api/sessions/${sessionId}`);
  }

  replan(
    sessionId: string,
    trigger: "NEW_EVIDENCE" | "TIMER" | "OPERATOR",
  ): Promise<{ run_id: string }> {
    return this.request(`/api/sessions/${sessionId}/replan`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ trigger }),
    });
  }

  pareto(runId: string): Promise<ParetoPayload> {
    return this.request(`/api/runs/${runId}/pareto`);
  }

  progress(runId: string): Promise<ProgressDoc> {
    return this.request(`/api/runs/${runId}/progress`);
  }

  commit(sessionId: string, strategyId: string): Promise<SessionDoc> {
    return this.request(`/api/sessions/${sessionId}/commit`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ strategy_id: strategyId }),
    });
  }

  events(since: number, waitS = 0): Promise<{ events: ApiEvent[] }> {
    return this.request(`/api/events?since=${since}&wait_s=${waitS}`);
  }
}
