// Event feed cursor. The console never processes seq n after n+1: batches
// are sorted, already-seen records dropped, and gaps rejected so a refresh
// can never replay state out of order.

import type { ApiClient, ApiEvent } from "./api.js";

export type EventHandler = (event: ApiEvent) => void;

export class EventCursorError extends Error {}

export class EventCursor {
  private seq = 0;
  private handlers: Map<string, EventHandler[]> = new Map();

  get lastSeq(): number {
    return this.seq;
  }

  on(kind: string, handler: EventHandler): void {
    const list = this.handlers.get(kind) ?? [];
    list.push(handler);
    this.handlers.set(kind, list);
  }

  // Returns the events actually processed, in seq order.
  apply(batch: ApiEvent[]): ApiEvent[] {
    const fresh = batch
      .filter((e) => e.seq > this.seq)
      .sort((a, b) => a.seq - b.seq);
    const processed: ApiEvent[] = [];
    for (const event of fresh) {
      if (event.seq !== this.seq + 1) {
        throw new EventCursorError(
          `sequence gap: got ${event.seq}, cursor at ${this.seq}`,
        );
      }
      for (const handler of this.handlers.get(event.kind) ?? []) {
        handler(event);
      }
      this.seq = event.seq;
      processed.push(event);
    }
    return processed;
  }

  async poll(client: ApiClient, waitS = 0): Promise<ApiEvent[]> {
    const { events } = await client.events(this.seq, waitS);
    return this.apply(events);
  }
}

export function findCommits(events: ApiEvent[]): ApiEvent[] {
  return events.filter((e) => e.kind === "STRATEGY_COMMITTED");
}
