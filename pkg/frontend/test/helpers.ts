// Test support: fixture loading and a scripted fetch stub. Fixtures under
// test/fixtures/ are recorded verbatim from the planning service.

import { readFileSync } from "node:fs";
import type { FetchLike } from "../src/api.js";

export function fixtureText(name: string): string {
  return readFileSync(new URL(`./fixtures/${name}`, import.meta.url), "utf8");
}

export function fixtureJson<T>(name: string): T {
  return JSON.parse(fixtureText(name)) as T;
}

interface Scripted {
  body: string;
  status: number;
}

// Routes fetch calls by "METHOD /path"; each key holds a queue of responses
// consumed in order, so a refresh after a mutation can see new state.
export class StubTransport {
  readonly calls: string[] = [];
  private routes = new Map<string, Scripted[]>();

  constructor(readonly baseUrl = "http://test") {}

  on(key: string, body: string | object, status = 200): this {
    const text = typeof body === "string" ? body : JSON.stringify(body);
    const queue = this.routes.get(key) ?? [];
    queue.push({ body: text, status });
    this.routes.set(key, queue);
    return this;
  }

  fetch: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const key = `${method} ${url.slice(this.baseUrl.length)}`;
    this.calls.push(key);
    const queue = this.routes.get(key);
    const next = queue && queue.length > 1 ? queue.shift() : queue?.[0];
    if (!next) {
      return new Response(JSON.stringify({ detail: `unscripted ${key}` }), {
        status: 404,
      });
    }
    return new Response(next.body, { status: next.status });
  };
}
