import { describe, expect, it } from "vitest";
import { ApiClient, type ReportDoc, type SessionDoc } from "../src/api.js";
import { ReviewQueueView, queueRows, renderQueue } from "../src/reports.js";
import { StubTransport, fixtureJson } from "./helpers.js";

const pending = fixtureJson<{ reports: ReportDoc[] }>("reports_pending.json");
const afterAccept = fixtureJson<{ reports: ReportDoc[] }>(
  "reports_after_accept.json",
);

function makeView(): { view: ReviewQueueView; stub: StubTransport } {
  const stub = new StubTransport();
  stub
    .on("GET /api/reports?status=PENDING", pending)
    .on("GET /api/reports?status=PENDING", afterAccept)
    .on("POST /api/reports/r1/review", { ...pending.reports[0], status: "ACCEPTED" });
  const view = new ReviewQueueView(new ApiClient(stub.baseUrl, stub.fetch));
  return { view, stub };
}

describe("ReviewQueueView", () => {
  it("shows the server's pending listing verbatim", async () => {
    const { view } = makeView();
    const rows = await view.refresh();
    expect(rows.map((r) => r.id)).toEqual(["r1", "r2", "r3"]);
    expect(rows.map((r) => r.status)).toEqual([
      "PENDING",
      "PENDING",
      "PENDING",
    ]);
  });

  it("accepting a report removes it from the queue via a server refresh", async () => {
    const { view, stub } = makeView();
    await view.refresh();
    const rows = await view.review("r1", "ACCEPT", "duty-officer");
    expect(rows.map((r) => r.id)).toEqual(["r2", "r3"]);
    expect(view.pending.map((r) => r.id)).toEqual(["r2", "r3"]);
    // the post went out before the re-listing: no optimistic removal
    expect(stub.calls).toEqual([
      "GET /api/reports?status=PENDING",
      "POST /api/reports/r1/review",
      "GET /api/reports?status=PENDING",
    ]);
  });

  it("the belief generation shown advances after the update lands", () => {
    const before = fixtureJson<SessionDoc>("session_before_plan.json");
    const after = fixtureJson<SessionDoc>("session_after_plan.json");
    expect(after.belief_generation).toBeGreaterThan(before.belief_generation);
  });

  it("renders queue rows from the recorded listing verbatim", () => {
    const rows = queueRows(pending.reports);
    expect(renderQueue(rows).join("\n")).toMatchSnapshot();
    expect(renderQueue([])).toEqual(["(queue empty)"]);
  });
});
