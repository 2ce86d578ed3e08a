"""Record HTTP API fixtures for the console snapshot tests.

Runs a scripted session against an in-process service and dumps every
response verbatim into test/fixtures/. Re-run after server changes:

    python3 scripts/record_fixtures.py
"""

import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from emberplan.config import config_from_document
from emberplan.server import ServiceState, create_app

CONFIG = {
    "grid": {"nrows": 9, "ncols": 9, "cellsize": 10.0},
    "params": {"p0": 0.3, "cw": 1.0, "tau_burn": 1},
    "forcing": {"members": [
        {"id": "east", "u": 2.0, "v": 0.0, "weight": 1.0},
        {"id": "west", "u": -2.0, "v": 0.0, "weight": 1.0},
    ], "steps": 8},
    "horizon": {"t_begin": 0, "t_now": 0, "t_end": 4},
    "templates": {"col_offsets": [1, 2], "kappa_fb": 1.0},
    "budget_eur": 50.0,
    "weights": [1.0, 1.0, 0.001],
    "variant": "DETERMINISTIC_THRESHOLD",
    "seed": 7,
    "deadline_s": 60.0,
    "workers": 2,
    "ignitions": [[4, 4]],
}

FIXTURES = Path(__file__).resolve().parent.parent / "test" / "fixtures"


def dump(name, payload):
    if isinstance(payload, str):
        (FIXTURES / name).write_text(payload)
    else:
        (FIXTURES / name).write_text(json.dumps(payload, indent=2) + "\n")
    print(f"wrote {name}")


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        state = ServiceState(config_from_document(CONFIG), tmp)
        client = TestClient(create_app(state))

        reports = "\n".join(json.dumps(r) for r in [
            {"id": "r1", "t": 0.0, "x": 45.0, "y": 45.0, "sigma_m": 15.0,
             "phenomenon": "smoke", "confidence": 0.9},
            {"id": "r2", "t": 1.0, "x": 60.0, "y": 40.0, "sigma_m": 10.0,
             "phenomenon": "flame", "confidence": 0.7},
            {"id": "r3", "t": 2.0, "x": 20.0, "y": 20.0, "sigma_m": 25.0,
             "phenomenon": "smoke", "confidence": 0.4},
        ])
        client.post("/api/reports", content=reports)
        dump("reports_pending.json", client.get(
            "/api/reports", params={"status": "PENDING"}).json())

        client.post("/api/reports/r1/review",
                    json={"decision": "ACCEPT", "reviewer": "ops"})
        dump("reports_after_accept.json", client.get(
            "/api/reports", params={"status": "PENDING"}).json())

        sid = client.post("/api/sessions",
                          json={"session_id": "ops-1"}).json()["session_id"]
        dump("session_before_plan.json", client.get(f"/api/sessions/{sid}").json())

        run = client.post(f"/api/sessions/{sid}/replan",
                          json={"trigger": "NEW_EVIDENCE"}).json()["run_id"]
        dump("session_after_plan.json", client.get(f"/api/sessions/{sid}").json())
        dump("progress.json", client.get(f"/api/runs/{run}/progress").json())
        pareto = client.get(f"/api/runs/{run}/pareto").json()
        dump("pareto.json", pareto)
        dump("belief.asc", client.get("/api/belief.asc").text)
        dump("state_t0.asc", client.get(f"/api/state/{run}/s0000/0.asc").text)
        dump("state_t4.asc", client.get(f"/api/state/{run}/s0000/4.asc").text)

        client.post(f"/api/sessions/{sid}/commit",
                    json={"strategy_id": pareto["selected"]})
        dump("session_after_commit.json",
             client.get(f"/api/sessions/{sid}").json())
        dump("events.json", client.get("/api/events",
                                       params={"since": 0}).json())


if __name__ == "__main__":
    main()
