"""Event-sourced HTTP service for report triage and emergency planning.

All mutable state lives in one ServiceState owned by a single writer lock.
Every mutating request appends one or more event records to the on-disk log
before the state change is acknowledged, and the state is rebuilt from the log
alone on restart. The apply step is deterministic given the log, so a replayed
service reaches the same state digest as the live one.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import PlainTextResponse

from . import fire, fusion
from .config import RunConfig
from .eventlog import EventLog, EventRecord
from .fire import Trajectory
from .planner import (
    PlanningSession,
    PlanOutcome,
    ReplanTrigger,
    scenario_initial_state,
)
from .raster import format_ascii_grid


@dataclass
class RunRecord:
    run_id: str
    session_id: str
    trigger: str
    outcome: PlanOutcome | None = None
    trajectories: dict[str, Trajectory] = field(default_factory=dict)
    plan_doc: dict | None = None
    progress_doc: dict | None = None


class ServiceState:
    """Single-writer state machine backed by the event log."""

    def __init__(self, config: RunConfig, data_dir: str | Path):
        self.config = config
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.queue = fusion.ReviewQueue()
        self.belief = config.initial_belief()
        self.sessions: dict[str, PlanningSession] = {}
        self.runs: dict[str, RunRecord] = {}
        self.session_runs: dict[str, list[str]] = {}
        self.lock = threading.Lock()
        self.log = EventLog(self.data_dir / "events.ndjson")
        for rec in self.log.read_all():
            self._apply(rec)

    # ---- event application (the only place state changes) ----

    def emit(self, kind: str, payload: dict) -> EventRecord:
        """Append an event and apply it. Caller must hold the writer lock."""
        rec = self.log.append(kind, payload, timestamp=time.time())
        self._apply(rec)
        return rec

    def _apply(self, rec: EventRecord) -> None:
        p = rec.payload
        if rec.kind == "REPORT_INGESTED":
            d = p["report"]
            self.queue.ingest(fusion.CitizenReport(
                report_id=d["id"], timestamp=float(d["t"]),
                x=float(d["x"]), y=float(d["y"]), sigma=float(d["sigma_m"]),
                phenomenon=d.get("phenomenon", "unknown"),
                confidence=float(d["confidence"])))
        elif rec.kind == "REPORT_REVIEWED":
            self.queue.review(p["report_id"], p["decision"], p["reviewer"])
        elif rec.kind == "SESSION_CREATED":
            sid = p["session_id"]
            cfg = self.config
            self.sessions[sid] = PlanningSession(
                session_id=sid,
                context=cfg.context(),
                horizon=cfg.horizon,
                design=cfg.design(),
                observed=cfg.initial_fire_state(),
                belief=self.belief,
                queue=self.queue,
                templates=cfg.templates,
                budget_eur=cfg.budget_eur,
                policy=cfg.policy(),
                compute_budget=cfg.compute_budget(),
            )
            self.session_runs[sid] = []
        elif rec.kind == "RUN_STARTED":
            run = RunRecord(run_id=p["run_id"], session_id=p["session_id"],
                            trigger=p["trigger"])
            session = self.sessions[run.session_id]
            run.outcome = session.replan_on_event(ReplanTrigger(run.trigger))
            run.trajectories = self._selected_trajectories(session, run.outcome)
            self.belief = session.belief
            self.runs[run.run_id] = run
            self.session_runs[run.session_id].append(run.run_id)
        elif rec.kind == "BELIEF_UPDATED":
            pass   # informational; the belief changed during RUN_STARTED apply
        elif rec.kind == "RUN_PROGRESS":
            self.runs[p["run_id"]].progress_doc = p["progress"]
        elif rec.kind == "PLAN_COMPUTED":
            self.runs[p["run_id"]].plan_doc = p["outcome"]
        elif rec.kind == "STRATEGY_COMMITTED":
            session = self.sessions[p["session_id"]]
            run_id = self.session_runs[p["session_id"]][-1]
            outcome = self.runs[run_id].outcome
            session.commit(outcome.result.strategies[p["strategy_id"]])
        else:
            raise ValueError(f"unhandled event kind {rec.kind!r}")

    def _selected_trajectories(self, session: PlanningSession,
                               outcome: PlanOutcome) -> dict[str, Trajectory]:
        """Per-scenario trajectories of the selected strategy for map display."""
        ctx = session.context
        out = {}
        for scen in session.design.scenarios:
            params = ctx.params_for(scen)
            state0 = scenario_initial_state(session.observed, session.belief,
                                            params, ctx.ignition_top_k)
            out[scen.scenario_id] = fire.simulate(
                state0=state0,
                forcing=ctx.forcing_for(scen),
                params=params,
                variant=scen.variant,
                horizon=session.horizon.remaining,
                controls=list(outcome.selected.tail(session.horizon.t_now)),
                seed=scen.seed,
            )
        return out

    # ---- read model ----

    def report_docs(self, status: str | None = None) -> list[dict]:
        docs = [fusion.report_to_document(self.queue.reports[i])
                for i in self.queue.order]
        if status is not None:
            docs = [d for d in docs if d["status"] == status]
        return docs

    def session_doc(self, sid: str) -> dict:
        s = self.sessions[sid]
        return {
            "session_id": sid,
            "horizon": {"t_begin": s.horizon.t_begin, "t_now": s.horizon.t_now,
                        "t_end": s.horizon.t_end},
            "committed": s.committed.strategy_id if s.committed else None,
            "belief_generation": s.belief.generation,
            "runs": list(self.session_runs[sid]),
        }

    def digest(self) -> str:
        doc = {
            "reports": self.report_docs(),
            "belief": {"digest": self.belief.digest(),
                       "generation": self.belief.generation},
            "sessions": {sid: self.session_doc(sid)
                         for sid in sorted(self.sessions)},
            "runs": {rid: {"trigger": r.trigger, "session": r.session_id,
                           "plan": r.plan_doc, "progress": r.progress_doc}
                     for rid, r in sorted(self.runs.items())},
        }
        h = hashlib.blake2b(digest_size=16)
        h.update(json.dumps(doc, sort_keys=True).encode())
        return h.hexdigest()


def replay_state(config: RunConfig, data_dir: str | Path) -> ServiceState:
    """Rebuild service state purely from the log in data_dir."""
    return ServiceState(config, data_dir)


# --------------------------------------------------------------------------
# HTTP layer

def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="emberplan", docs_url=None, redoc_url=None)
    app.state.service = state

    def _session_or_404(sid: str) -> PlanningSession:
        if sid not in state.sessions:
            raise HTTPException(404, f"unknown session {sid!r}")
        return state.sessions[sid]

    @app.post("/api/reports", status_code=202)
    async def ingest_reports(request: Request):
        body = (await request.body()).decode()
        reports = []
        for lineno, line in enumerate(body.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                reports.append(fusion.report_from_ndjson_line(line))
            except (KeyError, ValueError) as exc:
                raise HTTPException(400, f"line {lineno}: {exc}")
        if not reports:
            raise HTTPException(400, "no reports in request body")
        with state.lock:
            seen = set(state.queue.reports)
            for r in reports:
                if r.report_id in seen:
                    raise HTTPException(409, f"duplicate report id {r.report_id!r}")
                seen.add(r.report_id)
            for r in reports:
                state.emit("REPORT_INGESTED",
                           {"report": fusion.report_to_document(r)})
        return {"ids": [r.report_id for r in reports]}

    @app.get("/api/reports")
    def list_reports(status: str | None = None):
        if status is not None and status not in [s.value for s in fusion.ReportStatus]:
            raise HTTPException(400, f"unknown status {status!r}")
        return {"reports": state.report_docs(status)}

    @app.post("/api/reports/{report_id}/review")
    async def review_report(report_id: str, request: Request):
        doc = await request.json()
        decision = doc.get("decision")
        reviewer = doc.get("reviewer")
        if decision not in ("ACCEPT", "REJECT") or not reviewer:
            raise HTTPException(400, "body must carry decision ACCEPT|REJECT and reviewer")
        with state.lock:
            if report_id not in state.queue.reports:
                raise HTTPException(404, f"unknown report {report_id!r}")
            if state.queue.reports[report_id].status is not fusion.ReportStatus.PENDING:
                raise HTTPException(409, f"report {report_id!r} already reviewed")
            state.emit("REPORT_REVIEWED", {"report_id": report_id,
                                           "decision": decision,
                                           "reviewer": reviewer})
            return fusion.report_to_document(state.queue.reports[report_id])

    @app.get("/api/belief.asc", response_class=PlainTextResponse)
    def belief_raster():
        return format_ascii_grid(state.belief.as_raster())

    @app.post("/api/sessions", status_code=201)
    async def create_session(request: Request):
        body = await request.body()
        doc = json.loads(body) if body else {}
        with state.lock:
            sid = doc.get("session_id") or f"sess-{len(state.sessions) + 1:04d}"
            if sid in state.sessions:
                raise HTTPException(409, f"session {sid!r} already exists")
            state.emit("SESSION_CREATED", {"session_id": sid})
        return {"session_id": sid}

    @app.get("/api/sessions/{sid}")
    def get_session(sid: str):
        _session_or_404(sid)
        return state.session_doc(sid)

    @app.post("/api/sessions/{sid}/replan", status_code=202)
    async def replan(sid: str, request: Request):
        doc = await request.json()
        try:
            trigger = ReplanTrigger(doc.get("trigger"))
        except ValueError:
            raise HTTPException(
                400, f"trigger must be one of {[t.value for t in ReplanTrigger]}")
        with state.lock:
            session = _session_or_404(sid)
            gen_before = session.belief.generation
            run_id = f"run-{len(state.runs) + 1:04d}"
            state.emit("RUN_STARTED", {"run_id": run_id, "session_id": sid,
                                       "trigger": trigger.value})
            run = state.runs[run_id]
            if session.belief.generation != gen_before:
                state.emit("BELIEF_UPDATED", {
                    "generation": session.belief.generation,
                    "incorporated": sorted(session.belief.incorporated)})
            state.emit("RUN_PROGRESS", {
                "run_id": run_id,
                "progress": run.outcome.result.progress.to_document()})
            state.emit("PLAN_COMPUTED", {"run_id": run_id,
                                         "outcome": run.outcome.to_document()})
        return {"run_id": run_id}

    @app.get("/api/runs/{run_id}/progress")
    def run_progress(run_id: str):
        if run_id not in state.runs:
            raise HTTPException(404, f"unknown run {run_id!r}")
        return state.runs[run_id].progress_doc

    @app.get("/api/runs/{run_id}/pareto")
    def run_pareto(run_id: str):
        if run_id not in state.runs:
            raise HTTPException(404, f"unknown run {run_id!r}")
        doc = state.runs[run_id].plan_doc
        return {"front": doc["front"], "selected": doc["selected"],
                "strategies": doc["plan"]["strategies"]}

    @app.post("/api/sessions/{sid}/commit")
    async def commit(sid: str, request: Request):
        doc = await request.json()
        strategy_id = doc.get("strategy_id")
        if not strategy_id:
            raise HTTPException(400, "body must carry strategy_id")
        with state.lock:
            _session_or_404(sid)
            if not state.session_runs[sid]:
                raise HTTPException(409, "no plan computed for this session yet")
            run = state.runs[state.session_runs[sid][-1]]
            front = run.outcome.front.members
            if strategy_id not in run.outcome.result.strategies:
                raise HTTPException(404, f"unknown strategy {strategy_id!r}")
            if strategy_id not in front:
                raise HTTPException(409, detail={
                    "error": f"strategy {strategy_id!r} is dominated",
                    "front": list(front)})
            state.emit("STRATEGY_COMMITTED", {"session_id": sid,
                                              "strategy_id": strategy_id})
            return state.session_doc(sid)

    @app.get("/api/state/{run_id}/{scenario_id}/{t}.asc",
             response_class=PlainTextResponse)
    def state_raster(run_id: str, scenario_id: str, t: int):
        if run_id not in state.runs:
            raise HTTPException(404, f"unknown run {run_id!r}")
        traj = state.runs[run_id].trajectories.get(scenario_id)
        if traj is None:
            raise HTTPException(404, f"unknown scenario {scenario_id!r}")
        for st in traj.states:
            if st.t == t:
                return format_ascii_grid(fire.state_raster(st), fmt="%d")
        raise HTTPException(404, f"no state at step {t} for run {run_id!r}")

    @app.get("/api/events")
    def events(since: int = 0, wait_s: float = 0.0):
        deadline = time.monotonic() + max(0.0, wait_s)
        while True:
            batch = state.log.read_since(since)
            if batch or time.monotonic() >= deadline:
                return {"events": [
                    {"seq": r.seq, "ts": r.timestamp, "kind": r.kind,
                     "payload": r.payload} for r in batch]}
            time.sleep(0.02)

    @app.get("/api/digest")
    def digest():
        return {"digest": state.digest(), "last_seq": state.log.last_seq}

    return app
