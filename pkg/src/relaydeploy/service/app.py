"""FastAPI deployment-assistant service wrapping the core package."""
from __future__ import annotations

import os
import uuid
from datetime import datetime, timezone

from fastapi import FastAPI, HTTPException, Response
from fastapi.middleware.cors import CORSMiddleware

from ..errors import ConfigError, InfeasibleConstraintsError
from . import sessions as eng
from .schemas import (MeasurementIn, PlacementIn, PlacementOut, RecommendationOut,
                      SessionBriefOut, SessionCreateIn, SessionListOut)
from .store import SessionStore

DATA_DIR_ENV = "RELAYDEPLOY_DATA"


def _now():
    return datetime.now(timezone.utc).isoformat()


class SessionManager:
    """One logical writer per session; documents cached in memory."""

    def __init__(self, data_dir):
        self.store = SessionStore(data_dir)
        self.docs: dict[str, dict] = {}
        self.recover()

    def recover(self):
        for sid in self.store.list_ids():
            events = self.store.read_events(sid)
            snap = self.store.read_snapshot(sid)
            doc = None
            applied = 0
            if snap is not None:
                doc, applied = snap["doc"], snap["applied_events"]
            for event in events[applied:]:
                doc = self._apply(doc, event)
                applied += 1
            if doc is not None:
                self.docs[sid] = doc
                self.store.write_snapshot(sid, {"doc": doc, "applied_events": applied})

    @staticmethod
    def _apply(doc, event):
        op, data = event["op"], event["data"]
        if op == "create":
            return eng.create_session(data["config"], data["id"], data["at"])
        ctx = eng.SessionContext(doc["config"])
        if op == "measure":
            doc, _ = eng.apply_measurement(ctx, doc, data["location"], data["readings"])
        elif op == "confirm":
            doc, _ = eng.apply_placement(ctx, doc, data["u_steps"], data["gamma_dbm"],
                                         data["q_out"], data["override"])
        else:
            raise ValueError(f"unknown event op {op!r}")
        doc["version"] += 1
        doc["updated_at"] = data["at"]
        return doc

    def _persist(self, sid, doc, event):
        events = self.store.read_events(sid)
        event = {"seq": len(events) + 1, **event}
        self.store.append_event(sid, event)
        self.store.write_snapshot(sid, {"doc": doc, "applied_events": event["seq"]})
        self.docs[sid] = doc

    def create(self, config: dict) -> dict:
        sid = uuid.uuid4().hex
        at = _now()
        doc = eng.create_session(config, sid, at)
        self._persist(sid, doc, {"op": "create",
                                 "data": {"config": config, "id": sid, "at": at}})
        return doc

    def get(self, sid) -> dict:
        doc = self.docs.get(sid)
        if doc is None:
            raise KeyError(sid)
        return doc

    def _check_version(self, doc, expected):
        if expected is not None and expected != doc["version"]:
            raise eng.ConflictError(
                f"session version is {doc['version']}, expected {expected}")

    def measure(self, sid, location, readings, expected_version=None):
        doc = dict(self.get(sid))
        self._check_version(doc, expected_version)
        ctx = eng.SessionContext(doc["config"])
        at = _now()
        doc, rec = eng.apply_measurement(ctx, doc, location, readings)
        doc["version"] += 1
        doc["updated_at"] = at
        self._persist(sid, doc, {"op": "measure",
                                 "data": {"location": location,
                                          "readings": list(readings), "at": at}})
        rec["session_version"] = doc["version"]
        return rec

    def confirm(self, sid, u_steps, gamma_dbm, q_out, override,
                expected_version=None):
        doc = dict(self.get(sid))
        self._check_version(doc, expected_version)
        ctx = eng.SessionContext(doc["config"])
        at = _now()
        doc, snapshot = eng.apply_placement(ctx, doc, u_steps, gamma_dbm, q_out, override)
        doc["version"] += 1
        doc["updated_at"] = at
        self._persist(sid, doc, {"op": "confirm",
                                 "data": {"u_steps": u_steps, "gamma_dbm": gamma_dbm,
                                          "q_out": q_out, "override": override,
                                          "at": at}})
        return doc, snapshot


def create_app(data_dir=None) -> FastAPI:
    data_dir = data_dir or os.environ.get(DATA_DIR_ENV, "./relaydeploy-data")
    app = FastAPI(title="relaydeploy assistant", version="0.1.0")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    manager = SessionManager(data_dir)
    app.state.manager = manager

    def _doc_or_404(sid):
        try:
            return manager.get(sid)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no session {sid!r}")

    @app.exception_handler(ConfigError)
    async def _config_error(request, exc):
        from fastapi.responses import JSONResponse
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(InfeasibleConstraintsError)
    async def _infeasible(request, exc):
        from fastapi.responses import JSONResponse
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(eng.ConflictError)
    async def _conflict(request, exc):
        from fastapi.responses import JSONResponse
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    def create_session(body: SessionCreateIn):
        doc = manager.create(body.model_dump(exclude_none=True))
        return doc

    @app.get("/sessions", response_model=SessionListOut)
    def list_sessions():
        briefs = [SessionBriefOut(id=d["id"], policy_kind=d["config"]["policy"]["kind"],
                                  mode=d["mode"], placements=len(d["history"]),
                                  version=d["version"], updated_at=d["updated_at"])
                  for d in manager.docs.values()]
        briefs.sort(key=lambda b: b.id)
        return SessionListOut(sessions=briefs)

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        return _doc_or_404(sid)

    @app.post("/sessions/{sid}/measurements", response_model=RecommendationOut)
    def submit_measurement(sid: str, body: MeasurementIn):
        _doc_or_404(sid)
        return manager.measure(sid, body.location, body.readings,
                               body.expected_version)

    @app.post("/sessions/{sid}/placements", response_model=PlacementOut)
    def confirm_placement(sid: str, body: PlacementIn):
        _doc_or_404(sid)
        doc, snapshot = manager.confirm(sid, body.u_steps, body.gamma_dbm,
                                        body.realized_outage, body.override,
                                        body.expected_version)
        return PlacementOut(session_version=doc["version"],
                            placements=len(doc["history"]),
                            learner=snapshot)

    @app.get("/sessions/{sid}/trace")
    def export_trace(sid: str):
        doc = _doc_or_404(sid)
        return Response(content=eng.session_trace_csv(doc), media_type="text/csv")

    return app
