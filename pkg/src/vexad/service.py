"""HTTP/JSON service exposing interactive annotation sessions.

A thin adapter over the session module: every behavior is defined there,
the service only validates requests, serializes state, and keeps one
exclusive lock per session so concurrent submissions cannot double-train.
Sessions are persisted to <data_dir>/<session_id>.json on every mutation
and lazily reloaded after a restart.
"""

from __future__ import annotations

import os
import secrets
import threading
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from .dataset import Dataset
from .display import ObjectiveWeights
from .metrics import auc
from .scorer import TrainConfig
from .session import (LabelValidationError, Session, SessionConfig,
                      SessionError, WrongPhaseError)

DEFAULT_DATA_DIR = "./vexad_data"


class ApiError(Exception):
    """Carried to the client as {"code": ..., "message": ...}."""

    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _projector(features: np.ndarray):
    """Top-2 principal directions, sign-fixed, for the UI's feature glyphs."""
    mean = features.mean(axis=0)
    centered = features - mean
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    comps = vt[:2] if vt.shape[0] >= 2 else np.vstack([vt, np.zeros_like(vt[:1])])
    for i in range(2):
        j = int(np.argmax(np.abs(comps[i])))
        if comps[i, j] < 0:
            comps[i] = -comps[i]

    def project(x: np.ndarray) -> list[float]:
        p = (x - mean) @ comps.T
        return [float(p[0]), float(p[1])]

    return project


def _parse_config(body: dict, dataset_ref: str) -> SessionConfig:
    if not isinstance(body, dict):
        raise ApiError(400, "bad_request", "config must be a JSON object")
    try:
        weights = ObjectiveWeights(**body.get("weights", {}))
        train_cfg = TrainConfig(**body.get("train_cfg", {}))
        known = {"strategy", "display_size", "budget", "epsilon", "maxiter",
                 "seed", "split_seed"}
        unknown = set(body) - known - {"weights", "train_cfg"}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {k: body[k] for k in known if k in body}
        return SessionConfig(weights=weights, train_cfg=train_cfg,
                             dataset=dataset_ref, **kwargs)
    except (TypeError, ValueError) as exc:
        raise ApiError(400, "bad_request", str(exc))


def create_app(ds: Dataset, data_dir=None, ui_dir=None, dataset_ref: str = "") -> FastAPI:
    app = FastAPI(title="vexad annotation service")
    storage = Path(data_dir or os.environ.get("VEXAD_DATA_DIR", DEFAULT_DATA_DIR))
    storage.mkdir(parents=True, exist_ok=True)
    project = _projector(ds.feature_matrix())

    sessions: dict[str, Session] = {}
    locks: dict[str, threading.Lock] = {}
    registry_lock = threading.Lock()

    def persist(sid: str, session: Session) -> None:
        session.save_state(storage / f"{sid}.json")

    def get_session(sid: str) -> tuple[Session, threading.Lock]:
        with registry_lock:
            if sid in sessions:
                return sessions[sid], locks[sid]
        path = storage / f"{sid}.json"
        if path.exists():
            try:
                import json as _json
                session = Session.from_json(
                    _json.loads(path.read_text(encoding="utf-8")), ds)
            except (SessionError, ValueError, KeyError) as exc:
                raise ApiError(404, "not_found", f"session {sid} cannot be restored: {exc}")
            with registry_lock:
                sessions.setdefault(sid, session)
                lock = locks.setdefault(sid, threading.Lock())
            return sessions[sid], lock
        raise ApiError(404, "not_found", f"no session {sid}")

    def display_items(session: Session) -> list[dict]:
        items = []
        for sid in session.current_display:
            sample = session.dataset.samples[sid]
            item = {
                "id": sample.id,
                "features": [float(v) for v in sample.features],
                "coords": project(sample.features),
            }
            if sample.pixels_before is not None:
                item["pixels_a"] = sample.pixels_before.astype(int).tolist()
                item["pixels_b"] = sample.pixels_after.astype(int).tolist()
            items.append(item)
        return items

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message})

    @app.exception_handler(RequestValidationError)
    async def handle_validation(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400,
                            content={"code": "bad_request", "message": str(exc)})

    @app.get("/healthz")
    def healthz():
        return PlainTextResponse("ok")

    @app.post("/api/sessions", status_code=201)
    def create_session(body: dict):
        config = _parse_config(body, dataset_ref)
        try:
            session = Session(config, ds)
        except ValueError as exc:
            raise ApiError(400, "bad_request", str(exc))
        sid = secrets.token_hex(16)
        with registry_lock:
            sessions[sid] = session
            locks[sid] = threading.Lock()
        persist(sid, session)
        return {"session_id": sid, "display": display_items(session)}

    @app.get("/api/sessions/{sid}")
    def get_state(sid: str):
        session, _ = get_session(sid)
        state = session.to_json()
        state.pop("rng_state", None)
        state["session_id"] = sid
        return state

    @app.get("/api/sessions/{sid}/display")
    def get_display(sid: str):
        session, _ = get_session(sid)
        if session.phase != "awaiting_labels":
            raise ApiError(409, "wrong_phase", f"session is {session.phase}")
        return {"iteration": session.t, "of": session.config.budget,
                "display": display_items(session)}

    @app.post("/api/sessions/{sid}/labels")
    def post_labels(sid: str, body: dict):
        session, lock = get_session(sid)
        entries = body.get("labels") if isinstance(body, dict) else None
        if not isinstance(entries, list) or not all(
                isinstance(e, dict) and "id" in e and "label" in e for e in entries):
            raise ApiError(400, "bad_request",
                           'body must be {"labels": [{"id": int, "label": -1|1}, ...]}')
        labels = {int(e["id"]): int(e["label"]) for e in entries}
        with lock:
            try:
                session.submit_labels(labels)
            except WrongPhaseError as exc:
                raise ApiError(409, "wrong_phase", str(exc))
            except LabelValidationError as exc:
                raise ApiError(409, "validation", str(exc))
            persist(sid, session)
            finished = session.phase == "finished"
            return {
                "finished": finished,
                "display": None if finished else display_items(session),
                "metrics": [dict(m) for m in session.metrics],
            }

    @app.get("/api/sessions/{sid}/report")
    def get_report(sid: str):
        session, _ = get_session(sid)
        records = [dict(m) for m in session.metrics]
        return {"records": records,
                "auc": auc([m["eer"] for m in records]) if records else None}

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
