"""HTTP front end: register models, run sessions, fold in answers.

State lives in memory; pass `state_dir` to also write every model and
session to disk so a restarted service replays them back to the same
beliefs. All probability math stays on the server; clients only ever see
finished reports.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass
from pathlib import Path

from fastapi import Body, FastAPI, HTTPException

from monocat.dataio import ModelBundle, bundle_from_dict, model_to_dict
from monocat.errors import DuplicateAnswerError, MonocatError
from monocat.session import (
    SessionState,
    record_answer,
    report_to_dict,
    select_next,
    session_report,
    start_session,
)

DEFAULT_MODEL_ID = "default"


@dataclass
class _LiveSession:
    model_id: str
    state: SessionState


def _summary(model_id: str, bundle: ModelBundle) -> dict:
    model = bundle.model
    out = {
        "model_id": model_id,
        "num_skills": model.num_skills,
        "num_questions": model.num_questions,
        "max_score": model.max_score,
        "skills": [
            {"id": s.id, "num_states": s.num_states, "name": s.name} for s in model.skills
        ],
        "questions": [
            {"id": q.id, "num_states": q.num_states, "points": list(q.points), "label": q.label}
            for q in model.questions
        ],
        "grade_scale": None,
    }
    if bundle.scale is not None:
        out["grade_scale"] = {
            "bounds": [list(b) for b in bundle.scale.bounds],
            "labels": list(bundle.scale.labels),
        }
    return out


def create_app(initial: ModelBundle | None = None, state_dir: str | None = None) -> FastAPI:
    """Build the application; `initial` is registered under the id "default"."""
    app = FastAPI(title="monocat", version="0.1.0")
    models: dict[str, ModelBundle] = {}
    sessions: dict[str, _LiveSession] = {}
    root = Path(state_dir) if state_dir else None

    # -- persistence helpers -------------------------------------------------

    def persist_model(model_id: str, bundle: ModelBundle) -> None:
        if root is None:
            return
        path = root / "models"
        path.mkdir(parents=True, exist_ok=True)
        doc = model_to_dict(bundle.model, bundle.scale)
        (path / f"{model_id}.json").write_text(json.dumps(doc))

    def persist_session(session_id: str, live: _LiveSession) -> None:
        if root is None:
            return
        path = root / "sessions"
        path.mkdir(parents=True, exist_ok=True)
        doc = {
            "model_id": live.model_id,
            "answers": [[q, a] for q, a in live.state.answers],
        }
        (path / f"{session_id}.json").write_text(json.dumps(doc))

    def restore() -> None:
        if root is None:
            return
        model_dir = root / "models"
        if model_dir.is_dir():
            for path in sorted(model_dir.glob("*.json")):
                raw = json.loads(path.read_text())
                models[path.stem] = bundle_from_dict(raw)
        session_dir = root / "sessions"
        if session_dir.is_dir():
            for path in sorted(session_dir.glob("*.json")):
                doc = json.loads(path.read_text())
                bundle = models.get(doc["model_id"])
                if bundle is None:
                    continue
                state = start_session(bundle.model)
                for question, answer in doc["answers"]:
                    state = record_answer(state, int(question), int(answer))
                sessions[path.stem] = _LiveSession(model_id=doc["model_id"], state=state)

    restore()
    if initial is not None and DEFAULT_MODEL_ID not in models:
        models[DEFAULT_MODEL_ID] = initial
        persist_model(DEFAULT_MODEL_ID, initial)

    # -- lookup and payload helpers ------------------------------------------

    def get_bundle(model_id: str) -> ModelBundle:
        if model_id not in models:
            raise HTTPException(status_code=404, detail=f"no model {model_id!r}")
        return models[model_id]

    def get_session(session_id: str) -> _LiveSession:
        if session_id not in sessions:
            raise HTTPException(status_code=404, detail=f"no session {session_id!r}")
        return sessions[session_id]

    def check_options(variant: str, mass: float) -> None:
        if variant not in ("A", "B"):
            raise HTTPException(status_code=400, detail=f"variant must be A or B, got {variant!r}")
        if not 0.0 < mass <= 1.0:
            raise HTTPException(status_code=400, detail=f"mass must be in (0, 1], got {mass}")

    def session_payload(session_id: str, live: _LiveSession, variant: str, mass: float) -> dict:
        bundle = models[live.model_id]
        report = session_report(live.state, scale=bundle.scale, mass=mass, variant=variant)
        doc = report_to_dict(report)
        return {
            "session_id": session_id,
            "model_id": live.model_id,
            "steps": [[q, a] for q, a in live.state.answers],
            "report": doc,
            "next_question": select_next(live.state),
            "complete": live.state.complete,
        }

    # -- routes --------------------------------------------------------------

    @app.get("/health")
    def health():
        return {"status": "ok", "models": len(models), "sessions": len(sessions)}

    @app.get("/models")
    def list_models():
        return {"models": [_summary(mid, b) for mid, b in sorted(models.items())]}

    @app.post("/models", status_code=201)
    def register_model(doc: dict = Body(...)):
        try:
            bundle = bundle_from_dict(doc)
        except MonocatError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        model_id = uuid.uuid4().hex
        models[model_id] = bundle
        persist_model(model_id, bundle)
        return _summary(model_id, bundle)

    @app.get("/models/{model_id}")
    def model_info(model_id: str):
        return _summary(model_id, get_bundle(model_id))

    @app.post("/models/{model_id}/sessions", status_code=201)
    def create_session(model_id: str, variant: str = "B", mass: float = 0.95):
        check_options(variant, mass)
        bundle = get_bundle(model_id)
        try:
            state = start_session(bundle.model)
        except MonocatError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        session_id = uuid.uuid4().hex
        live = _LiveSession(model_id=model_id, state=state)
        sessions[session_id] = live
        persist_session(session_id, live)
        return session_payload(session_id, live, variant, mass)

    @app.get("/sessions/{session_id}")
    def session_info(session_id: str, variant: str = "B", mass: float = 0.95):
        check_options(variant, mass)
        return session_payload(session_id, get_session(session_id), variant, mass)

    @app.post("/sessions/{session_id}/answers")
    def post_answer(
        session_id: str, payload: dict = Body(...), variant: str = "B", mass: float = 0.95
    ):
        check_options(variant, mass)
        live = get_session(session_id)
        if not isinstance(payload, dict) or "question" not in payload or "state" not in payload:
            raise HTTPException(
                status_code=400, detail='body must be {"question": int, "state": int}'
            )
        try:
            question, answer = int(payload["question"]), int(payload["state"])
        except (TypeError, ValueError):
            raise HTTPException(status_code=400, detail="question and state must be integers") from None
        try:
            live.state = record_answer(live.state, question, answer)
        except DuplicateAnswerError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except MonocatError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        persist_session(session_id, live)
        return session_payload(session_id, live, variant, mass)

    return app
