"""HTTP projection of the engine for the review UI.

Handlers hold no business logic: each endpoint parses the body, calls one
module operation, and returns its serialized result. Engine error codes map
onto HTTP statuses.
"""

from __future__ import annotations

from typing import Any

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import studio
from .core import (
    criterion_from_dict,
    criterion_to_dict,
    rubric_from_dict,
)
from .errors import (
    ConflictError,
    EngineError,
    IntegrityError,
    NotFoundError,
    PreconditionError,
    RubricParseError,
    ScoringError,
)
from .judge import JudgeClient
from .metrics import (
    INTERVAL,
    ORDINAL,
    krippendorff_alpha,
    qwk,
    rating_matrix,
    rating_matrix_from_csv,
    within_item_sd,
)
from .sessions import RubricService, SessionService, _goal_from_dict
from .store import DocumentStore

_STATUS_BY_CODE = {
    NotFoundError.code: 404,
    ConflictError.code: 409,
    IntegrityError.code: 500,
    PreconditionError.code: 422,
    RubricParseError.code: 400,
    ScoringError.code: 422,
    "NAME_NOT_FOUND": 404,
}


def _estimate_dict(estimate) -> dict[str, Any]:
    return {
        "point": estimate.point,
        "ci_low": estimate.ci_low,
        "ci_high": estimate.ci_high,
        "n_items": estimate.n_items,
    }


def create_app(store: DocumentStore, client: JudgeClient) -> FastAPI:
    app = FastAPI(title="rubrickit", version="0.1.0")
    rubrics = RubricService(store, client)
    sessions = SessionService(store, client, rubrics)
    app.state.store = store
    app.state.client = client
    app.state.rubrics = rubrics
    app.state.sessions = sessions

    @app.exception_handler(EngineError)
    async def engine_error(_: Request, exc: EngineError):
        status = _STATUS_BY_CODE.get(exc.code, 400)
        return JSONResponse(
            status_code=status, content={"error": {"code": exc.code, "message": str(exc)}}
        )

    # -- rubrics --------------------------------------------------------------

    @app.post("/rubrics")
    async def create_rubric(body: dict):
        return rubrics.create(body.get("document", body))

    @app.get("/rubrics")
    async def list_rubrics():
        return [rubrics.get(doc.id) for doc in store.list("rubrics")]

    @app.get("/rubrics/{rubric_id}")
    async def get_rubric(rubric_id: str, version: int | None = None):
        return rubrics.get(rubric_id, version)

    @app.put("/rubrics/{rubric_id}")
    async def put_rubric(rubric_id: str, body: dict):
        return rubrics.put(rubric_id, body.get("document", body))

    @app.post("/rubrics/{rubric_id}/qualify")
    async def qualify_rubric(rubric_id: str):
        return rubrics.qualify(rubric_id)

    @app.post("/rubrics/{rubric_id}/howto")
    async def howto_rubric(rubric_id: str, body: dict):
        goal = _resolve_rubric_goal(rubrics, rubric_id, body)
        return rubrics.howto(rubric_id, goal)

    @app.post("/rubrics/{rubric_id}/assists/recommend")
    async def assist_recommend(rubric_id: str, body: dict | None = None):
        rubric, _ = rubrics.load(rubric_id)
        task = (body or {}).get("task_description") or rubric.task_description
        criterion = studio.recommend_criterion(client, rubric, task)
        return criterion_to_dict(criterion)

    @app.post("/rubrics/{rubric_id}/assists/refine")
    async def assist_refine(rubric_id: str, body: dict):
        rubric, _ = rubrics.load(rubric_id)
        kind = studio.RefineKind(body.get("kind", "Improve"))
        if "criterion" in body and isinstance(body["criterion"], dict):
            criterion = criterion_from_dict(body["criterion"])
        else:
            criterion = rubric.criterion(body["criterion_name"])
        level = body.get("level")
        if level is None:
            refined = studio.refine_criterion(
                client, criterion, kind, rubric.task_description, rubric.scale
            )
            return criterion_to_dict(refined)
        descriptor = studio.refine_descriptor(client, criterion, int(level), kind)
        return {
            f"score_{level}": {
                "text": descriptor.text,
                "checked": descriptor.checked,
                "reason": descriptor.reason,
            }
        }

    @app.post("/rubrics/{rubric_id}/assists/enhance")
    async def assist_enhance(rubric_id: str, body: dict):
        return {"task": studio.enhance_task_description(client, body["text"])}

    # -- sessions -------------------------------------------------------------

    @app.post("/sessions")
    async def create_session(body: dict):
        return sessions.create(body["text"], body["rubric_id"])

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str):
        return sessions.get(session_id)

    @app.put("/sessions/{session_id}/text")
    async def put_text(session_id: str, body: dict):
        return sessions.set_text(session_id, body["text"], body.get("revision"))

    @app.post("/sessions/{session_id}/evaluate")
    async def evaluate_session(session_id: str):
        return sessions.evaluate(session_id)

    @app.post("/sessions/{session_id}/qualify")
    async def qualify_session(session_id: str):
        return sessions.qualify(session_id)

    @app.post("/sessions/{session_id}/howto")
    async def howto_session(session_id: str, body: dict):
        goal = sessions.resolve_writing_goal(
            session_id,
            criterion=body["criterion"],
            target=int(body["target"]),
            current=body.get("current"),
            rationale=body.get("rationale"),
        )
        return sessions.howto_writing(session_id, goal)

    @app.get("/sessions/{session_id}/changes")
    async def get_changes(session_id: str):
        doc = sessions.get(session_id)
        if not doc.get("pending_changeset"):
            raise NotFoundError("session has no pending change set")
        return doc["pending_changeset"]

    @app.post("/sessions/{session_id}/changes/{card_id}/accept")
    async def accept_card(session_id: str, card_id: int, body: dict | None = None):
        return sessions.set_card_status(
            session_id, card_id, "accepted", (body or {}).get("revision")
        )

    @app.post("/sessions/{session_id}/changes/{card_id}/reject")
    async def reject_card(session_id: str, card_id: int, body: dict | None = None):
        return sessions.set_card_status(
            session_id, card_id, "rejected", (body or {}).get("revision")
        )

    @app.post("/sessions/{session_id}/changes/apply")
    async def apply_changes(session_id: str, body: dict | None = None):
        return sessions.apply_pending_changes(session_id, (body or {}).get("revision"))

    @app.post("/sessions/{session_id}/cycle")
    async def refinement_cycle(session_id: str, body: dict | None = None):
        body = body or {}
        meta_goal = _goal_from_dict(body["meta_goal"]) if body.get("meta_goal") else None
        writing_goal = (
            _goal_from_dict(body["writing_goal"]) if body.get("writing_goal") else None
        )
        return sessions.run_refinement_cycle(session_id, meta_goal, writing_goal)

    # -- metrics ---------------------------------------------------------------

    @app.post("/metrics/alpha")
    async def metrics_alpha(body: dict):
        matrix = _matrix_from_body(body)
        metric = body.get("metric", ORDINAL)
        if metric not in (ORDINAL, INTERVAL):
            raise PreconditionError(f"metric must be '{ORDINAL}' or '{INTERVAL}'")
        estimate = krippendorff_alpha(matrix, metric, bootstrap=int(body.get("bootstrap", 1000)))
        out = _estimate_dict(estimate)
        out["mean_within_item_sd"] = within_item_sd(matrix)
        return out

    @app.post("/metrics/qwk")
    async def metrics_qwk(body: dict):
        if "csv" in body:
            matrix = rating_matrix_from_csv(body["csv"])
            if len(matrix.raters) != 2:
                raise PreconditionError("QWK ingestion expects exactly 2 rater columns")
            reference = [int(row[0]) for row in matrix.values]
            candidate = [int(row[1]) for row in matrix.values]
        else:
            reference = [int(v) for v in body["reference"]]
            candidate = [int(v) for v in body["candidate"]]
        scale = tuple(body.get("scale") or (min(reference + candidate), max(reference + candidate)))
        estimate = qwk(reference, candidate, (int(scale[0]), int(scale[1])),
                       bootstrap=int(body.get("bootstrap", 1000)))
        return _estimate_dict(estimate)

    return app


def _matrix_from_body(body: dict):
    if "csv" in body:
        return rating_matrix_from_csv(body["csv"])
    matrix = body["matrix"]
    return rating_matrix(
        rows=[[None if v is None else float(v) for v in row] for row in matrix["values"]],
        raters=matrix.get("raters"),
        items=matrix.get("items"),
    )


def _resolve_rubric_goal(rubrics: RubricService, rubric_id: str, body: dict):
    """Fill goal gaps from the rubric's latest qualification (the Why-Not flow)."""
    from .feedback import RevisionGoal

    current = body.get("current")
    rationale = body.get("rationale")
    if current is None or rationale is None:
        latest = rubrics.latest_qualification(rubric_id)
        if latest is None:
            raise NotFoundError(f"rubric {rubric_id} has no qualification yet; qualify first")
        entry = next(c for c in latest["criteria"] if c["name"] == body["criterion"])
        if current is None:
            current = entry["selected"]
        if rationale is None:
            key = f"score_{int(body['target'])}"
            rationale = entry["reasons"].get(key, "")
    return RevisionGoal(
        criterion=body["criterion"],
        current=int(current),
        target=int(body["target"]),
        rationale=rationale or "",
    )
