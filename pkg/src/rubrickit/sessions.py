"""Session and rubric orchestration over the document store.

A session owns a writing document, an attached rubric, an interleaved
evaluation history (writing-vs-rubric and rubric-vs-meta), a pending change
set, and an append-only event log sufficient to replay the whole session
against a scripted judge.

One writer per session: every mutation takes the session's current revision
token and conflicts instead of last-writer-wins.
"""

from __future__ import annotations

import threading
import uuid
from typing import Any

from . import feedback, studio
from .core import (
    Evaluation,
    Rubric,
    evaluation_from_dict,
    evaluation_to_dict,
    rubric_from_dict,
    rubric_hash,
    rubric_to_dict,
    text_hash,
    validate_rubric,
)
from .errors import ConflictError, NotFoundError, PreconditionError
from .evaluator import evaluate
from .feedback import ChangeCard, ChangeSet, RevisionGoal
from .judge import JudgeClient, JudgeConfig
from .store import EVALUATIONS, RUBRICS, SESSIONS, DocumentStore

PROVENANCE_USER = "user-edit"
PROVENANCE_HOWTO = "howto-applied"
PROVENANCE_ASSIST = "studio-assist"

KIND_WRITING = "writing"
KIND_META = "meta"


def _changeset_to_dict(changeset: ChangeSet) -> dict[str, Any]:
    return {
        "base_hash": changeset.base_hash,
        "cards": [
            {
                "id": i,
                "offset": c.offset,
                "length": c.length,
                "replacement": c.replacement,
                "rationale": c.rationale,
                "status": c.status,
            }
            for i, c in enumerate(changeset.cards)
        ],
    }


def _changeset_from_dict(doc: dict[str, Any]) -> ChangeSet:
    return ChangeSet(
        base_hash=doc["base_hash"],
        cards=tuple(
            ChangeCard(
                offset=c["offset"],
                length=c["length"],
                replacement=c["replacement"],
                rationale=c["rationale"],
                status=c["status"],
            )
            for c in doc["cards"]
        ),
    )


def _goal_from_dict(doc: dict[str, Any]) -> RevisionGoal:
    return RevisionGoal(
        criterion=doc["criterion"],
        current=doc["current"],
        target=doc["target"],
        rationale=doc.get("rationale", ""),
    )


def _goal_to_dict(goal: RevisionGoal) -> dict[str, Any]:
    return {
        "criterion": goal.criterion,
        "current": goal.current,
        "target": goal.target,
        "rationale": goal.rationale,
    }


class RubricService:
    """CRUD plus qualification and studio assists for stored rubrics."""

    def __init__(self, store: DocumentStore, client: JudgeClient):
        self.store = store
        self.client = client

    def create(self, document: dict[str, Any], provenance: str = PROVENANCE_USER) -> dict[str, Any]:
        rubric = rubric_from_dict(document)
        stored = self.store.create(RUBRICS, rubric_to_dict(rubric), provenance)
        return self._resource(stored)

    def get(self, rubric_id: str, version: int | None = None) -> dict[str, Any]:
        return self._resource(self.store.get(RUBRICS, rubric_id, version))

    def put(self, rubric_id: str, document: dict[str, Any],
            provenance: str = PROVENANCE_USER) -> dict[str, Any]:
        rubric = rubric_from_dict(document)
        stored = self.store.put(RUBRICS, rubric_id, rubric_to_dict(rubric), provenance)
        return self._resource(stored)

    def load(self, rubric_id: str, version: int | None = None) -> tuple[Rubric, int]:
        stored = self.store.get(RUBRICS, rubric_id, version)
        return rubric_from_dict(stored.body), stored.version

    def _resource(self, stored) -> dict[str, Any]:
        rubric = rubric_from_dict(stored.body)
        return {
            "id": stored.id,
            "version": stored.version,
            "provenance": stored.provenance,
            "document": stored.body,
            "hash": rubric_hash(rubric),
            "validation": [
                {"code": v.code, "message": v.message, "path": v.path}
                for v in validate_rubric(rubric)
            ],
        }

    def qualify(self, rubric_id: str, config: JudgeConfig | None = None) -> dict[str, Any]:
        rubric, version = self.load(rubric_id)
        evaluation = studio.qualify_rubric(self.client, rubric, config)
        doc = evaluation_to_dict(evaluation)
        doc.update({"kind": KIND_META, "rubric_id": rubric_id, "rubric_version": version})
        self.store.create(EVALUATIONS, doc)
        return doc

    def latest_qualification(self, rubric_id: str) -> dict[str, Any] | None:
        rows = [
            d.body
            for d in self.store.list(EVALUATIONS)
            if d.body.get("rubric_id") == rubric_id and d.body.get("kind") == KIND_META
        ]
        return max(rows, key=lambda d: d["created_at"]) if rows else None

    def howto(self, rubric_id: str, goal: RevisionGoal,
              config: JudgeConfig | None = None) -> dict[str, Any]:
        """Apply a comprehensive meta-goal revision as a new rubric version."""
        rubric, previous_version = self.load(rubric_id)
        revised = studio.howto_rubric(self.client, rubric, goal, config)
        stored = self.store.put(RUBRICS, rubric_id, rubric_to_dict(revised), PROVENANCE_HOWTO)
        resource = self._resource(stored)
        resource["previous_version"] = previous_version
        return resource


class SessionService:
    def __init__(self, store: DocumentStore, client: JudgeClient, rubrics: RubricService):
        self.store = store
        self.client = client
        self.rubrics = rubrics
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _lock_for(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())

    # -- lifecycle -----------------------------------------------------------

    def create(self, text: str, rubric_id: str) -> dict[str, Any]:
        rubric, rubric_version = self.rubrics.load(rubric_id)
        session_id = uuid.uuid4().hex
        doc = {
            "id": session_id,
            "revision": 1,
            "text": text,
            "rubric_id": rubric_id,
            "rubric_version": rubric_version,
            "evaluated_text_hash": None,
            "evaluated_rubric_hash": None,
            "evaluations": [],
            "pending_changeset": None,
            "events": [
                {
                    "type": "create",
                    "text": text,
                    "rubric_doc": rubric_to_dict(rubric),
                }
            ],
        }
        self.store.create(SESSIONS, doc, id=session_id)
        return self.get(session_id)

    def get(self, session_id: str) -> dict[str, Any]:
        doc = self.store.get(SESSIONS, session_id).body
        doc["stale"] = self._is_stale(doc)
        return doc

    def _is_stale(self, doc: dict[str, Any]) -> bool:
        if doc["evaluated_text_hash"] is None:
            return True
        rubric, _ = self.rubrics.load(doc["rubric_id"])
        return (
            text_hash(doc["text"]) != doc["evaluated_text_hash"]
            or rubric_hash(rubric) != doc["evaluated_rubric_hash"]
        )

    def _mutate(self, session_id: str, expected_revision: int | None, mutator) -> dict[str, Any]:
        with self._lock_for(session_id):
            doc = self.store.get(SESSIONS, session_id).body
            if expected_revision is not None and doc["revision"] != expected_revision:
                raise ConflictError(
                    f"session revision is {doc['revision']}, caller expected {expected_revision}"
                )
            mutator(doc)
            doc["revision"] += 1
            self.store.put(SESSIONS, session_id, doc)
        return self.get(session_id)

    # -- mutations -----------------------------------------------------------

    def set_text(self, session_id: str, text: str,
                 expected_revision: int | None = None) -> dict[str, Any]:
        def mutator(doc):
            doc["text"] = text
            doc["pending_changeset"] = None
            doc["events"].append({"type": "set_text", "text": text})

        return self._mutate(session_id, expected_revision, mutator)

    def evaluate(self, session_id: str, config: JudgeConfig | None = None) -> dict[str, Any]:
        session = self.store.get(SESSIONS, session_id).body
        rubric, rubric_version = self.rubrics.load(session["rubric_id"])
        evaluation = evaluate(self.client, session["text"], rubric, config)

        def mutator(doc):
            entry = evaluation_to_dict(evaluation)
            entry.update(
                {"kind": KIND_WRITING, "rubric_id": doc["rubric_id"], "rubric_version": rubric_version}
            )
            doc["evaluations"].append(entry)
            doc["evaluated_text_hash"] = text_hash(doc["text"])
            doc["evaluated_rubric_hash"] = rubric_hash(rubric)
            doc["events"].append({"type": "evaluate"})

        return self._mutate(session_id, None, mutator)

    def qualify(self, session_id: str, config: JudgeConfig | None = None) -> dict[str, Any]:
        session = self.store.get(SESSIONS, session_id).body
        rubric, rubric_version = self.rubrics.load(session["rubric_id"])
        evaluation = studio.qualify_rubric(self.client, rubric, config)

        def mutator(doc):
            entry = evaluation_to_dict(evaluation)
            entry.update(
                {"kind": KIND_META, "rubric_id": doc["rubric_id"], "rubric_version": rubric_version}
            )
            doc["evaluations"].append(entry)
            doc["events"].append({"type": "qualify"})

        return self._mutate(session_id, None, mutator)

    def latest_evaluation(self, session_id: str, kind: str = KIND_WRITING) -> Evaluation:
        doc = self.store.get(SESSIONS, session_id).body
        for entry in reversed(doc["evaluations"]):
            if entry["kind"] == kind:
                return evaluation_from_dict(entry)
        raise NotFoundError(f"session {session_id} has no {kind} evaluation yet")

    def resolve_writing_goal(self, session_id: str, criterion: str, target: int,
                             current: int | None = None, rationale: str | None = None) -> RevisionGoal:
        """Fill goal gaps from the latest writing evaluation (the Why-Not flow)."""
        if current is None or rationale is None:
            evaluation = self.latest_evaluation(session_id, KIND_WRITING)
            judged = evaluation.criterion(criterion)
            if current is None:
                current = judged.selected
            if rationale is None:
                rationale = judged.reason_for(target) if target != judged.selected else ""
        return RevisionGoal(criterion=criterion, current=current, target=target,
                            rationale=rationale or "")

    def howto_writing(self, session_id: str, goal: RevisionGoal,
                      config: JudgeConfig | None = None) -> dict[str, Any]:
        session = self.store.get(SESSIONS, session_id).body
        rubric, _ = self.rubrics.load(session["rubric_id"])
        suggestion = feedback.howto_writing(self.client, session["text"], rubric, goal, config)
        changeset = feedback.extract_changes(session["text"], suggestion)

        def mutator(doc):
            doc["pending_changeset"] = _changeset_to_dict(changeset)
            doc["pending_changeset"]["criterion"] = goal.criterion
            doc["pending_changeset"]["target"] = goal.target
            doc["events"].append({"type": "howto_writing", "goal": _goal_to_dict(goal)})

        return self._mutate(session_id, None, mutator)

    def set_card_status(self, session_id: str, card_id: int, status: str,
                        expected_revision: int | None = None) -> dict[str, Any]:
        if status not in (feedback.ACCEPTED, feedback.REJECTED, feedback.PENDING):
            raise PreconditionError(f"unknown card status {status!r}")

        def mutator(doc):
            pending = doc.get("pending_changeset")
            if not pending:
                raise NotFoundError("session has no pending change set")
            cards = pending["cards"]
            if not 0 <= card_id < len(cards):
                raise NotFoundError(f"no change card {card_id}")
            cards[card_id]["status"] = status
            doc["events"].append(
                {"type": "card_status", "index": card_id, "status": status}
            )

        return self._mutate(session_id, expected_revision, mutator)

    def apply_pending_changes(self, session_id: str,
                              expected_revision: int | None = None) -> dict[str, Any]:
        """Splice accepted cards into the session text; pending cards count as rejected."""

        def mutator(doc):
            pending = doc.get("pending_changeset")
            if not pending:
                raise NotFoundError("session has no pending change set")
            changeset = _changeset_from_dict(pending)
            doc["text"] = feedback.apply_changes(doc["text"], changeset)
            doc["pending_changeset"] = None
            doc["events"].append({"type": "apply_changes"})

        return self._mutate(session_id, expected_revision, mutator)

    # -- the end-to-end refinement loop ---------------------------------------

    def run_refinement_cycle(
        self,
        session_id: str,
        meta_goal: RevisionGoal | None = None,
        writing_goal: RevisionGoal | None = None,
        config: JudgeConfig | None = None,
    ) -> dict[str, Any]:
        """Qualify the rubric, optionally revise it toward the meta goal, then
        evaluate the writing against the (possibly revised) rubric and
        optionally generate a writing revision.

        Each stage persists when it completes; a later stage's failure leaves
        the session at the last consistent snapshot (e.g. a stage-2 judge
        failure retains the new rubric version and leaves the text unchanged).
        """
        session = self.store.get(SESSIONS, session_id).body
        self.qualify(session_id, config)
        if meta_goal is not None:
            resource = self.rubrics.howto(session["rubric_id"], meta_goal, config)

            def mutator(doc):
                doc["rubric_version"] = resource["version"]
                doc["events"].append(
                    {"type": "howto_rubric", "goal": _goal_to_dict(meta_goal)}
                )

            self._mutate(session_id, None, mutator)
        self.evaluate(session_id, config)
        if writing_goal is not None:
            self.howto_writing(session_id, writing_goal, config)
        return self.get(session_id)


def replay_session(events: list[dict[str, Any]], client: JudgeClient,
                   config: JudgeConfig | None = None) -> dict[str, Any]:
    """Re-execute a session's event log against a judge, from scratch.

    Returns the final state: text, rubric document, and their hashes. With the
    scripted judge this reproduces the original session exactly.
    """
    if not events or events[0]["type"] != "create":
        raise PreconditionError("event log must start with a create event")
    store = DocumentStore(":memory:")
    rubrics = RubricService(store, client)
    sessions = SessionService(store, client, rubrics)

    first = events[0]
    rubric_resource = rubrics.create(first["rubric_doc"])
    session = sessions.create(first["text"], rubric_resource["id"])
    session_id = session["id"]
    for event in events[1:]:
        kind = event["type"]
        if kind == "set_text":
            sessions.set_text(session_id, event["text"])
        elif kind == "edit_rubric":
            rubrics.put(rubric_resource["id"], event["doc"])
        elif kind == "qualify":
            sessions.qualify(session_id, config)
        elif kind == "howto_rubric":
            rubrics.howto(rubric_resource["id"], _goal_from_dict(event["goal"]), config)
        elif kind == "evaluate":
            sessions.evaluate(session_id, config)
        elif kind == "howto_writing":
            sessions.howto_writing(session_id, _goal_from_dict(event["goal"]), config)
        elif kind == "card_status":
            sessions.set_card_status(session_id, event["index"], event["status"])
        elif kind == "apply_changes":
            sessions.apply_pending_changes(session_id)
        else:
            raise PreconditionError(f"unknown event type {kind!r}")

    final = sessions.get(session_id)
    rubric, _ = rubrics.load(final["rubric_id"])
    return {
        "text": final["text"],
        "text_hash": text_hash(final["text"]),
        "rubric_document": rubric_to_dict(rubric),
        "rubric_hash": rubric_hash(rubric),
        "session": final,
    }
