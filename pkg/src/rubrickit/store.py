"""Embedded single-file document store (SQLite, stdlib driver).

Schema: one ``documents`` table holding JSON bodies per (collection, id,
version). Versions are immutable and append-only; deletes are soft
tombstones so session history stays coherent. Every load re-hashes the body
and compares against the recorded content hash.
"""

from __future__ import annotations

import json
import sqlite3
import threading
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Any

from .core import text_hash
from .errors import IntegrityError, NotFoundError

_SCHEMA = """
CREATE TABLE IF NOT EXISTS documents (
    collection   TEXT NOT NULL,
    id           TEXT NOT NULL,
    version      INTEGER NOT NULL,
    body         TEXT NOT NULL,
    content_hash TEXT NOT NULL,
    provenance   TEXT NOT NULL DEFAULT '',
    created_at   TEXT NOT NULL,
    deleted      INTEGER NOT NULL DEFAULT 0,
    PRIMARY KEY (collection, id, version)
);
"""

RUBRICS = "rubrics"
SESSIONS = "sessions"
EVALUATIONS = "evaluations"
REPORTS = "reports"
TRANSCRIPTS = "transcripts"


@dataclass(frozen=True)
class StoredDocument:
    collection: str
    id: str
    version: int
    body: dict[str, Any]
    provenance: str
    created_at: str


class DocumentStore:
    """Thread-safe store over one SQLite file (":memory:" for tests)."""

    def __init__(self, path: str = ":memory:"):
        self.path = path
        self._conn = sqlite3.connect(path, check_same_thread=False)
        self._lock = threading.RLock()
        with self._lock:
            self._conn.execute(_SCHEMA)
            self._conn.commit()

    def close(self):
        with self._lock:
            self._conn.close()

    # -- writes ------------------------------------------------------------

    def create(self, collection: str, body: dict[str, Any], provenance: str = "",
               id: str | None = None) -> StoredDocument:
        doc_id = id or uuid.uuid4().hex
        return self._insert(collection, doc_id, 1, body, provenance)

    def put(self, collection: str, id: str, body: dict[str, Any],
            provenance: str = "") -> StoredDocument:
        """Append a new immutable version of an existing document."""
        with self._lock:
            row = self._conn.execute(
                "SELECT MAX(version) FROM documents WHERE collection=? AND id=?",
                (collection, id),
            ).fetchone()
            latest = row[0]
            if latest is None:
                raise NotFoundError(f"{collection}/{id} does not exist")
            return self._insert(collection, id, latest + 1, body, provenance)

    def _insert(self, collection, id, version, body, provenance) -> StoredDocument:
        encoded = json.dumps(body, ensure_ascii=False, sort_keys=True)
        created = datetime.now(timezone.utc).isoformat()
        with self._lock:
            self._conn.execute(
                "INSERT INTO documents (collection, id, version, body, content_hash, "
                "provenance, created_at) VALUES (?,?,?,?,?,?,?)",
                (collection, id, version, encoded, text_hash(encoded), provenance, created),
            )
            self._conn.commit()
        return StoredDocument(collection, id, version, body, provenance, created)

    def delete(self, collection: str, id: str) -> None:
        """Soft delete: tombstone every version; history rows remain."""
        with self._lock:
            cursor = self._conn.execute(
                "UPDATE documents SET deleted=1 WHERE collection=? AND id=?",
                (collection, id),
            )
            self._conn.commit()
        if cursor.rowcount == 0:
            raise NotFoundError(f"{collection}/{id} does not exist")

    # -- reads ---------------------------------------------------------------

    def get(self, collection: str, id: str, version: int | None = None) -> StoredDocument:
        with self._lock:
            if version is None:
                row = self._conn.execute(
                    "SELECT version, body, content_hash, provenance, created_at, deleted "
                    "FROM documents WHERE collection=? AND id=? ORDER BY version DESC LIMIT 1",
                    (collection, id),
                ).fetchone()
            else:
                row = self._conn.execute(
                    "SELECT version, body, content_hash, provenance, created_at, deleted "
                    "FROM documents WHERE collection=? AND id=? AND version=?",
                    (collection, id, version),
                ).fetchone()
        if row is None or row[5]:
            raise NotFoundError(f"{collection}/{id} does not exist")
        got_version, encoded, recorded_hash, provenance, created, _ = row
        if text_hash(encoded) != recorded_hash:
            raise IntegrityError(
                f"{collection}/{id} v{got_version} content does not match its recorded hash"
            )
        return StoredDocument(collection, id, got_version, json.loads(encoded), provenance, created)

    def list(self, collection: str) -> list[StoredDocument]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT id, MAX(version) FROM documents "
                "WHERE collection=? AND deleted=0 GROUP BY id ORDER BY id",
                (collection,),
            ).fetchall()
        return [self.get(collection, row[0], row[1]) for row in rows]

    def versions(self, collection: str, id: str) -> list[StoredDocument]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT version FROM documents WHERE collection=? AND id=? AND deleted=0 "
                "ORDER BY version",
                (collection, id),
            ).fetchall()
        if not rows:
            raise NotFoundError(f"{collection}/{id} does not exist")
        return [self.get(collection, id, row[0]) for row in rows]
