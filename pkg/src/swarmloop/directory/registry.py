"""In-memory Thing Description directory with TTL expiry and path queries."""

from __future__ import annotations

import copy
import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from swarmloop.directory.jsonpath import compile_path, evaluate
from swarmloop.errors import DuplicateId, SchemaViolation, UnknownId


@dataclass
class DirectoryEntry:
    td: dict[str, Any]
    registered_at: float
    updated_at: float
    ttl_s: float | None = None

    def expired(self, now: float) -> bool:
        return self.ttl_s is not None and now > self.updated_at + self.ttl_s


def _as_document(td: Any) -> dict[str, Any]:
    doc = td.to_json() if hasattr(td, "to_json") else td
    if not isinstance(doc, dict) or not isinstance(doc.get("id"), str) or not doc["id"]:
        raise SchemaViolation("id", "a Thing Description needs a non-empty string id")
    return copy.deepcopy(doc)


class ThingDirectory:
    """CRUDL registry.  ``clock`` is injectable for expiry tests."""

    def __init__(self, clock: Callable[[], float] = time.monotonic, default_ttl_s: float | None = None):
        self._clock = clock
        self._default_ttl = default_ttl_s
        self._entries: dict[str, DirectoryEntry] = {}
        self._lock = threading.Lock()

    def _live(self, tid: str, now: float) -> DirectoryEntry:
        entry = self._entries.get(tid)
        if entry is None or entry.expired(now):
            raise UnknownId(f"no thing {tid!r} in the directory")
        return entry

    def register(self, td: Any, ttl_s: float | None = None) -> DirectoryEntry:
        doc = _as_document(td)
        with self._lock:
            now = self._clock()
            current = self._entries.get(doc["id"])
            if current is not None and not current.expired(now):
                raise DuplicateId(f"{doc['id']} is already registered")
            entry = DirectoryEntry(doc, now, now, ttl_s if ttl_s is not None else self._default_ttl)
            self._entries[doc["id"]] = entry
            return copy.deepcopy(entry)

    def update(self, td: Any, ttl_s: float | None = None) -> DirectoryEntry:
        doc = _as_document(td)
        with self._lock:
            now = self._clock()
            entry = self._live(doc["id"], now)
            entry.td = doc
            entry.updated_at = now
            if ttl_s is not None:
                entry.ttl_s = ttl_s
            return copy.deepcopy(entry)

    def get(self, tid: str) -> dict[str, Any]:
        with self._lock:
            return copy.deepcopy(self._live(tid, self._clock()).td)

    def delete(self, tid: str) -> None:
        with self._lock:
            self._live(tid, self._clock())
            del self._entries[tid]

    def list(self) -> list[dict[str, Any]]:
        with self._lock:
            now = self._clock()
            return [
                copy.deepcopy(self._entries[k].td)
                for k in sorted(self._entries)
                if not self._entries[k].expired(now)
            ]

    def query(self, expression: str) -> list[dict[str, Any]]:
        """TDs for which ``expression`` selects at least one node, ordered by id."""
        steps = compile_path(expression)
        return [td for td in self.list() if evaluate(steps, td)]

    def purge(self) -> int:
        with self._lock:
            now = self._clock()
            dead = [k for k, e in self._entries.items() if e.expired(now)]
            for k in dead:
                del self._entries[k]
            return len(dead)

    # ----------------------------------------------------------- persistence
    def save(self, path: str | Path) -> None:
        with self._lock:
            data = [
                {"td": e.td, "registered_at": e.registered_at, "updated_at": e.updated_at, "ttl_s": e.ttl_s}
                for _, e in sorted(self._entries.items())
            ]
        Path(path).write_text(json.dumps(data, sort_keys=True, indent=1))

    @classmethod
    def load(cls, path: str | Path, clock: Callable[[], float] = time.monotonic) -> ThingDirectory:
        directory = cls(clock)
        for row in json.loads(Path(path).read_text()):
            directory._entries[row["td"]["id"]] = DirectoryEntry(
                row["td"], row["registered_at"], row["updated_at"], row["ttl_s"]
            )
        return directory
