"""Single-file embedded store for documents, extraction records, annotation
tasks, the demonstration pool, and jobs, with an append-only event log.

Desk-scale by design: one writer, many readers. State persists as one JSON
file; every mutation also appends a line to the sidecar ``.log`` event file
for replay-friendly audits. Construct with ``path=None`` for a purely
in-memory store (tests).
"""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Any, Iterator


class StoreError(Exception):
    pass


_SECTIONS = ("documents", "paragraphs", "records", "pool", "tasks", "jobs")


class Store:
    def __init__(self, path: str | Path | None = None) -> None:
        self.path = Path(path) if path is not None else None
        self._lock = threading.RLock()
        self._data: dict[str, dict[str, Any]] = {section: {} for section in _SECTIONS}
        self._event_seq = 0
        if self.path is not None and self.path.exists():
            self._load()

    # -- persistence --

    def _load(self) -> None:
        with open(self.path, encoding="utf-8") as fh:
            raw = json.load(fh)
        for section in _SECTIONS:
            self._data[section] = raw.get(section, {})
        self._event_seq = raw.get("event_seq", 0)

    def _flush(self) -> None:
        if self.path is None:
            return
        payload = dict(self._data)
        payload["event_seq"] = self._event_seq
        tmp = self.path.with_suffix(self.path.suffix + ".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, ensure_ascii=False)
        tmp.replace(self.path)

    def _log_event(self, kind: str, key: str) -> None:
        self._event_seq += 1
        if self.path is None:
            return
        log_path = self.path.with_suffix(self.path.suffix + ".log")
        with open(log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps({"seq": self._event_seq, "event": kind, "key": key}) + "\n")

    # -- generic access --

    def put(self, section: str, key: str, value: dict) -> None:
        self._check_section(section)
        with self._lock:
            self._data[section][key] = value
            self._log_event(f"put:{section}", key)
            self._flush()

    def get(self, section: str, key: str) -> dict | None:
        self._check_section(section)
        with self._lock:
            value = self._data[section].get(key)
            return json.loads(json.dumps(value)) if value is not None else None

    def require(self, section: str, key: str) -> dict:
        value = self.get(section, key)
        if value is None:
            raise StoreError(f"no {section[:-1]} with id {key!r}")
        return value

    def delete(self, section: str, key: str) -> None:
        self._check_section(section)
        with self._lock:
            if key in self._data[section]:
                del self._data[section][key]
                self._log_event(f"delete:{section}", key)
                self._flush()

    def items(self, section: str) -> Iterator[tuple[str, dict]]:
        self._check_section(section)
        with self._lock:
            snapshot = json.loads(json.dumps(self._data[section]))
        yield from sorted(snapshot.items())

    def count(self, section: str) -> int:
        self._check_section(section)
        with self._lock:
            return len(self._data[section])

    def mutate(self, section: str, key: str, fn) -> dict:
        """Atomically read-modify-write one entry under the store lock."""
        self._check_section(section)
        with self._lock:
            value = self._data[section].get(key)
            if value is None:
                raise StoreError(f"no {section[:-1]} with id {key!r}")
            updated = fn(json.loads(json.dumps(value)))
            self._data[section][key] = updated
            self._log_event(f"mutate:{section}", key)
            self._flush()
            return json.loads(json.dumps(updated))

    @staticmethod
    def _check_section(section: str) -> None:
        if section not in _SECTIONS:
            raise StoreError(f"unknown section {section!r}")
