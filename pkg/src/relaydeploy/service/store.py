"""Append-only event log plus snapshot per session.

Every mutation appends its event first and then atomically replaces the
snapshot; recovery loads the snapshot and replays any events past it.
"""
from __future__ import annotations

import json
import os
from pathlib import Path


class SessionStore:
    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _dir(self, session_id):
        return self.root / session_id

    def list_ids(self):
        return sorted(p.name for p in self.root.iterdir()
                      if (p / "events.jsonl").exists())

    def append_event(self, session_id, event: dict):
        d = self._dir(session_id)
        d.mkdir(parents=True, exist_ok=True)
        with open(d / "events.jsonl", "a") as fh:
            fh.write(json.dumps(event, separators=(",", ":")) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def read_events(self, session_id):
        path = self._dir(session_id) / "events.jsonl"
        if not path.exists():
            return []
        with open(path) as fh:
            return [json.loads(line) for line in fh if line.strip()]

    def write_snapshot(self, session_id, doc: dict):
        d = self._dir(session_id)
        d.mkdir(parents=True, exist_ok=True)
        tmp = d / "snapshot.json.tmp"
        with open(tmp, "w") as fh:
            json.dump(doc, fh)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, d / "snapshot.json")

    def read_snapshot(self, session_id):
        path = self._dir(session_id) / "snapshot.json"
        if not path.exists():
            return None
        with open(path) as fh:
            return json.load(fh)
