"""Audit log written alongside a built tree."""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field


@dataclass
class BuildManifest:
    method: str = ""
    params: dict = field(default_factory=dict)
    layers: list[dict] = field(default_factory=list)
    events: list[dict] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)
    llm_calls: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def event(self, kind: str, **info) -> None:
        with self._lock:
            self.events.append({"seq": len(self.events), "event": kind, **info})

    def flag(self, message: str) -> None:
        with self._lock:
            self.flags.append(message)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "params": self.params,
            "layers": self.layers,
            "events": self.events,
            "flags": self.flags,
            "llm_calls": self.llm_calls,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"
