"""Event-based observation sink.

All attrs are effectively trigger for an event-based component, so any
connection into the collector activates it; it logs every input pair in
arrival order and never produces output, making it a universal probe that
does not perturb schedules.
"""

from __future__ import annotations

import json
from typing import Any, Optional

from ..api import API_VERSION, InputBundle, OutputBundle, Simulator


class CollectorSim(Simulator):
    component_type = "event-based"
    model = "Collector"

    def __init__(self):
        super().__init__()
        self.logs: dict[str, list[tuple[int, str, Any]]] = {}
        self.dump_path: dict[str, str | None] = {}

    def init(self, sid: str, time_resolution: float, **sim_params) -> dict:
        self.sid = sid
        return {
            "api_version": API_VERSION,
            "component_type": self.component_type,
            "models": {
                self.model: {
                    "public": True,
                    "params": ["dump_path"],
                    "attrs": ["in"],
                    "trigger": [],
                    "non_persistent": [],
                }
            },
        }

    def create(self, num: int, model: str, dump_path: str | None = None) -> list[dict]:
        made = []
        for _ in range(num):
            eid = f"{model}-{len(self.logs)}"
            self.logs[eid] = []
            self.dump_path[eid] = dump_path
            made.append({"eid": eid, "model": model, "children": []})
        return made

    def step(self, time: int, inputs: InputBundle, max_advance: int) -> Optional[int]:
        for eid in self.logs:
            for attr, pairs in inputs.get(eid, {}).items():
                for _src, value in pairs:
                    self.logs[eid].append((time, attr, value))
        return None

    def get_data(self, outputs: dict[str, list[str]]) -> OutputBundle:
        return OutputBundle()

    def stop(self) -> None:
        for eid, path in self.dump_path.items():
            if path:
                with open(path, "w", encoding="utf-8") as fh:
                    for tick, attr, value in self.logs[eid]:
                        fh.write(json.dumps(
                            {"tick": tick, "attr": attr, "value": value},
                            ensure_ascii=False,
                        ) + "\n")
