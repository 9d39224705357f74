"""Event-based message delay line (the communication-network stand-in).

Each Node entity accepts payloads on its trigger attr `send` and re-emits
them on `delivery` exactly `latency` ticks later.  The sim only ever steps
when traffic demands it: at send arrivals and at delivery ticks, so a long
quiet span costs zero step calls.
"""

from __future__ import annotations

from typing import Any, Optional

from ..api import API_VERSION, InputBundle, OutputBundle, Simulator


class DelayNetSim(Simulator):
    component_type = "event-based"
    model = "Node"

    def __init__(self):
        super().__init__()
        self.latency: dict[str, int] = {}
        # FIFO of (deliver_at, eid, payload) in acceptance order
        self.in_flight: list[tuple[int, str, Any]] = []
        self.internal_clock = 0
        self._due_now: list[tuple[str, Any]] = []
        self._time = 0

    def init(self, sid: str, time_resolution: float, **sim_params) -> dict:
        self.sid = sid
        return {
            "api_version": API_VERSION,
            "component_type": self.component_type,
            "models": {
                self.model: {
                    "public": True,
                    "params": ["latency"],
                    "attrs": ["send", "delivery"],
                    "trigger": [],
                    "non_persistent": [],
                }
            },
        }

    def create(self, num: int, model: str, latency: int = 1) -> list[dict]:
        if int(latency) < 0:
            raise ValueError("latency must be >= 0")
        made = []
        for _ in range(num):
            eid = f"{model}-{len(self.latency)}"
            self.latency[eid] = int(latency)
            made.append({"eid": eid, "model": model, "children": []})
        return made

    def step(self, time: int, inputs: InputBundle, max_advance: int) -> Optional[int]:
        self._time = time
        for eid in self.latency:
            for _src, value in inputs.get(eid, {}).get("send", []):
                self.in_flight.append((time + self.latency[eid], eid, value))
        self._due_now = [(eid, payload) for t, eid, payload in self.in_flight if t == time]
        self.in_flight = [item for item in self.in_flight if item[0] != time]
        nxt = min((t for t, _, _ in self.in_flight), default=None)
        # model may precompute quiet spans up to max_advance without being stepped
        self.internal_clock = max(time, min(max_advance, nxt - 1) if nxt is not None else max_advance)
        return nxt

    def get_data(self, outputs: dict[str, list[str]]) -> OutputBundle:
        data: dict[str, dict[str, Any]] = {}
        for eid, payload in self._due_now:
            if eid in outputs and "delivery" in outputs[eid]:
                slot = data.setdefault(eid, {})
                if "delivery" in slot:
                    prev = slot["delivery"]
                    slot["delivery"] = (prev if isinstance(prev, list) else [prev]) + [payload]
                else:
                    slot["delivery"] = payload
        return OutputBundle(data=data, output_time=self._time if data else None)
