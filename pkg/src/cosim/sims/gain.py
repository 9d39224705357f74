"""Time-based amplifier: pulls persistent inputs, emits gain * sum(in).

Its `in` attr is a non-trigger input, so it exercises the pull side of the
persistence semantics: at each of its own grid steps it reads whatever the
connected sources last produced.
"""

from __future__ import annotations

from typing import Optional

from ..api import API_VERSION, InputBundle, OutputBundle, Simulator


class GainSim(Simulator):
    component_type = "time-based"
    model = "Gain"

    def __init__(self):
        super().__init__()
        self.gain: dict[str, float] = {}
        self.step_size: dict[str, int] = {}
        self.value: dict[str, float] = {}
        self._emit: list[str] = []

    def init(self, sid: str, time_resolution: float, **sim_params) -> dict:
        self.sid = sid
        return {
            "api_version": API_VERSION,
            "component_type": self.component_type,
            "models": {
                self.model: {
                    "public": True,
                    "params": ["gain", "step_size"],
                    "attrs": ["in", "out"],
                    "trigger": [],
                    "non_persistent": [],
                }
            },
        }

    def create(self, num: int, model: str, gain: float = 1.0, step_size: int = 1) -> list[dict]:
        if int(step_size) < 1:
            raise ValueError("step_size must be >= 1")
        made = []
        for _ in range(num):
            eid = f"{model}-{len(self.gain)}"
            self.gain[eid] = float(gain)
            self.step_size[eid] = int(step_size)
            self.value[eid] = 0.0
            made.append({"eid": eid, "model": model, "children": []})
        return made

    def step(self, time: int, inputs: InputBundle, max_advance: int) -> Optional[int]:
        self._emit = []
        for eid in self.gain:
            if time % self.step_size[eid] == 0:
                pairs = inputs.get(eid, {}).get("in", [])
                total = sum(v for _src, v in pairs if isinstance(v, (int, float)))
                self.value[eid] = self.gain[eid] * total
                self._emit.append(eid)
        return time + min(
            s - (time % s) for s in self.step_size.values()
        ) if self.step_size else time + 1

    def get_data(self, outputs: dict[str, list[str]]) -> OutputBundle:
        data = {}
        for eid in self._emit:
            if eid in outputs and "out" in outputs[eid]:
                data[eid] = {"out": self.value[eid]}
        return OutputBundle(data=data)
