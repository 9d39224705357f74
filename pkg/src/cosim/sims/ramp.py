"""Linear ramp sources: the time-based workhorse and its hybrid variant.

The plain ramp self-steps on a fixed grid and exposes one persistent
output `out` = slope * tick.  The hybrid variant additionally accepts a
trigger attr `setpoint` that re-anchors the ramp at the current tick.
"""

from __future__ import annotations

from typing import Optional

from ..api import API_VERSION, InputBundle, OutputBundle, Simulator


class _RampEntity:
    def __init__(self, eid: str, slope: float, step_size: int):
        self.eid = eid
        self.slope = slope
        self.step_size = step_size
        self.anchor_value = 0.0
        self.anchor_tick = 0

    def value_at(self, tick: int) -> float:
        return self.anchor_value + self.slope * (tick - self.anchor_tick)

    def due(self, tick: int) -> bool:
        return tick % self.step_size == 0

    def next_due(self, tick: int) -> int:
        return tick + self.step_size - (tick % self.step_size)


class RampSim(Simulator):
    component_type = "time-based"
    model = "Ramp"

    def __init__(self):
        super().__init__()
        self.entities: dict[str, _RampEntity] = {}
        self._emit: list[str] = []
        self._time = 0

    def init(self, sid: str, time_resolution: float, **sim_params) -> dict:
        self.sid = sid
        self.time_resolution = time_resolution
        return {
            "api_version": API_VERSION,
            "component_type": self.component_type,
            "models": {
                self.model: {
                    "public": True,
                    "params": ["slope", "step_size"],
                    "attrs": ["out"],
                    "trigger": [],
                    "non_persistent": [],
                }
            },
        }

    def create(self, num: int, model: str, slope: float = 1.0, step_size: int = 1) -> list[dict]:
        if int(step_size) < 1:
            raise ValueError("step_size must be >= 1")
        made = []
        for _ in range(num):
            eid = f"{model}-{len(self.entities)}"
            self.entities[eid] = _RampEntity(eid, float(slope), int(step_size))
            made.append({"eid": eid, "model": model, "children": []})
        return made

    def step(self, time: int, inputs: InputBundle, max_advance: int) -> Optional[int]:
        self._time = time
        self._emit = [eid for eid, e in self.entities.items() if e.due(time)]
        # time-based: next_step is obligatory
        return time + min(e.next_due(time) - time for e in self.entities.values()) if self.entities else time + 1

    def get_data(self, outputs: dict[str, list[str]]) -> OutputBundle:
        data = {}
        for eid in self._emit:
            if eid in outputs and "out" in outputs[eid]:
                data[eid] = {"out": self.entities[eid].value_at(self._time)}
        return OutputBundle(data=data)


class HybridRampSim(Simulator):
    """Ramp with a trigger input: a setpoint re-anchors the output value."""

    component_type = "hybrid"
    model = "Ramp"

    def __init__(self):
        super().__init__()
        self.entities: dict[str, _RampEntity] = {}
        self.ranges: dict[str, tuple[float, float]] = {}
        self._emit: list[str] = []
        self._time = 0

    def init(self, sid: str, time_resolution: float, **sim_params) -> dict:
        self.sid = sid
        self.time_resolution = time_resolution
        return {
            "api_version": API_VERSION,
            "component_type": self.component_type,
            "models": {
                self.model: {
                    "public": True,
                    "params": ["slope", "step_size", "setpoint_range"],
                    "attrs": ["out", "setpoint"],
                    "trigger": ["setpoint"],
                    "non_persistent": [],
                }
            },
        }

    def create(
        self,
        num: int,
        model: str,
        slope: float = 1.0,
        step_size: int = 1,
        setpoint_range: tuple[float, float] = (-1e9, 1e9),
    ) -> list[dict]:
        if int(step_size) < 1:
            raise ValueError("step_size must be >= 1")
        made = []
        for _ in range(num):
            eid = f"{model}-{len(self.entities)}"
            self.entities[eid] = _RampEntity(eid, float(slope), int(step_size))
            self.ranges[eid] = (float(setpoint_range[0]), float(setpoint_range[1]))
            made.append({"eid": eid, "model": model, "children": []})
        return made

    def step(self, time: int, inputs: InputBundle, max_advance: int) -> Optional[int]:
        self._time = time
        emit = []
        for eid, entity in self.entities.items():
            touched = False
            pairs = inputs.get(eid, {}).get("setpoint")
            if pairs:
                value = pairs[-1][1]  # last writer wins
                lo, hi = self.ranges[eid]
                if isinstance(value, (int, float)) and lo <= value <= hi:
                    entity.anchor_value = float(value)
                    entity.anchor_tick = time
                    touched = True
                else:
                    self.context.warn(
                        f"{self.sid}.{eid}: setpoint {value!r} outside range [{lo}, {hi}], ignored"
                    )
            if touched or entity.due(time):
                emit.append(eid)
        self._emit = emit
        return time + min(e.next_due(time) - time for e in self.entities.values()) if self.entities else None

    def get_data(self, outputs: dict[str, list[str]]) -> OutputBundle:
        data = {}
        for eid in self._emit:
            if eid in outputs and "out" in outputs[eid]:
                data[eid] = {"out": self.entities[eid].value_at(self._time)}
        return OutputBundle(data=data)
