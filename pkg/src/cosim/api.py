"""The simulator contract: meta data, lifecycle calls and data bundles.

A simulator declares itself time-based, event-based or hybrid.  The type
decides whether it self-schedules (next_step), whether incoming data
activates it (trigger attrs) and how long its outputs stay valid
(persistent vs transient attrs).  The same contract is spoken in-process
and over the wire; `SimulatorMeta.from_payload` is the single validation
point for both.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from .errors import MetaError, ProtocolError

TIME_BASED = "time-based"
EVENT_BASED = "event-based"
HYBRID = "hybrid"
COMPONENT_TYPES = (TIME_BASED, EVENT_BASED, HYBRID)

API_VERSION = "1.0"

# inputs: eid -> attr -> [(source_full_id, value), ...]
InputBundle = dict[str, dict[str, list[tuple[str, Any]]]]


@dataclass(frozen=True)
class ModelMeta:
    public: bool
    params: tuple[str, ...]
    attrs: tuple[str, ...]
    trigger: tuple[str, ...]
    non_persistent: tuple[str, ...]

    def to_payload(self) -> dict:
        return {
            "public": self.public,
            "params": list(self.params),
            "attrs": list(self.attrs),
            "trigger": list(self.trigger),
            "non_persistent": list(self.non_persistent),
        }


@dataclass(frozen=True)
class SimulatorMeta:
    api_version: str
    component_type: str
    models: dict[str, ModelMeta]

    @staticmethod
    def from_payload(payload: Any) -> "SimulatorMeta":
        """Validate a raw meta dictionary; raises MetaError naming the rule."""
        if not isinstance(payload, dict):
            raise MetaError("meta must be an object")
        ctype = payload.get("component_type")
        if ctype not in COMPONENT_TYPES:
            raise MetaError(
                f"component_type must be one of {COMPONENT_TYPES}, got {ctype!r}"
            )
        api_version = payload.get("api_version")
        if not isinstance(api_version, str) or not api_version:
            raise MetaError("api_version must be a non-empty string")
        raw_models = payload.get("models")
        if not isinstance(raw_models, dict) or not raw_models:
            raise MetaError("models must be a non-empty mapping")
        models: dict[str, ModelMeta] = {}
        any_public = False
        for name, raw in raw_models.items():
            if not isinstance(raw, dict):
                raise MetaError(f"model {name!r} must be an object")
            public = bool(raw.get("public", False))
            any_public = any_public or public
            params = _name_list(raw.get("params", []), f"model {name!r} params")
            attrs = _name_list(raw.get("attrs", []), f"model {name!r} attrs")
            trigger = _name_list(raw.get("trigger", []), f"model {name!r} trigger")
            non_persistent = _name_list(
                raw.get("non_persistent", []), f"model {name!r} non_persistent"
            )
            attr_set = set(attrs)
            bad = [a for a in trigger if a not in attr_set]
            if bad:
                raise MetaError(
                    f"model {name!r}: trigger must be a subset of attrs, extraneous {bad}"
                )
            bad = [a for a in non_persistent if a not in attr_set]
            if bad:
                raise MetaError(
                    f"model {name!r}: non_persistent must be a subset of attrs, extraneous {bad}"
                )
            if ctype == TIME_BASED and trigger:
                raise MetaError(
                    f"model {name!r}: time-based components must not declare trigger attrs"
                )
            if ctype == TIME_BASED and non_persistent:
                raise MetaError(
                    f"model {name!r}: time-based components must not declare non_persistent attrs"
                )
            models[name] = ModelMeta(public, params, attrs, trigger, non_persistent)
        if not any_public:
            raise MetaError("at least one model must be public")
        return SimulatorMeta(api_version, ctype, models)

    def to_payload(self) -> dict:
        return {
            "api_version": self.api_version,
            "component_type": self.component_type,
            "models": {name: m.to_payload() for name, m in self.models.items()},
        }

    def effective_trigger(self, model: str) -> frozenset[str]:
        """Input attrs whose data arrival activates the simulator.

        Event-based components trigger on every attr regardless of the
        declared list; time-based never trigger; hybrid as declared.
        """
        m = self.models[model]
        if self.component_type == EVENT_BASED:
            return frozenset(m.attrs)
        if self.component_type == TIME_BASED:
            return frozenset()
        return frozenset(m.trigger)

    def effective_non_persistent(self, model: str) -> frozenset[str]:
        """Output attrs valid only at their stated time (never cached)."""
        m = self.models[model]
        if self.component_type == EVENT_BASED:
            return frozenset(m.attrs)
        if self.component_type == TIME_BASED:
            return frozenset()
        return frozenset(m.non_persistent)


@dataclass(frozen=True)
class EntityDescriptor:
    eid: str
    model: str
    children: tuple["EntityDescriptor", ...] = ()

    def to_payload(self) -> dict:
        return {
            "eid": self.eid,
            "model": self.model,
            "children": [c.to_payload() for c in self.children],
        }

    @staticmethod
    def from_payload(payload: Any) -> "EntityDescriptor":
        if not isinstance(payload, dict) or "eid" not in payload or "model" not in payload:
            raise ProtocolError(f"entity descriptor must carry eid and model: {payload!r}")
        children = tuple(
            EntityDescriptor.from_payload(c) for c in payload.get("children", [])
        )
        return EntityDescriptor(str(payload["eid"]), str(payload["model"]), children)


@dataclass
class OutputBundle:
    """Data returned by get_data; absence of an attr means no output.

    output_time dates the whole bundle; when absent it defaults to the
    current step's tick.
    """

    data: dict[str, dict[str, Any]] = field(default_factory=dict)
    output_time: Optional[int] = None

    def to_payload(self) -> dict:
        return {"data": self.data, "output_time": self.output_time}

    @staticmethod
    def from_payload(payload: Any) -> "OutputBundle":
        if isinstance(payload, OutputBundle):
            return payload
        if not isinstance(payload, dict):
            raise ProtocolError(f"get_data result must be an object, got {payload!r}")
        data = payload.get("data", {})
        if not isinstance(data, dict):
            raise ProtocolError("get_data result 'data' must be a mapping")
        out_time = payload.get("output_time")
        if out_time is not None and (not isinstance(out_time, int) or isinstance(out_time, bool)):
            raise ProtocolError(f"output_time must be an integer tick or null, got {out_time!r}")
        return OutputBundle(data=data, output_time=out_time)


@dataclass(frozen=True)
class StepResult:
    next_step: Optional[int] = None


class SimContext:
    """Host services handed to an in-process simulator at attach time.

    warn() surfaces a diagnostic into the run trace; set_event() asks the
    scheduler for an activation (soft real-time runs only).
    """

    def __init__(
        self,
        warn: Callable[[str], None] | None = None,
        set_event: Callable[[int], None] | None = None,
    ):
        self._warn = warn
        self._set_event = set_event

    def warn(self, message: str) -> None:
        if self._warn is not None:
            self._warn(message)

    def set_event(self, event_time: int) -> None:
        if self._set_event is None:
            raise ProtocolError("set_event channel is not connected")
        self._set_event(event_time)


class Simulator:
    """Base class for in-process simulators.

    Subclasses override the five lifecycle calls.  `init` must return a raw
    meta payload (dict); validation happens host-side so in-process and
    remote simulators are held to the identical contract.
    """

    def __init__(self):
        self.sid: str | None = None
        self.context: SimContext = SimContext()

    def bind(self, context: SimContext) -> None:
        self.context = context

    def init(self, sid: str, time_resolution: float, **sim_params) -> dict:
        raise NotImplementedError

    def create(self, num: int, model: str, **model_params) -> list[dict]:
        raise NotImplementedError

    def step(self, time: int, inputs: InputBundle, max_advance: int) -> Optional[int]:
        raise NotImplementedError

    def get_data(self, outputs: dict[str, list[str]]) -> OutputBundle | dict:
        return OutputBundle()

    def stop(self) -> None:
        pass


def _name_list(raw: Any, what: str) -> tuple[str, ...]:
    if not isinstance(raw, (list, tuple)):
        raise MetaError(f"{what} must be a list of names")
    out = []
    for item in raw:
        if not isinstance(item, str) or not item:
            raise MetaError(f"{what} must contain non-empty strings, got {item!r}")
        out.append(item)
    if len(set(out)) != len(out):
        raise MetaError(f"{what} must not contain duplicates")
    return tuple(out)
