"""Deterministic orchestration engine for hybrid co-simulation.

Couples time-stepped, event-based and hybrid simulation components under
one superdense-time scheduler with persistence semantics, max_advance,
same-time loops and soft real-time external events.
"""

from .api import (
    EVENT_BASED,
    HYBRID,
    TIME_BASED,
    EntityDescriptor,
    ModelMeta,
    OutputBundle,
    SimContext,
    Simulator,
    SimulatorMeta,
    StepResult,
)
from .errors import (
    CosimError,
    ExternalEventError,
    GraphError,
    LoopLimitError,
    MetaError,
    ProtocolError,
    ScenarioError,
    WireError,
)
from .scenario import Entity, SimulatorHandle, World
from .scheduler import RunResult, RunStatus
from .timebase import SuperdenseTime, sdt_compare, seconds_to_ticks, ticks_to_seconds
from .trace import TraceLog, TraceRecord, read_jsonl, replay_check, write_jsonl

__version__ = "0.1.0"

__all__ = [
    "World", "Entity", "SimulatorHandle", "RunResult", "RunStatus",
    "Simulator", "SimulatorMeta", "ModelMeta", "EntityDescriptor",
    "OutputBundle", "StepResult", "SimContext",
    "TIME_BASED", "EVENT_BASED", "HYBRID",
    "SuperdenseTime", "sdt_compare", "ticks_to_seconds", "seconds_to_ticks",
    "TraceRecord", "TraceLog", "read_jsonl", "write_jsonl", "replay_check",
    "CosimError", "MetaError", "ScenarioError", "GraphError",
    "ProtocolError", "LoopLimitError", "WireError", "ExternalEventError",
]
