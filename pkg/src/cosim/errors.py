"""Exception hierarchy for the engine.

Every failure that aborts a run maps to one of these; the CLI translates
them into exit codes (loop limit -> 2, protocol violations -> 3).
"""

from __future__ import annotations


class CosimError(Exception):
    """Base class for all engine errors."""


class MetaError(CosimError):
    """A simulator returned meta data violating the model contract."""


class ScenarioError(CosimError):
    """Invalid scenario construction (unknown entity, duplicate sid, ...)."""


class GraphError(ScenarioError):
    """Dependency graph validation failed (strong cycle without weak edge)."""

    def __init__(self, message: str, cycle: list[str] | None = None):
        super().__init__(message)
        self.cycle = cycle or []


class ProtocolError(CosimError):
    """A simulator broke the component API contract mid-run."""

    def __init__(self, message: str, sid: str | None = None):
        super().__init__(message)
        self.sid = sid


class LoopLimitError(CosimError):
    """A same-time loop reached max_loop_iterations without terminating."""

    def __init__(self, message: str, members: list[str], tick: int):
        super().__init__(message)
        self.members = members
        self.tick = tick


class WireError(CosimError):
    """Malformed frame or transport failure on the wire protocol."""

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message)
        self.offset = offset


class ExternalEventError(CosimError):
    """An external event injection was rejected.

    reason is one of: rt_disabled, not_running, unknown_sid, bad_time,
    beyond_until.
    """

    def __init__(self, message: str, reason: str = "rejected"):
        super().__init__(message)
        self.reason = reason
