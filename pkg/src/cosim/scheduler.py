"""The deterministic superdense-time scheduler.

One single-threaded loop pops activations ordered by
(tick, iteration, rank, sid), assembles inputs under persistence
semantics, computes max_advance from ancestor progress, steps the
simulator, and propagates outputs: persistent values into per-source
caches, trigger data as deliveries that activate their destinations
either at the same instant (strong edge, rank order), at the next
same-time-loop iteration (weak edge) or at a future tick (dated output).

Soft real time: with an rt_factor, each new tick waits for its wall-clock
deadline, and external events are absorbed from a thread-safe inbox;
deadline overruns are recorded, never fatal.
"""

from __future__ import annotations

import heapq
import logging
import queue
import threading
import time as _time
from dataclasses import dataclass, field
from typing import Any, Optional

from .api import EVENT_BASED, HYBRID, TIME_BASED, OutputBundle
from .channel import SimRequestError
from .errors import ExternalEventError, LoopLimitError, ProtocolError
from .graph import DependencyGraph
from .protocol import inputs_to_wire
from .timebase import SuperdenseTime, seconds_to_ticks
from .trace import (
    ACTION_ERROR,
    ACTION_GET_DATA,
    ACTION_INJECT,
    ACTION_SET_EVENT,
    ACTION_STEP,
    CAUSE_EXTERNAL,
    CAUSE_SELF,
    CAUSE_TRIGGERED,
    TraceLog,
    TraceRecord,
    digest,
)

log = logging.getLogger("cosim.scheduler")

PACE_SLICE = 0.02  # rt sleep granularity; inbox is drained at every wakeup
OVERRUN_EPSILON = 0.005  # wakeup jitter below this is not an overrun


@dataclass
class ExternalEvent:
    sid: str
    scheduled_tick: int
    source: str  # "inject" (operator) or "set_event" (simulator)
    requested_tick: int


class RunStatus:
    """Thread-shared view of a run for the control endpoint."""

    def __init__(self, until: int | None = None, rt_factor: float | None = None):
        self._lock = threading.Lock()
        self.state = "idle"
        self.current_tick = 0
        self.until = until
        self.rt_factor = rt_factor
        self.error: str | None = None

    def update(self, **kw) -> None:
        with self._lock:
            for key, value in kw.items():
                setattr(self, key, value)

    def snapshot(self) -> dict:
        with self._lock:
            return {
                "state": self.state,
                "current_tick": self.current_tick,
                "until": self.until,
                "rt_factor": self.rt_factor,
                "error": self.error,
            }


@dataclass
class RunResult:
    records: list[TraceRecord]
    dataflow: list[tuple[str, int, int, dict]]
    until: int
    step_counts: dict[str, int]


@dataclass
class _SimRuntime:
    handle: Any
    progress: Optional[SuperdenseTime] = None
    next_self: Optional[int] = None
    # (eid, attr) -> (value, produced_at) for persistent attrs only
    output_cache: dict[tuple[str, str], tuple[Any, int]] = field(default_factory=dict)
    # superdense time -> eid -> attr -> [(src_full_id, value), ...]
    pending_inputs: dict[SuperdenseTime, dict] = field(default_factory=dict)
    step_calls: int = 0


class Scheduler:
    def __init__(
        self,
        world,
        graph: DependencyGraph,
        until: int,
        trace_path=None,
        trace: TraceLog | None = None,
        inbox: "queue.Queue[ExternalEvent] | None" = None,
        status: RunStatus | None = None,
    ):
        self.world = world
        self.graph = graph
        self.until = until
        self.rt_factor = world.rt_factor
        self.trace = trace if trace is not None else TraceLog(trace_path)
        self.inbox: queue.Queue[ExternalEvent] = inbox if inbox is not None else queue.Queue()
        self.status = status if status is not None else RunStatus(until, self.rt_factor)
        self.status.update(until=until, rt_factor=self.rt_factor)
        self.runtimes = {sid: _SimRuntime(handle=world.handles[sid]) for sid in graph.sids}
        self.dataflow: list[tuple[str, int, int, dict]] = []
        self._heap: list[tuple[int, int, int, str]] = []
        self._pending: dict[tuple[str, tuple[int, int]], set[str]] = {}
        self._last_popped: Optional[SuperdenseTime] = None
        self._overrun_done_tick: Optional[int] = None
        self._wall_start: Optional[float] = None
        # per destination sim: pulled persistent input specs in canonical order
        self._pull_specs = self._build_pull_specs()
        self._out_requests = self._build_out_requests()

    # -- public control (any thread) -----------------------------------

    def external_event(self, sid: str, event_time, source: str = "inject") -> int:
        """Validate and enqueue an external activation; returns the scheduled tick."""
        if self.rt_factor is None:
            raise ExternalEventError(
                "external events require real-time pacing (rt_factor)", reason="rt_disabled"
            )
        if self.status.snapshot()["state"] != "running":
            raise ExternalEventError("no active run", reason="not_running")
        if sid not in self.runtimes:
            raise ExternalEventError(f"unknown simulator {sid!r}", reason="unknown_sid")
        if not isinstance(event_time, int) or isinstance(event_time, bool) or event_time < 0:
            raise ExternalEventError(
                f"event time must be a non-negative integer tick, got {event_time!r}",
                reason="bad_time",
            )
        if event_time >= self.until:
            raise ExternalEventError(
                f"event time {event_time} is beyond until={self.until}", reason="beyond_until"
            )
        scheduled = max(event_time, self._wall_tick() + 1)
        if scheduled >= self.until:
            raise ExternalEventError(
                f"event for tick {event_time} can no longer be scheduled before until={self.until}",
                reason="beyond_until",
            )
        self.inbox.put(ExternalEvent(sid, scheduled, source, event_time))
        return scheduled

    # -- main loop ------------------------------------------------------

    def run(self) -> RunResult:
        self._wall_start = _time.monotonic()
        self.status.update(state="running")
        self.world._set_event_hook = lambda sid, t, source: self.external_event(sid, t, source)
        self.world._warn_hook = self._warn
        try:
            self._initialize_queue()
            while True:
                self._drain_inbox()
                head = self._peek()
                if head is None or head[0] >= self.until:
                    if self.rt_factor is not None and self._pace_until_end():
                        continue
                    break
                if self.rt_factor is not None:
                    deadline = self._deadline(head[0])
                    now = _time.monotonic()
                    if now < deadline:
                        _time.sleep(min(PACE_SLICE, deadline - now))
                        continue
                self._process(self._pop())
            self.status.update(state="done")
            return RunResult(
                records=self.trace.snapshot(),
                dataflow=self.dataflow,
                until=self.until,
                step_counts={sid: rt.step_calls for sid, rt in self.runtimes.items()},
            )
        except LoopLimitError as exc:
            self._record_error(str(exc))
            self.status.update(state="failed", error=f"loop_limit: {exc}")
            raise
        except (ProtocolError, SimRequestError) as exc:
            self._record_error(str(exc), sid=getattr(exc, "sid", None))
            self.status.update(state="failed", error=f"protocol: {exc}")
            raise
        finally:
            self.world._set_event_hook = None
            self.world._warn_hook = None
            self.trace.close()
            for sid in self.graph.sids:
                self.runtimes[sid].handle.stop()

    # -- queue ----------------------------------------------------------

    def _initialize_queue(self) -> None:
        for sid in self.graph.sids:
            meta = self.world.handles[sid].meta
            if meta.component_type in (TIME_BASED, HYBRID):
                self._enqueue(sid, SuperdenseTime(0, 0), CAUSE_SELF)

    def _enqueue(self, sid: str, when: SuperdenseTime, cause: str) -> None:
        key = (sid, when.as_pair())
        causes = self._pending.get(key)
        if causes is None:
            self._pending[key] = {cause}
            heapq.heappush(self._heap, (when.tick, when.iteration, self.graph.rank[sid], sid))
        else:
            causes.add(cause)

    def _peek(self) -> tuple[int, int, int, str] | None:
        while self._heap:
            tick, iteration, rank, sid = self._heap[0]
            if (sid, (tick, iteration)) in self._pending:
                return self._heap[0]
            heapq.heappop(self._heap)  # stale duplicate from coalescing
        return None

    def _pop(self) -> tuple[SuperdenseTime, str, tuple[str, ...]]:
        head = self._peek()
        assert head is not None
        tick, iteration, _rank, sid = heapq.heappop(self._heap)
        causes = self._pending.pop((sid, (tick, iteration)))
        return SuperdenseTime(tick, iteration), sid, tuple(sorted(causes))

    # -- one activation ---------------------------------------------------

    def _process(self, popped: tuple[SuperdenseTime, str, tuple[str, ...]]) -> None:
        when, sid, causes = popped
        self._last_popped = when
        self.status.update(current_tick=when.tick)
        overrun = self._check_overrun(when.tick)
        runtime = self.runtimes[sid]
        handle = runtime.handle

        if runtime.progress is not None and not when > runtime.progress:
            raise ProtocolError(
                f"{sid}: activation at {when.as_pair()} does not advance past {runtime.progress.as_pair()}",
                sid=sid,
            )

        inputs = self._collect_inputs(sid, when)
        wire_inputs = inputs_to_wire(inputs)
        max_advance = self._compute_max_advance(sid, when)

        try:
            next_step = handle.step(when.tick, inputs, max_advance)
        except SimRequestError as exc:
            raise ProtocolError(f"{sid}: step failed: {exc}", sid=sid) from exc
        runtime.step_calls += 1
        self._validate_next_step(sid, when, next_step)
        runtime.progress = when
        self.dataflow.append((sid, when.tick, when.iteration, wire_inputs))
        self.trace.append(
            tick=when.tick, iteration=when.iteration, sid=sid, action=ACTION_STEP,
            inputs_digest=digest(wire_inputs), max_advance=max_advance,
            next_step=next_step, causes=causes,
            detail=f"rt_overrun_s={overrun:.3f}" if overrun is not None else None,
        )
        if next_step is not None:
            runtime.next_self = next_step
            self._enqueue(sid, SuperdenseTime(next_step, 0), CAUSE_SELF)

        request = self._out_requests[sid]
        try:
            bundle = handle.get_data(request)
        except SimRequestError as exc:
            raise ProtocolError(f"{sid}: get_data failed: {exc}", sid=sid) from exc
        self.trace.append(
            tick=when.tick, iteration=when.iteration, sid=sid, action=ACTION_GET_DATA,
            outputs_digest=digest(bundle.to_payload()), causes=causes,
        )
        self._process_outputs(sid, when, bundle)

    def _collect_inputs(self, sid: str, when: SuperdenseTime) -> dict:
        bundle = self.runtimes[sid].pending_inputs.pop(when, {})
        for dest_eid, dest_attr, src_sid, src_eid, src_attr, src_full in self._pull_specs[sid]:
            cached = self.runtimes[src_sid].output_cache.get((src_eid, src_attr))
            if cached is not None:
                value, produced_at = cached
                if produced_at <= when.tick:
                    bundle.setdefault(dest_eid, {}).setdefault(dest_attr, []).append((src_full, value))
        return bundle

    def _compute_max_advance(self, sid: str, when: SuperdenseTime) -> int:
        """Largest tick this simulator may precompute without risking new inputs.

        min(until, earliest pending ancestor activation or future delivery - 1);
        may be when.tick - 1 (down to -1) inside a same-time loop, meaning
        same-tick input is still possible.
        """
        candidates = []
        ancestors = self.graph.ancestors[sid]
        if sid in ancestors:
            # on a cycle, this step's own outputs may circulate straight back
            candidates.append(when.tick)
        for a_sid, (a_tick, _a_iter) in self._pending:
            if a_sid in ancestors:
                candidates.append(a_tick)
        for d_when in self.runtimes[sid].pending_inputs:
            if d_when > when:
                candidates.append(d_when.tick)
        if not candidates:
            return self.until
        return min(self.until, min(candidates) - 1)

    def _validate_next_step(self, sid: str, when: SuperdenseTime, next_step) -> None:
        ctype = self.world.handles[sid].meta.component_type
        if next_step is None:
            if ctype == TIME_BASED:
                raise ProtocolError(
                    f"{sid}: time-based component must return next_step", sid=sid
                )
            return
        if not isinstance(next_step, int) or isinstance(next_step, bool):
            raise ProtocolError(f"{sid}: next_step must be an integer tick, got {next_step!r}", sid=sid)
        if next_step <= when.tick:
            raise ProtocolError(
                f"{sid}: next_step {next_step} must be greater than current tick {when.tick}", sid=sid
            )

    def _process_outputs(self, sid: str, when: SuperdenseTime, bundle: OutputBundle) -> None:
        meta = self.world.handles[sid].meta
        handle = self.world.handles[sid]
        output_tick = bundle.output_time if bundle.output_time is not None else when.tick
        if bundle.data and output_tick < when.tick:
            raise ProtocolError(
                f"{sid}: output_time {output_tick} predates step tick {when.tick}", sid=sid
            )
        for eid, attr_map in bundle.data.items():
            model = handle.entities[eid]
            transient = meta.effective_non_persistent(model)
            for attr, value in attr_map.items():
                if attr not in transient:
                    self.runtimes[sid].output_cache[(eid, attr)] = (value, output_tick)
                for conn in self.graph.outgoing(sid, eid, attr):
                    dest_handle = self.world.handles[conn.dest_sid]
                    dest_model = dest_handle.entities[conn.dest_eid]
                    if conn.dest_attr not in dest_handle.meta.effective_trigger(dest_model):
                        continue  # non-trigger attrs pull from the cache at their own steps
                    if output_tick > when.tick:
                        target = SuperdenseTime(output_tick, 0)
                    elif conn.weak:
                        target = when.next_iteration()
                        if target.iteration >= self.world.max_loop_iterations:
                            members = self.graph.loop_members(sid, conn.dest_sid)
                            raise LoopLimitError(
                                f"same-time loop at tick {when.tick} reached "
                                f"max_loop_iterations={self.world.max_loop_iterations}; "
                                f"members: {members}",
                                members=members, tick=when.tick,
                            )
                    else:
                        target = when
                    dest_rt = self.runtimes[conn.dest_sid]
                    slot = dest_rt.pending_inputs.setdefault(target, {})
                    slot.setdefault(conn.dest_eid, {}).setdefault(conn.dest_attr, []).append(
                        (conn.src_full_id, value)
                    )
                    self._enqueue(conn.dest_sid, target, CAUSE_TRIGGERED)

    # -- external events and pacing --------------------------------------

    def _drain_inbox(self) -> None:
        while True:
            try:
                event = self.inbox.get_nowait()
            except queue.Empty:
                return
            floor = self._last_popped.tick + 1 if self._last_popped is not None else 0
            effective = max(event.scheduled_tick, floor)
            now_when = self._last_popped or SuperdenseTime(0, 0)
            if effective >= self.until:
                self.trace.append(
                    tick=now_when.tick, iteration=now_when.iteration, sid=event.sid,
                    action=ACTION_ERROR,
                    detail=f"external event for tick {event.scheduled_tick} dropped: beyond until={self.until}",
                )
                continue
            self.trace.append(
                tick=now_when.tick, iteration=now_when.iteration, sid=event.sid,
                action=ACTION_INJECT if event.source == "inject" else ACTION_SET_EVENT,
                next_step=effective,
                detail=f"requested={event.requested_tick}",
            )
            self._enqueue(event.sid, SuperdenseTime(effective, 0), CAUSE_EXTERNAL)

    def _deadline(self, tick: int) -> float:
        assert self._wall_start is not None
        return self._wall_start + tick * self.world.time_resolution * self.rt_factor

    def _wall_tick(self) -> int:
        if self._wall_start is None or self.rt_factor is None:
            return 0
        elapsed = max(0.0, _time.monotonic() - self._wall_start)
        return seconds_to_ticks(elapsed / self.rt_factor, self.world.time_resolution)

    def _pace_until_end(self) -> bool:
        """Wait out the wall-clock window up to until's deadline; True to re-loop."""
        now = _time.monotonic()
        end = self._deadline(self.until)
        if now >= end:
            return False
        _time.sleep(min(PACE_SLICE, end - now))
        return True

    def _check_overrun(self, tick: int) -> float | None:
        if self.rt_factor is None or tick == self._overrun_done_tick:
            return None
        self._overrun_done_tick = tick
        slack = self._deadline(tick) - _time.monotonic()
        return -slack if slack < -OVERRUN_EPSILON else None

    # -- misc -------------------------------------------------------------

    def _build_pull_specs(self) -> dict[str, list[tuple]]:
        specs: dict[str, list[tuple]] = {sid: [] for sid in self.graph.sids}
        for conn in self.graph.connections:
            dest_handle = self.world.handles[conn.dest_sid]
            dest_model = dest_handle.entities.get(conn.dest_eid)
            if dest_model is None:
                raise ProtocolError(f"connection references unknown entity {conn.dest_full_id}")
            if conn.dest_attr in dest_handle.meta.effective_trigger(dest_model):
                continue
            specs[conn.dest_sid].append((
                conn.dest_eid, conn.dest_attr, conn.src_sid, conn.src_eid,
                conn.src_attr, conn.src_full_id,
            ))
        for sid in specs:
            specs[sid].sort()
        return specs

    def _build_out_requests(self) -> dict[str, dict[str, list[str]]]:
        requests: dict[str, dict[str, list[str]]] = {sid: {} for sid in self.graph.sids}
        for conn in self.graph.connections:
            handle = self.world.handles[conn.src_sid]
            model = handle.entities.get(conn.src_eid)
            if model is None:
                raise ProtocolError(f"connection references unknown entity {conn.src_full_id}")
            attrs = requests[conn.src_sid].setdefault(conn.src_eid, [])
            if conn.src_attr not in attrs:
                attrs.append(conn.src_attr)
        # canonical order: declared attr order per model
        for sid, by_eid in requests.items():
            meta = self.world.handles[sid].meta
            for eid, attrs in by_eid.items():
                declared = meta.models[self.world.handles[sid].entities[eid]].attrs
                attrs.sort(key=declared.index)
        return requests

    def _warn(self, sid: str, message: str) -> None:
        now_when = self._last_popped or SuperdenseTime(0, 0)
        self.trace.append(
            tick=now_when.tick, iteration=now_when.iteration, sid=sid,
            action=ACTION_ERROR, detail=f"warning: {message}",
        )

    def _record_error(self, message: str, sid: str | None = None) -> None:
        now_when = self._last_popped or SuperdenseTime(0, 0)
        self.trace.append(
            tick=now_when.tick, iteration=now_when.iteration, sid=sid or "",
            action=ACTION_ERROR, detail=message,
        )
