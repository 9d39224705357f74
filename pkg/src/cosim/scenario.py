"""Scenario construction: the World, simulator attachment and connections.

A World is configured once (time resolution, loop iteration limit,
optional real-time factor), simulators are attached (builtin in-process,
spawned process, or awaited TCP connection), entities instantiated,
attribute connections recorded, and finally `run(until)` hands everything
to the scheduler.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Optional

from .api import HYBRID, TIME_BASED, OutputBundle, SimContext, Simulator, SimulatorMeta
from .channel import InProcessConnection, SimRequestError
from .errors import ProtocolError, ScenarioError
from .graph import Connection, DependencyGraph, build_graph
from .protocol import inputs_to_wire
from .remote import HANDSHAKE_TIMEOUT, PeerConnection, SimServer, SpawnedProcess
from .sims import make_builtin
from .timebase import DEFAULT_TIME_RESOLUTION, validate_resolution, validate_tick

log = logging.getLogger("cosim.scenario")

DEFAULT_MAX_LOOP_ITERATIONS = 100


@dataclass(frozen=True)
class Entity:
    sid: str
    eid: str
    model: str
    children: tuple["Entity", ...] = ()

    @property
    def full_id(self) -> str:
        return f"{self.sid}.{self.eid}"


class SimulatorHandle:
    """Scenario-level face of one attached simulator."""

    def __init__(
        self,
        world: "World",
        sid: str,
        connection,
        meta: SimulatorMeta,
        instance: Simulator | None = None,
        process: SpawnedProcess | None = None,
        remote: bool = False,
    ):
        self.world = world
        self.sid = sid
        self.connection = connection
        self.meta = meta
        self.instance = instance
        self.process = process
        self.remote = remote
        self.entities: dict[str, str] = {}  # eid -> model
        self._stopped = False

    def create(self, num: int, model: str, **model_params) -> list[Entity]:
        if not isinstance(num, int) or num <= 0:
            raise ScenarioError(f"create num must be a positive integer, got {num!r}")
        if model not in self.meta.models:
            raise ScenarioError(f"{self.sid}: unknown model {model!r}")
        if not self.meta.models[model].public:
            raise ScenarioError(f"{self.sid}: model {model!r} is not public")
        raw = self.connection.request(
            "create", {"num": num, "model": model, "model_params": model_params}
        )
        if not isinstance(raw, list) or len(raw) != num:
            raise ProtocolError(
                f"{self.sid}: create returned {len(raw) if isinstance(raw, list) else type(raw).__name__},"
                f" expected {num} entities", sid=self.sid,
            )
        made = []
        for item in raw:
            if not isinstance(item, dict) or "eid" not in item:
                raise ProtocolError(f"{self.sid}: malformed entity descriptor {item!r}", sid=self.sid)
            eid = str(item["eid"])
            if eid in self.entities:
                raise ProtocolError(f"{self.sid}: duplicate eid {eid!r}", sid=self.sid)
            emodel = str(item.get("model", model))
            if emodel not in self.meta.models:
                raise ProtocolError(f"{self.sid}: entity {eid!r} has unknown model {emodel!r}", sid=self.sid)
            self.entities[eid] = emodel
            entity = Entity(self.sid, eid, emodel)
            self.world._register_entity(entity)
            made.append(entity)
        return made

    def step(self, time: int, inputs: dict, max_advance: int) -> Optional[int]:
        payload_inputs = inputs_to_wire(inputs) if self.remote else inputs
        result = self.connection.request(
            "step", {"time": time, "inputs": payload_inputs, "max_advance": max_advance}
        )
        if not isinstance(result, dict) or "next_step" not in result:
            raise ProtocolError(f"{self.sid}: step result must carry next_step", sid=self.sid)
        return result["next_step"]

    def get_data(self, request: dict[str, list[str]]) -> OutputBundle:
        raw = self.connection.request("get_data", {"outputs": request})
        try:
            bundle = OutputBundle.from_payload(raw)
        except ProtocolError as exc:
            raise ProtocolError(f"{self.sid}: {exc}", sid=self.sid) from exc
        for eid, attr_map in bundle.data.items():
            if eid not in request:
                raise ProtocolError(f"{self.sid}: get_data returned unrequested entity {eid!r}", sid=self.sid)
            extra = [a for a in attr_map if a not in request[eid]]
            if extra:
                raise ProtocolError(
                    f"{self.sid}: get_data returned unrequested attrs {extra} for {eid!r}", sid=self.sid
                )
        return bundle

    def stop(self) -> None:
        if self._stopped:
            return
        self._stopped = True
        try:
            self.connection.request("stop", {})
        except Exception as exc:
            log.debug("stop of %r failed: %s", self.sid, exc)
        if self.process is not None:
            self.process.close()


class World:
    """Scenario container; immutable once run() begins."""

    def __init__(
        self,
        time_resolution: float = DEFAULT_TIME_RESOLUTION,
        max_loop_iterations: int = DEFAULT_MAX_LOOP_ITERATIONS,
        rt_factor: float | None = None,
        listen_host: str = "127.0.0.1",
        listen_port: int | None = None,
    ):
        self.time_resolution = validate_resolution(time_resolution)
        if not isinstance(max_loop_iterations, int) or max_loop_iterations < 1:
            raise ScenarioError(f"max_loop_iterations must be a positive integer, got {max_loop_iterations!r}")
        self.max_loop_iterations = max_loop_iterations
        if rt_factor is not None and not rt_factor > 0:
            raise ScenarioError(f"rt_factor must be positive, got {rt_factor!r}")
        self.rt_factor = rt_factor
        self.listen_host = listen_host
        self.listen_port = listen_port
        self.handles: dict[str, SimulatorHandle] = {}
        self.connections: list[Connection] = []
        self._entities: dict[str, Entity] = {}
        self._server: SimServer | None = None
        self._running = False
        self._warn_hook = None  # set by the scheduler while a run is active
        self._set_event_hook = None

    # -- attachment ---------------------------------------------------

    def add_simulator(
        self,
        sid: str,
        builtin: str | None = None,
        sim: Simulator | None = None,
        spawn: list[str] | None = None,
        listen: bool = False,
        params: dict | None = None,
        handshake_timeout: float = HANDSHAKE_TIMEOUT,
    ) -> SimulatorHandle:
        if sid in self.handles:
            raise ScenarioError(f"duplicate sid {sid!r}")
        if sum(x is not None and x is not False for x in (builtin, sim, spawn, listen)) != 1:
            raise ScenarioError("exactly one of builtin/sim/spawn/listen must be given")
        params = params or {}
        process = None
        if builtin is not None or sim is not None:
            instance = sim if sim is not None else make_builtin(builtin)
            connection = InProcessConnection(instance)
            connection.bind_context(SimContext(
                warn=lambda message, _sid=sid: self._warn(_sid, message),
                set_event=lambda t, _sid=sid: self._set_event(_sid, t),
            ))
            remote = False
        else:
            server = self.ensure_server()
            if spawn is not None:
                process = SpawnedProcess(spawn, sid, server.host, server.port)
            connection = server.wait_for(sid, timeout=handshake_timeout)
            instance = None
            remote = True
        raw_meta = connection.request(
            "init", {"sid": sid, "time_resolution": self.time_resolution, "sim_params": params}
        )
        meta = SimulatorMeta.from_payload(raw_meta)
        handle = SimulatorHandle(self, sid, connection, meta, instance, process, remote)
        self.handles[sid] = handle
        return handle

    def ensure_server(self) -> SimServer:
        if self._server is None:
            self._server = SimServer(self.listen_host, self.listen_port or 0)
            self._server.set_event_handler = self._remote_set_event
        return self._server

    # -- wiring -------------------------------------------------------

    def connect(self, src, src_attr: str, dest, dest_attr: str, weak: bool = False) -> None:
        if self._running:
            raise ScenarioError("cannot modify connections during a run")
        src_e = self._resolve(src)
        dest_e = self._resolve(dest)
        src_meta = self.handles[src_e.sid].meta
        dest_meta = self.handles[dest_e.sid].meta
        if src_attr not in src_meta.models[src_e.model].attrs:
            raise ScenarioError(f"{src_e.full_id}: model {src_e.model!r} has no attr {src_attr!r}")
        if dest_attr not in dest_meta.models[dest_e.model].attrs:
            raise ScenarioError(f"{dest_e.full_id}: model {dest_e.model!r} has no attr {dest_attr!r}")
        if weak and dest_attr not in dest_meta.effective_trigger(dest_e.model):
            raise ScenarioError(
                f"weak connection into {dest_e.full_id}.{dest_attr} requires a trigger attr"
            )
        conn = Connection(
            src_sid=src_e.sid, src_eid=src_e.eid, src_attr=src_attr,
            dest_sid=dest_e.sid, dest_eid=dest_e.eid, dest_attr=dest_attr,
            weak=weak,
        )
        if conn in self.connections:
            raise ScenarioError(
                f"duplicate connection {src_e.full_id}.{src_attr} -> {dest_e.full_id}.{dest_attr}"
            )
        self.connections.append(conn)

    def validate_graph(self) -> DependencyGraph:
        return build_graph(list(self.handles), self.connections)

    # -- execution ----------------------------------------------------

    def run(
        self,
        until: int,
        trace_path=None,
        trace=None,
        inbox=None,
        status=None,
        scheduler_hook=None,
    ):
        from .scheduler import Scheduler  # local import: scheduler depends on this module

        validate_tick(until, "until")
        if until <= 0:
            raise ScenarioError(f"until must be > 0, got {until}")
        graph = self.validate_graph()
        self._running = True
        try:
            scheduler = Scheduler(
                self, graph, until,
                trace_path=trace_path, trace=trace, inbox=inbox, status=status,
            )
            if scheduler_hook is not None:
                scheduler_hook(scheduler)
            return scheduler.run()
        finally:
            self._running = False

    def stop_all(self) -> None:
        for handle in self.handles.values():
            handle.stop()

    def shutdown(self) -> None:
        self.stop_all()
        if self._server is not None:
            self._server.close()
            self._server = None

    # -- plumbing -----------------------------------------------------

    def _resolve(self, ref) -> Entity:
        if isinstance(ref, Entity):
            if ref.full_id not in self._entities:
                raise ScenarioError(f"unknown entity {ref.full_id!r}")
            return ref
        if isinstance(ref, str):
            try:
                return self._entities[ref]
            except KeyError:
                raise ScenarioError(f"unknown entity {ref!r}") from None
        raise ScenarioError(f"entity reference must be Entity or 'sid.eid' string, got {ref!r}")

    def _register_entity(self, entity: Entity) -> None:
        self._entities[entity.full_id] = entity

    def entity(self, full_id: str) -> Entity:
        return self._resolve(full_id)

    def _warn(self, sid: str, message: str) -> None:
        hook = self._warn_hook
        if hook is not None:
            hook(sid, message)
        else:
            log.warning("[%s] %s", sid, message)

    def _set_event(self, sid: str, event_time) -> None:
        hook = self._set_event_hook
        if hook is None:
            from .errors import ExternalEventError

            raise ExternalEventError("no active run accepts external events")
        hook(sid, event_time, "set_event")

    def _remote_set_event(self, sid: str, event_time) -> None:
        hook = self._set_event_hook
        if hook is None:
            log.warning("set_event from %r dropped: no active run", sid)
            return
        try:
            hook(sid, event_time, "set_event")
        except Exception as exc:
            log.warning("set_event from %r rejected: %s", sid, exc)
