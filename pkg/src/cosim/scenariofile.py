"""Scenario document loading and validation.

Schema (JSON):
    {
      "world": {"time_resolution": 1.0, "max_loop_iterations": 100,
                 "rt_factor": null, "until": 100},
      "simulators": [{"sid": "...", "builtin": "ramp", "params": {...}}
                     | {"sid": "...", "spawn": ["cmd", ...], "params": {...}}
                     | {"sid": "...", "listen": true, "params": {...}}],
      "entities": [{"sid": "...", "model": "Ramp", "num": 1, "params": {...}}],
      "connections": [{"src": "sid.eid", "src_attr": "out",
                        "dest": "sid.eid", "dest_attr": "in", "weak": false}]
    }

Validation failures carry the JSON-pointer path of the offending element.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ScenarioError
from .scenario import World


class ScenarioFileError(ScenarioError):
    def __init__(self, pointer: str, message: str):
        super().__init__(f"{pointer}: {message}")
        self.pointer = pointer


@dataclass
class ScenarioDoc:
    world: dict
    simulators: list[dict]
    entities: list[dict]
    connections: list[dict]
    raw: dict = field(default_factory=dict)

    @property
    def until(self) -> int | None:
        return self.world.get("until")


def parse_scenario_file(path: str | Path) -> ScenarioDoc:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ScenarioFileError("/", f"scenario file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioFileError("/", f"invalid JSON: {exc}") from exc
    return parse_scenario_doc(raw)


def parse_scenario_doc(raw: Any) -> ScenarioDoc:
    if not isinstance(raw, dict):
        raise ScenarioFileError("/", "document must be a JSON object")
    world = _require(raw, "world", dict, "/world")
    _check_world(world)
    simulators = _require(raw, "simulators", list, "/simulators")
    sids = set()
    for i, sim in enumerate(simulators):
        ptr = f"/simulators/{i}"
        if not isinstance(sim, dict):
            raise ScenarioFileError(ptr, "must be an object")
        sid = sim.get("sid")
        if not isinstance(sid, str) or not sid:
            raise ScenarioFileError(f"{ptr}/sid", "required non-empty string")
        if sid in sids:
            raise ScenarioFileError(f"{ptr}/sid", f"duplicate sid {sid!r}")
        sids.add(sid)
        modes = [k for k in ("builtin", "spawn", "listen") if sim.get(k)]
        if len(modes) != 1:
            raise ScenarioFileError(ptr, "exactly one of builtin/spawn/listen required")
        if "builtin" in modes and not isinstance(sim["builtin"], str):
            raise ScenarioFileError(f"{ptr}/builtin", "must be a string")
        if "spawn" in modes and (
            not isinstance(sim["spawn"], list) or not all(isinstance(x, str) for x in sim["spawn"])
        ):
            raise ScenarioFileError(f"{ptr}/spawn", "must be a list of strings")
        if "params" in sim and not isinstance(sim["params"], dict):
            raise ScenarioFileError(f"{ptr}/params", "must be an object")
    entities = raw.get("entities", [])
    if not isinstance(entities, list):
        raise ScenarioFileError("/entities", "must be a list")
    for i, ent in enumerate(entities):
        ptr = f"/entities/{i}"
        if not isinstance(ent, dict):
            raise ScenarioFileError(ptr, "must be an object")
        if ent.get("sid") not in sids:
            raise ScenarioFileError(f"{ptr}/sid", f"unknown sid {ent.get('sid')!r}")
        if not isinstance(ent.get("model"), str) or not ent["model"]:
            raise ScenarioFileError(f"{ptr}/model", "required non-empty string")
        num = ent.get("num", 1)
        if not isinstance(num, int) or isinstance(num, bool) or num < 1:
            raise ScenarioFileError(f"{ptr}/num", "must be a positive integer")
        if "params" in ent and not isinstance(ent["params"], dict):
            raise ScenarioFileError(f"{ptr}/params", "must be an object")
    connections = raw.get("connections", [])
    if not isinstance(connections, list):
        raise ScenarioFileError("/connections", "must be a list")
    for i, conn in enumerate(connections):
        ptr = f"/connections/{i}"
        if not isinstance(conn, dict):
            raise ScenarioFileError(ptr, "must be an object")
        for key in ("src", "src_attr", "dest", "dest_attr"):
            value = conn.get(key)
            if not isinstance(value, str) or not value:
                raise ScenarioFileError(f"{ptr}/{key}", "required non-empty string")
        for key in ("src", "dest"):
            if "." not in conn[key]:
                raise ScenarioFileError(f"{ptr}/{key}", "must be a full id '<sid>.<eid>'")
        if "weak" in conn and not isinstance(conn["weak"], bool):
            raise ScenarioFileError(f"{ptr}/weak", "must be a boolean")
    return ScenarioDoc(
        world=world, simulators=simulators, entities=entities,
        connections=connections, raw=raw,
    )


def build_world(
    doc: ScenarioDoc,
    rt_factor_override: float | None = None,
    listen_port: int | None = None,
) -> World:
    """Materialize a World from a parsed document (attach, create, connect)."""
    rt_factor = rt_factor_override if rt_factor_override is not None else doc.world.get("rt_factor")
    world = World(
        time_resolution=doc.world.get("time_resolution", 1.0),
        max_loop_iterations=doc.world.get("max_loop_iterations", 100),
        rt_factor=rt_factor,
        listen_port=listen_port,
    )
    try:
        for sim in doc.simulators:
            world.add_simulator(
                sim["sid"],
                builtin=sim.get("builtin"),
                spawn=sim.get("spawn"),
                listen=bool(sim.get("listen")),
                params=sim.get("params", {}),
            )
        for ent in doc.entities:
            world.handles[ent["sid"]].create(
                ent.get("num", 1), ent["model"], **ent.get("params", {})
            )
        for conn in doc.connections:
            world.connect(
                conn["src"], conn["src_attr"], conn["dest"], conn["dest_attr"],
                weak=bool(conn.get("weak", False)),
            )
        world.validate_graph()
    except Exception:
        world.shutdown()
        raise
    return world


def _require(raw: dict, key: str, typ, pointer: str):
    if key not in raw:
        raise ScenarioFileError(pointer, "required")
    if not isinstance(raw[key], typ):
        raise ScenarioFileError(pointer, f"must be of type {typ.__name__}")
    return raw[key]


def _check_world(world: dict) -> None:
    if "until" not in world:
        raise ScenarioFileError("/world/until", "required")
    until = world["until"]
    if not isinstance(until, int) or isinstance(until, bool) or until <= 0:
        raise ScenarioFileError("/world/until", "must be a positive integer")
    res = world.get("time_resolution", 1.0)
    if not isinstance(res, (int, float)) or isinstance(res, bool) or res <= 0:
        raise ScenarioFileError("/world/time_resolution", "must be a positive number")
    mli = world.get("max_loop_iterations", 100)
    if not isinstance(mli, int) or isinstance(mli, bool) or mli < 1:
        raise ScenarioFileError("/world/max_loop_iterations", "must be a positive integer")
    rt = world.get("rt_factor")
    if rt is not None and (not isinstance(rt, (int, float)) or isinstance(rt, bool) or rt <= 0):
        raise ScenarioFileError("/world/rt_factor", "must be a positive number or null")
    unknown = set(world) - {"time_resolution", "max_loop_iterations", "rt_factor", "until"}
    if unknown:
        raise ScenarioFileError(f"/world/{sorted(unknown)[0]}", "unknown key")
