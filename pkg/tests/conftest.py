"""Shared helpers: scenario builders and the randomized scenario generator."""

from __future__ import annotations

import random
import sys

import pytest

from cosim import Simulator, World
from cosim.api import API_VERSION, OutputBundle
from cosim.scenariofile import ScenarioDoc, build_world, parse_scenario_doc

SIMHOST = [sys.executable, "-m", "cosim.simhost"]


class FutureEcho(Simulator):
    """Event-based test sim: re-emits inputs future-dated by `delay` ticks."""

    def __init__(self, delay: int = 3):
        super().__init__()
        self.delay = delay
        self._pending: dict[str, object] = {}
        self._time = 0

    def init(self, sid, time_resolution, **sim_params):
        self.sid = sid
        self.delay = int(sim_params.get("delay", self.delay))
        return {
            "api_version": API_VERSION,
            "component_type": "event-based",
            "models": {
                "Echo": {"public": True, "params": [], "attrs": ["in", "out"],
                          "trigger": [], "non_persistent": []},
            },
        }

    def create(self, num, model, **params):
        self._eids = [f"{model}-{i}" for i in range(num)]
        return [{"eid": e, "model": model, "children": []} for e in self._eids]

    def step(self, time, inputs, max_advance):
        self._time = time
        self._pending = {}
        for eid, by_attr in inputs.items():
            for _attr, pairs in by_attr.items():
                self._pending[eid] = pairs[-1][1]
        return None

    def get_data(self, outputs):
        data = {eid: {"out": value} for eid, value in self._pending.items()
                if eid in outputs and "out" in outputs[eid]}
        return OutputBundle(data=data, output_time=self._time + self.delay if data else None)


def ramp_collector_doc(until=3, slope=1, step_size=1) -> dict:
    return {
        "world": {"until": until},
        "simulators": [
            {"sid": "ramp-0", "builtin": "ramp", "params": {}},
            {"sid": "col-0", "builtin": "collector", "params": {}},
        ],
        "entities": [
            {"sid": "ramp-0", "model": "Ramp", "num": 1,
             "params": {"slope": slope, "step_size": step_size}},
            {"sid": "col-0", "model": "Collector", "num": 1, "params": {}},
        ],
        "connections": [
            {"src": "ramp-0.Ramp-0", "src_attr": "out",
             "dest": "col-0.Collector-0", "dest_attr": "in"},
        ],
    }


def negotiation_world(tol_a=1.0, tol_b=1.0, start_a=0.0, start_b=8.0, weak_on="b_to_a"):
    world = World()
    a = world.add_simulator("nego-a", builtin="negotiator")
    b = world.add_simulator("nego-b", builtin="negotiator")
    ea = a.create(1, "Negotiator", start=start_a, tolerance=tol_a)[0]
    eb = b.create(1, "Negotiator", start=start_b, tolerance=tol_b)[0]
    world.connect(ea, "offer", eb, "offer", weak=(weak_on == "a_to_b"))
    world.connect(eb, "offer", ea, "offer", weak=(weak_on == "b_to_a"))
    return world, a, b


# -- randomized scenario generation (oracle validity domain) -------------

_KINDS = ("ramp", "hybrid_ramp", "gain", "delay_net", "collector")

_OUT_ATTRS = {
    "ramp": [("Ramp", "out")],
    "hybrid_ramp": [("Ramp", "out")],
    "gain": [("Gain", "out")],
    "delay_net": [("Node", "delivery")],
    "collector": [],
}
# (model, attr, triggers?)
_IN_ATTRS = {
    "ramp": [],
    "hybrid_ramp": [("Ramp", "setpoint", True)],
    "gain": [("Gain", "in", False)],
    "delay_net": [("Node", "send", True)],
    "collector": [("Collector", "in", True)],
}
_TRANSIENT_OUT = {"delay_net"}


def random_scenario(rng: random.Random) -> dict:
    """Acyclic scenario, no weak edges, no future-dated outputs, 2..5 sims."""
    n = rng.randint(2, 5)
    kinds = [rng.choice(_KINDS) for _ in range(n)]
    until = rng.randint(10, 50)
    simulators, entities = [], []
    for i, kind in enumerate(kinds):
        sid = f"s{i}-{kind.replace('_', '')}"
        simulators.append({"sid": sid, "builtin": kind, "params": {}})
        params = {}
        if kind in ("ramp", "hybrid_ramp"):
            params = {"slope": rng.choice([1, 2, 0.5, -1]), "step_size": rng.randint(1, 7)}
        elif kind == "gain":
            params = {"gain": rng.choice([1, 2, -0.5]), "step_size": rng.randint(1, 7)}
        elif kind == "delay_net":
            params = {"latency": rng.randint(0, 3)}
        model = _OUT_ATTRS[kind][0][0] if _OUT_ATTRS[kind] else _IN_ATTRS[kind][0][0]
        entities.append({"sid": sid, "model": model, "num": 1, "params": params})
    connections = []
    for j in range(n):
        for i in range(j):
            src_kind, dest_kind = kinds[i], kinds[j]
            if not _OUT_ATTRS[src_kind] or not _IN_ATTRS[dest_kind]:
                continue
            src_model, src_attr = _OUT_ATTRS[src_kind][0]
            dest_model, dest_attr, triggers = rng.choice(_IN_ATTRS[dest_kind])
            transient_src = src_kind in _TRANSIENT_OUT
            if transient_src and not triggers:
                # legal but inert edge; include occasionally to prove inertness
                if rng.random() > 0.15:
                    continue
            elif rng.random() > 0.55:
                continue
            connections.append({
                "src": f"{simulators[i]['sid']}.{src_model}-0", "src_attr": src_attr,
                "dest": f"{simulators[j]['sid']}.{dest_model}-0", "dest_attr": dest_attr,
            })
    return {
        "world": {"until": until},
        "simulators": simulators,
        "entities": entities,
        "connections": connections,
    }


def run_doc(doc: dict, **overrides):
    """Build and run a scenario document in-process; returns (world, result)."""
    parsed = parse_scenario_doc(doc)
    world = build_world(parsed)
    try:
        result = world.run(overrides.get("until", parsed.until))
    finally:
        world.shutdown()
    return world, result


@pytest.fixture
def rng():
    return random.Random(20240811)
