"""Brute-force per-tick reference scheduler (ground truth for dataflow).

Every simulator is stepped at every tick in rank order with eager data
propagation: the naive schedule whose cost the event-driven scheduler is
meant to avoid.  Behaviors of the builtin simulator kinds are re-derived
here from their scenario parameters, independently of the simulator
classes and of the event queue, so agreement between the two paths is a
genuine cross-check.

Validity domain: acyclic scenarios without weak edges, without
future-dated outputs and with known builtin kinds only.  Equivalence is
judged on observed dataflow, not step counts: per-tick stepping makes
total_step_calls = num_sims * until by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .errors import ScenarioError
from .trace import digest

SUPPORTED_KINDS = ("ramp", "hybrid_ramp", "gain", "delay_net", "collector")


@dataclass
class OracleTrace:
    until: int
    # (sid, tick) -> wire-format input bundle, present only for meaningful steps
    observations: dict[tuple[str, int], dict] = field(default_factory=dict)
    per_sim_step_calls: dict[str, int] = field(default_factory=dict)

    @property
    def total_step_calls(self) -> int:
        return sum(self.per_sim_step_calls.values())

    def nonempty(self) -> dict[tuple[str, int], dict]:
        return {key: b for key, b in self.observations.items() if b}


@dataclass
class CompareReport:
    equal: bool
    first_divergence: tuple[str, int, str] | None = None  # (sid, tick, attr)


def oracle_run(doc: dict, until: int) -> OracleTrace:
    """Run the naive per-tick schedule over a scenario document.

    `doc` uses the scenario-file structure: simulators (builtin only),
    entities and connections.
    """
    sims = {}
    order = []
    for sim_cfg in doc["simulators"]:
        sid = sim_cfg["sid"]
        kind = sim_cfg.get("builtin")
        if kind == "negotiator":
            raise ScenarioError("oracle: same-time-loop components have no per-tick analogue")
        if kind not in SUPPORTED_KINDS:
            raise ScenarioError(f"oracle: unsupported simulator kind {kind!r} for {sid!r}")
        sims[sid] = {"kind": kind, "entities": {}}
        order.append(sid)
    for ent in doc["entities"]:
        sid = ent["sid"]
        params = ent.get("params", {})
        num = ent.get("num", 1)
        kind = sims[sid]["kind"]
        for _ in range(num):
            eid = f"{ent['model']}-{len(sims[sid]['entities'])}"
            sims[sid]["entities"][eid] = _entity_state(kind, params)

    connections = []
    for conn in doc["connections"]:
        if conn.get("weak"):
            raise ScenarioError("oracle: weak edges are outside the validity domain")
        src_sid, src_eid = conn["src"].split(".", 1)
        dest_sid, dest_eid = conn["dest"].split(".", 1)
        connections.append((src_sid, src_eid, conn["src_attr"], dest_sid, dest_eid, conn["dest_attr"]))

    rank = _ranks(order, connections)
    by_rank = sorted(order, key=lambda s: rank[s])

    trace = OracleTrace(until=until, per_sim_step_calls={sid: until for sid in order})
    # (src_sid, src_eid, attr) -> (value, produced_at); single slot like the scheduler cache
    cache: dict[tuple[str, str, str], tuple[Any, int]] = {}

    for tick in range(until):
        # pushed arrivals this tick: dest sid -> eid -> attr -> [(src_full, value)]
        arrivals: dict[str, dict] = {sid: {} for sid in order}
        for sid in by_rank:
            kind = sims[sid]["kind"]
            entities = sims[sid]["entities"]
            pushed = arrivals[sid]
            due = _is_due(kind, entities, pushed, tick)
            bundle: dict = {}
            if due:
                bundle = {eid: {a: list(pairs) for a, pairs in by_attr.items()}
                          for eid, by_attr in pushed.items()}
                for dest_eid, dest_attr, src_full, src_key in _pull_specs(sid, kind, connections):
                    cached = cache.get(src_key)
                    if cached is not None and cached[1] <= tick:
                        bundle.setdefault(dest_eid, {}).setdefault(dest_attr, []).append(
                            [src_full, cached[0]]
                        )
                trace.observations[(sid, tick)] = bundle
            outputs = _behave(kind, entities, bundle, tick, due)
            for eid, attr_map in outputs.items():
                for attr, value in attr_map.items():
                    if _is_persistent(kind, attr):
                        cache[(sid, eid, attr)] = (value, tick)
                    for c_src_sid, c_src_eid, c_src_attr, d_sid, d_eid, d_attr in connections:
                        if (c_src_sid, c_src_eid, c_src_attr) != (sid, eid, attr):
                            continue
                        if not _is_trigger(sims[d_sid]["kind"], d_attr):
                            continue
                        arrivals[d_sid].setdefault(d_eid, {}).setdefault(d_attr, []).append(
                            [f"{sid}.{eid}", value]
                        )
    return trace


def compare_traces(main_dataflow: list[tuple[str, int, int, dict]], oracle: OracleTrace) -> CompareReport:
    """Dataflow equivalence on (dest sim, tick) -> input bundle, empties ignored."""
    main: dict[tuple[str, int], dict] = {}
    for sid, tick, _iteration, bundle in main_dataflow:
        if bundle:
            key = (sid, tick)
            if key in main:
                merged = dict(main[key])
                for eid, by_attr in bundle.items():
                    slot = merged.setdefault(eid, {})
                    for attr, pairs in by_attr.items():
                        slot.setdefault(attr, []).extend(pairs)
                main[key] = merged
            else:
                main[key] = bundle
    reference = oracle.nonempty()
    keys = sorted(set(main) | set(reference), key=lambda k: (k[1], k[0]))
    for key in keys:
        left = main.get(key)
        right = reference.get(key)
        if left is None or right is None or digest(left) != digest(right):
            attr = _first_attr_diff(left or {}, right or {})
            return CompareReport(equal=False, first_divergence=(key[0], key[1], attr))
    return CompareReport(equal=True)


def naive_step_count(num_sims: int, until: int) -> int:
    """Step calls the per-tick schedule costs: one per simulator per tick."""
    return num_sims * until


# -- behavior models (kept independent of the simulator classes) --------

def _entity_state(kind: str, params: dict) -> dict:
    if kind == "ramp":
        return {"slope": float(params.get("slope", 1.0)), "step": int(params.get("step_size", 1))}
    if kind == "hybrid_ramp":
        lo, hi = params.get("setpoint_range", (-1e9, 1e9))
        return {
            "slope": float(params.get("slope", 1.0)), "step": int(params.get("step_size", 1)),
            "lo": float(lo), "hi": float(hi), "anchor_v": 0.0, "anchor_t": 0,
        }
    if kind == "gain":
        return {"gain": float(params.get("gain", 1.0)), "step": int(params.get("step_size", 1)), "value": 0.0}
    if kind == "delay_net":
        return {"latency": int(params.get("latency", 1)), "pending": []}
    if kind == "collector":
        return {}
    raise ScenarioError(f"oracle: unknown kind {kind!r}")


def _is_due(kind: str, entities: dict, pushed: dict, tick: int) -> bool:
    if kind in ("ramp", "gain"):
        return any(tick % e["step"] == 0 for e in entities.values())
    if kind == "hybrid_ramp":
        return bool(pushed) or any(tick % e["step"] == 0 for e in entities.values())
    if kind == "delay_net":
        deliveries = any(t == tick for e in entities.values() for t, _v in e["pending"])
        return bool(pushed) or deliveries
    if kind == "collector":
        return bool(pushed)
    return False


def _behave(kind: str, entities: dict, inputs: dict, tick: int, due: bool) -> dict:
    outputs: dict[str, dict[str, Any]] = {}
    if kind == "ramp":
        for eid, e in entities.items():
            if tick % e["step"] == 0:
                # written as the anchor form so float signs match the live sim
                outputs[eid] = {"out": 0.0 + e["slope"] * (tick - 0)}
    elif kind == "hybrid_ramp":
        for eid, e in entities.items():
            touched = False
            pairs = inputs.get(eid, {}).get("setpoint")
            if pairs:
                value = pairs[-1][1]
                if isinstance(value, (int, float)) and e["lo"] <= value <= e["hi"]:
                    e["anchor_v"], e["anchor_t"] = float(value), tick
                    touched = True
            if touched or tick % e["step"] == 0:
                outputs[eid] = {"out": e["anchor_v"] + e["slope"] * (tick - e["anchor_t"])}
    elif kind == "gain":
        for eid, e in entities.items():
            if tick % e["step"] == 0:
                pairs = inputs.get(eid, {}).get("in", [])
                e["value"] = e["gain"] * sum(v for _s, v in pairs if isinstance(v, (int, float)))
                outputs[eid] = {"out": e["value"]}
    elif kind == "delay_net":
        for eid, e in entities.items():
            for _src, value in inputs.get(eid, {}).get("send", []):
                e["pending"].append((tick + e["latency"], value))
            payloads = [v for t, v in e["pending"] if t == tick]
            e["pending"] = [(t, v) for t, v in e["pending"] if t != tick]
            if payloads:
                outputs[eid] = {"delivery": payloads[0] if len(payloads) == 1 else payloads}
    return outputs


def _is_persistent(kind: str, attr: str) -> bool:
    if kind in ("ramp", "gain"):
        return True
    if kind == "hybrid_ramp":
        return attr == "out"
    return False  # event-based: everything transient


def _is_trigger(kind: str, attr: str) -> bool:
    if kind in ("delay_net", "collector"):
        return True  # event-based: everything triggers
    if kind == "hybrid_ramp":
        return attr == "setpoint"
    return False  # time-based: nothing triggers


def _pull_specs(sid: str, kind: str, connections: list) -> list[tuple]:
    """Non-trigger connected input attrs, sorted exactly like the scheduler:
    by (dest_eid, dest_attr, src_sid, src_eid, src_attr)."""
    specs = []
    for src_sid, src_eid, src_attr, dest_sid, dest_eid, dest_attr in connections:
        if dest_sid != sid:
            continue
        if _is_trigger(kind, dest_attr):
            continue
        specs.append((dest_eid, dest_attr, src_sid, src_eid, src_attr))
    specs.sort()
    return [
        (dest_eid, dest_attr, f"{src_sid}.{src_eid}", (src_sid, src_eid, src_attr))
        for dest_eid, dest_attr, src_sid, src_eid, src_attr in specs
    ]


def _ranks(order: list[str], connections: list) -> dict[str, int]:
    succ = {sid: [] for sid in order}
    indeg = {sid: 0 for sid in order}
    seen = set()
    for src_sid, _se, _sa, dest_sid, _de, _da in connections:
        if (src_sid, dest_sid) in seen or src_sid == dest_sid:
            if src_sid == dest_sid:
                raise ScenarioError("oracle: self-loop is outside the validity domain")
            continue
        seen.add((src_sid, dest_sid))
        succ[src_sid].append(dest_sid)
        indeg[dest_sid] += 1
    pos = {sid: i for i, sid in enumerate(order)}
    frontier = [sid for sid in order if indeg[sid] == 0]
    rank = {}
    k = 0
    while frontier:
        frontier.sort(key=pos.get)
        sid = frontier.pop(0)
        rank[sid] = k
        k += 1
        for nxt in succ[sid]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                frontier.append(nxt)
    if len(rank) != len(order):
        raise ScenarioError("oracle: scenario must be acyclic")
    return rank


def _first_attr_diff(left: dict, right: dict) -> str:
    for eid in sorted(set(left) | set(right)):
        l_attrs = left.get(eid, {})
        r_attrs = right.get(eid, {})
        for attr in sorted(set(l_attrs) | set(r_attrs)):
            if l_attrs.get(attr) != r_attrs.get(attr):
                return attr
    return "inputs"
