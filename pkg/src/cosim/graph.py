"""Dependency graph over simulators: attribute connections, weak flags, ranks.

Connections are attribute-pair granular; scheduling is simulator-granular,
so the graph aggregates edges per (src_sid, dest_sid).  Ranks are computed
on the graph with weak edges removed and give the deterministic tiebreak
for same-time activations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import GraphError


@dataclass(frozen=True)
class Connection:
    src_sid: str
    src_eid: str
    src_attr: str
    dest_sid: str
    dest_eid: str
    dest_attr: str
    weak: bool = False

    @property
    def src_full_id(self) -> str:
        return f"{self.src_sid}.{self.src_eid}"

    @property
    def dest_full_id(self) -> str:
        return f"{self.dest_sid}.{self.dest_eid}"


@dataclass
class DependencyGraph:
    sids: list[str]
    connections: list[Connection]
    rank: dict[str, int]
    # sid -> set of sids that can reach it in the full graph (weak included)
    ancestors: dict[str, set[str]]
    strong_edges: set[tuple[str, str]] = field(default_factory=set)
    weak_edges: set[tuple[str, str]] = field(default_factory=set)

    def outgoing(self, sid: str, eid: str, attr: str) -> list[Connection]:
        return [
            c for c in self.connections
            if c.src_sid == sid and c.src_eid == eid and c.src_attr == attr
        ]

    def loop_members(self, src_sid: str, dest_sid: str) -> list[str]:
        """Members of the full-graph strongly connected component holding the edge."""
        scc = _scc_of(self.sids, self.strong_edges | self.weak_edges, src_sid)
        if dest_sid in scc:
            return sorted(scc)
        return sorted({src_sid, dest_sid})


def build_graph(sids: list[str], connections: list[Connection]) -> DependencyGraph:
    """Validate topology and compute ranks.

    The graph minus weak edges must be acyclic (equivalently: every cycle
    of the full graph contains at least one weak edge).  Rank is the
    position in a deterministic topological order of the strong subgraph;
    ties resolve by simulator registration order.
    """
    strong_edges: set[tuple[str, str]] = set()
    weak_edges: set[tuple[str, str]] = set()
    for c in connections:
        pair = (c.src_sid, c.dest_sid)
        if c.src_sid == c.dest_sid:
            if not c.weak:
                raise GraphError(
                    f"strong self-loop on {c.src_sid!r} ({c.src_attr} -> {c.dest_attr})",
                    cycle=[c.src_sid],
                )
            weak_edges.add(pair)
            continue
        if c.weak:
            weak_edges.add(pair)
        else:
            strong_edges.add(pair)

    order_index = {sid: i for i, sid in enumerate(sids)}
    succ: dict[str, list[str]] = {sid: [] for sid in sids}
    indeg: dict[str, int] = {sid: 0 for sid in sids}
    for src, dest in sorted(strong_edges, key=lambda e: (order_index[e[0]], order_index[e[1]])):
        succ[src].append(dest)
        indeg[dest] += 1

    frontier = [sid for sid in sids if indeg[sid] == 0]
    rank: dict[str, int] = {}
    position = 0
    while frontier:
        frontier.sort(key=lambda s: order_index[s])
        sid = frontier.pop(0)
        rank[sid] = position
        position += 1
        for nxt in succ[sid]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                frontier.append(nxt)

    if len(rank) != len(sids):
        stuck = [sid for sid in sids if sid not in rank]
        cycle = _find_cycle(stuck, strong_edges)
        raise GraphError(
            f"dependency cycle without a weak edge: {' -> '.join(cycle)}",
            cycle=cycle,
        )

    full_edges = strong_edges | weak_edges
    ancestors = {sid: _reachable_from_reverse(sid, sids, full_edges) for sid in sids}
    return DependencyGraph(
        sids=list(sids),
        connections=list(connections),
        rank=rank,
        ancestors=ancestors,
        strong_edges=strong_edges,
        weak_edges=weak_edges,
    )


def _find_cycle(stuck: list[str], edges: set[tuple[str, str]]) -> list[str]:
    succ: dict[str, list[str]] = {}
    for src, dest in sorted(edges):
        succ.setdefault(src, []).append(dest)
    seen: set[str] = set()
    for start in stuck:
        path: list[str] = []
        on_path: set[str] = set()

        def visit(node: str) -> list[str] | None:
            if node in on_path:
                return path[path.index(node):]
            if node in seen:
                return None
            seen.add(node)
            path.append(node)
            on_path.add(node)
            for nxt in succ.get(node, []):
                found = visit(nxt)
                if found is not None:
                    return found
            path.pop()
            on_path.remove(node)
            return None

        found = visit(start)
        if found:
            return found
    return stuck


def _reachable_from_reverse(sid: str, sids: list[str], edges: set[tuple[str, str]]) -> set[str]:
    pred: dict[str, list[str]] = {s: [] for s in sids}
    for src, dest in edges:
        pred[dest].append(src)
    seen: set[str] = set()
    stack = list(pred[sid])
    while stack:
        node = stack.pop()
        if node in seen:
            continue
        seen.add(node)
        stack.extend(pred[node])
    return seen


def _scc_of(sids: list[str], edges: set[tuple[str, str]], member: str) -> set[str]:
    succ: dict[str, set[str]] = {s: set() for s in sids}
    pred: dict[str, set[str]] = {s: set() for s in sids}
    for src, dest in edges:
        succ[src].add(dest)
        pred[dest].add(src)

    def closure(start: str, nxt: dict[str, set[str]]) -> set[str]:
        seen = {start}
        stack = [start]
        while stack:
            node = stack.pop()
            for other in nxt[node]:
                if other not in seen:
                    seen.add(other)
                    stack.append(other)
        return seen

    return closure(member, succ) & closure(member, pred)
