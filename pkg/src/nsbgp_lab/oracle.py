"""Brute-force ground truth for small instances.

Deliberately independent of :mod:`nsbgp_lab.engine`'s kernels: selection is
re-derived here from the ranking functions and the export policy, on plain
path tuples.  Only the :class:`~nsbgp_lab.engine.ProtocolState` container is
shared so results can be compared directly.
"""

from __future__ import annotations

import enum
import hashlib
import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import networkx as nx

from .engine import ProtocolState
from .model import EMPTY, Instance, Mode
from .policy import is_exportable

DEFAULT_SEARCH_LIMIT = 10**7
DEFAULT_STATE_BUDGET = 10**6


class SearchSpaceExceeded(RuntimeError):
    pass


class StateBudgetExceeded(RuntimeError):
    pass


def _select(inst: Instance, u, rib: dict):
    """Exports and own selection of ``u`` given its rib-in, straight from the rules."""
    cands = []
    for v in inst.neighbors[u]:
        p = rib.get(v, EMPTY)
        if p and u not in p:
            cands.append((u,) + p)
    own = inst.self_ranking(u).best(cands)
    exports = {}
    for v in inst.neighbors[u]:
        if inst.mode is Mode.CONVENTIONAL:
            exports[v] = own if own and is_exportable(inst, u, v, own) else EMPTY
        else:
            allowed = [c for c in cands if is_exportable(inst, u, v, c)]
            exports[v] = inst.ranking_for(u, v).best(allowed)
    return exports, own


class _Space:
    """Dictionary-backed global states: ``(exports, own)`` with
    ``exports[(u, v)]`` and ``own[u]``."""

    def __init__(self, inst: Instance):
        self.inst = inst
        self.nodes = list(inst.nodes)
        self.d = inst.destination

    def initial(self):
        d = self.d
        exports = {(u, v): EMPTY for u in self.nodes for v in self.inst.neighbors[u]}
        for v in self.inst.neighbors[d]:
            exports[(d, v)] = (d,)
        own = {u: EMPTY for u in self.nodes}
        own[d] = (d,)
        return self.freeze(exports, own)

    @staticmethod
    def freeze(exports, own):
        return ProtocolState.from_maps(exports, own)

    def successor(self, state: ProtocolState, u) -> ProtocolState:
        if u == self.d:
            return state
        exports = state.exports
        own = state.selections
        rib = {v: exports[(v, u)] for v in self.inst.neighbors[u]}
        new_exports, new_own = _select(self.inst, u, rib)
        if new_own == own[u] and all(exports[(u, v)] == p for v, p in new_exports.items()):
            return state
        own[u] = new_own
        for v, p in new_exports.items():
            exports[(u, v)] = p
        return self.freeze(exports, own)

    def is_fixed_point(self, state: ProtocolState) -> bool:
        return all(self.successor(state, u) == state for u in self.nodes)


def state_digest(state: ProtocolState) -> str:
    return hashlib.sha1(repr((state.exported, state.own)).encode()).hexdigest()[:12]


# ---------------------------------------------------------------------------
# stable states


def _search_size(inst: Instance) -> int:
    size = 1
    for u in inst.nodes:
        if u == inst.destination:
            continue
        paths = set()
        for (owner, _), rf in inst.rankings.items():
            if owner == u:
                paths.update(rf.acceptable)
        size *= len(paths) + 1
    return size


def enumerate_stable_states(inst: Instance, limit: int = DEFAULT_SEARCH_LIMIT) -> set:
    """Every global state that is a fixed point of activation for every node."""
    size = _search_size(inst)
    if size > limit:
        raise SearchSpaceExceeded(f"search space {size} exceeds limit {limit}")
    if inst.mode is Mode.CONVENTIONAL:
        return _stable_conventional(inst)
    return _stable_per_neighbor(inst, limit)


def _stable_conventional(inst: Instance) -> set:
    d = inst.destination
    movers = [u for u in inst.nodes if u != d]
    choices = [(EMPTY,) + inst.self_ranking(u).acceptable for u in movers]
    found = set()
    for combo in itertools.product(*choices):
        own = dict(zip(movers, combo))
        own[d] = (d,)
        exports = {}
        for u in inst.nodes:
            for v in inst.neighbors[u]:
                p = own[u]
                exports[(u, v)] = p if p and is_exportable(inst, u, v, p) else EMPTY
        ok = True
        for u in movers:
            rib = {v: exports[(v, u)] for v in inst.neighbors[u]}
            _, best = _select(inst, u, rib)
            if best != own[u]:
                ok = False
                break
        if ok:
            found.add(ProtocolState.from_maps(exports, own))
    return found


def _stable_per_neighbor(inst: Instance, limit: int) -> set:
    """Backtracking over per-edge exports.

    A non-empty export ``(u w ...)`` pins ``w``'s export to ``u`` to
    ``(w ...)``.  Partial assignments are pruned as soon as an assigned
    export is beaten by a candidate that is already known.
    """
    d = inst.destination
    ns = inst.mode is Mode.NEIGHBOR_SPECIFIC
    edges = [(u, v) for u in inst.nodes if u != d for v in inst.neighbors[u]]
    domain = {}
    for u, v in edges:
        rf = inst.ranking_for(u, v) if ns else inst.self_ranking(u)
        domain[(u, v)] = [EMPTY] + [p for p in rf.acceptable if is_exportable(inst, u, v, p)]
    fixed = {(d, v): (d,) for v in inst.neighbors[d]}
    found = set()
    budget = [limit]

    def node_ok(assign, u):
        """No candidate known so far beats an assigned export of ``u``.

        Once every edge at ``u`` is assigned this is exactly the fixed-point
        condition, because a non-empty export is itself a known candidate.
        """
        if u == d:
            return True
        known = []
        for w in inst.neighbors[u]:
            p = assign.get((w, u))
            if p and u not in p:
                known.append((u,) + p)
        for v in inst.neighbors[u]:
            have = assign.get((u, v))
            if have is None:
                continue
            rf = inst.ranking_for(u, v) if ns else inst.self_ranking(u)
            best = rf.best(c for c in known if is_exportable(inst, u, v, c))
            if best != have and (not have or (best and rf.rank(best) < rf.rank(have))):
                return False
        return True

    def place(assign, e, p, trail):
        """Assign ``e = p`` plus everything it pins; False on contradiction."""
        work = [(e, p)]
        while work:
            e, p = work.pop()
            have = assign.get(e)
            if have is not None:
                if have != p:
                    return False
                continue
            if p not in domain.get(e, [p]):
                return False
            assign[e] = p
            trail.append(e)
            if p:
                u, w, tail = e[0], p[1], p[1:]
                work.append(((w, u), tail))
        return True

    def search(assign, i):
        budget[0] -= 1
        if budget[0] < 0:
            raise SearchSpaceExceeded(f"backtracking exceeded {limit} steps")
        while i < len(edges) and edges[i] in assign:
            i += 1
        if i == len(edges):
            if all(node_ok(assign, u) for u in inst.nodes):
                own = {u: _select(inst, u, {v: assign[(v, u)] for v in inst.neighbors[u]})[1] for u in inst.nodes if u != d}
                own[d] = (d,)
                found.add(ProtocolState.from_maps(assign, own))
            return
        e = edges[i]
        for p in domain[e]:
            trail = []
            if place(assign, e, p, trail):
                touched = {x for t in trail for x in t}
                if all(node_ok(assign, x) for x in touched):
                    search(assign, i + 1)
            for t in trail:
                del assign[t]

    search(dict(fixed), 0)
    return found


# ---------------------------------------------------------------------------
# exhaustive exploration


class Verdict(str, enum.Enum):
    SAFE = "SAFE"
    CYCLE_FOUND = "CYCLE_FOUND"


@dataclass
class StateGraph:
    initial: ProtocolState
    vertices: set = field(default_factory=set)
    edges: dict = field(default_factory=dict)  # (state, node) -> state

    def successors(self, state):
        return {(u, t) for (s, u), t in self.edges.items() if s == state}

    def stable_states(self) -> set:
        out = set(self.vertices)
        for (s, _), t in self.edges.items():
            if s != t:
                out.discard(s)
        return out

    def to_networkx(self) -> nx.MultiDiGraph:
        g = nx.MultiDiGraph()
        for v in self.vertices:
            g.add_node(state_digest(v), initial=(v == self.initial))
        for (s, u), t in self.edges.items():
            g.add_edge(state_digest(s), state_digest(t), key=u, node=u)
        return g

    def write_graphml(self, path) -> None:
        nx.write_graphml(self.to_networkx(), path)


@dataclass(frozen=True)
class CycleWitness:
    prefix: tuple  # activations from the initial state to the cycle entry
    cycle: tuple  # activations that go once around
    states: tuple  # the distinct states around the cycle, starting at the entry


@dataclass
class SearchResult:
    graph: StateGraph
    verdict: Verdict
    witness: Optional[CycleWitness] = None

    @property
    def safe(self) -> bool:
        return self.verdict is Verdict.SAFE


def exhaustive_search(inst: Instance, max_states: int = DEFAULT_STATE_BUDGET) -> SearchResult:
    """Explore every interleaving of single-node activations from the initial state.

    SAFE iff the reachable graph has no cycle through distinct states
    (self-loops are idle activations and do not count).
    """
    space = _Space(inst)
    init = space.initial()
    graph = StateGraph(init, {init})
    parent = {init: None}
    queue = deque([init])
    while queue:
        s = queue.popleft()
        for u in space.nodes:
            t = space.successor(s, u)
            graph.edges[(s, u)] = t
            if t not in graph.vertices:
                if len(graph.vertices) >= max_states:
                    raise StateBudgetExceeded(f"more than {max_states} reachable states")
                graph.vertices.add(t)
                parent[t] = (s, u)
                queue.append(t)

    g = nx.DiGraph()
    g.add_nodes_from(graph.vertices)
    for (s, u), t in graph.edges.items():
        if s != t and not g.has_edge(s, t):
            g.add_edge(s, t, node=u)
    for comp in nx.strongly_connected_components(g):
        if len(comp) > 1:
            return SearchResult(graph, Verdict.CYCLE_FOUND, _witness(g, comp, parent, init))
    return SearchResult(graph, Verdict.SAFE)


def _witness(g, comp, parent, init) -> CycleWitness:
    # entry: the component state closest to the initial state
    depth = {}
    for s in comp:
        k, x = 0, s
        while parent[x] is not None:
            x = parent[x][0]
            k += 1
        depth[s] = k
    entry = min(comp, key=lambda s: (depth[s], state_digest(s)))
    prefix = []
    x = entry
    while parent[x] is not None:
        x, u = parent[x]
        prefix.append(u)
    prefix.reverse()

    sub = g.subgraph(comp)
    back = {entry: None}
    queue = deque([entry])
    closing = None
    while queue and closing is None:
        s = queue.popleft()
        for t in sorted(sub.successors(s), key=state_digest):
            if t == entry:
                closing = s
                break
            if t not in back:
                back[t] = s
                queue.append(t)
    states = [closing]
    while states[-1] != entry:
        states.append(back[states[-1]])
    states.reverse()
    ring = states + [entry]
    cycle = tuple(sub.edges[a, b]["node"] for a, b in zip(ring, ring[1:]))
    return CycleWitness(tuple(prefix), cycle, tuple(states))


__all__ = [
    "CycleWitness",
    "SearchResult",
    "SearchSpaceExceeded",
    "StateBudgetExceeded",
    "StateGraph",
    "Verdict",
    "enumerate_stable_states",
    "exhaustive_search",
    "state_digest",
]
