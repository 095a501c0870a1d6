"""Activation-based protocol dynamics for the three selection modes.

A run starts from a global :class:`ProtocolState` and activates one node at a
time.  An activated node reads what its neighbors currently export to it,
forms candidate paths, and recomputes its own selection and what it exports
to every neighbor.  The hot loop lives in a kernel backend (see ``_kernel``);
this module compiles instances into the kernel's flat tables and translates
results back into paths.
"""

from __future__ import annotations

import enum
import json
import random
from array import array
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional, Sequence

from . import _kernel_py
from ._kernel import kernel as default_kernel
from .model import EMPTY, Instance, Mode, NodeId, Path, extend, format_path, validate
from .policy import is_exportable

BIG = _kernel_py.BIG
_MODE_CODES = {Mode.CONVENTIONAL: 0, Mode.FILTER_FIRST: 1, Mode.NEIGHBOR_SPECIFIC: 2}


class InvalidInstance(ValueError):
    def __init__(self, report):
        self.report = report
        super().__init__("; ".join(str(v) for v in report.errors))


# ---------------------------------------------------------------------------
# states


@dataclass(frozen=True)
class ProtocolState:
    """Global state: what every node exports to every neighbor, plus each
    node's own selection.  A node's rib-in is what its neighbors export to it."""

    exported: tuple  # sorted ((exporter, neighbor), path)
    own: tuple  # sorted (node, path)

    @classmethod
    def from_maps(cls, exported: Mapping, own: Mapping) -> "ProtocolState":
        return cls(
            tuple(sorted((k, tuple(p)) for k, p in exported.items())),
            tuple(sorted((k, tuple(p)) for k, p in own.items())),
        )

    @property
    def exports(self) -> dict:
        return dict(self.exported)

    @property
    def selections(self) -> dict:
        return dict(self.own)

    def export(self, u: NodeId, v: NodeId) -> Path:
        return self.exports.get((u, v), EMPTY)

    def own_selection(self, u: NodeId) -> Path:
        return self.selections.get(u, EMPTY)

    def rib_in(self, u: NodeId) -> dict:
        return {x: p for (x, y), p in self.exported if y == u}

    def render(self, nodes: Sequence[NodeId], changed: Iterable[NodeId] = ()) -> str:
        """Tuple of own selections, e.g. ``((1 3 d), (2 d), (3 d))``; changed
        entries are wrapped in underscores."""
        sel = self.selections
        changed = set(changed)
        parts = []
        for u in nodes:
            text = format_path(sel.get(u, EMPTY))
            parts.append(f"_{text}_" if u in changed else text)
        return "(" + ", ".join(parts) + ")"

    def to_dict(self) -> dict:
        return {
            "own": {u: list(p) for u, p in self.own},
            "exported": {f"{u}->{v}": list(p) for (u, v), p in self.exported},
        }


class OutcomeKind(str, enum.Enum):
    CONVERGED = "converged"
    CYCLE = "cycle"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Outcome:
    kind: OutcomeKind
    steps: int
    state: Optional[ProtocolState] = None
    states: tuple = ()
    entry_step: int = -1
    cycle_schedule: tuple = ()

    @property
    def converged(self) -> bool:
        return self.kind is OutcomeKind.CONVERGED


@dataclass(frozen=True)
class TraceStep:
    step: int
    node: NodeId
    state: ProtocolState
    changed: bool
    own_changed: bool

    def to_record(self) -> dict:
        rec = {"step": self.step, "node": self.node, "changed": self.changed, "own_changed": self.own_changed}
        rec.update(self.state.to_dict())
        return rec


# ---------------------------------------------------------------------------
# schedules


class ScheduleKind(str, enum.Enum):
    ROUND_ROBIN = "round-robin"
    EXPLICIT = "explicit"
    RANDOM = "random"


@dataclass(frozen=True)
class Schedule:
    kind: ScheduleKind
    order: tuple = ()
    seed: int = 0
    fairness_window: Optional[int] = None

    @classmethod
    def round_robin(cls, order: Iterable[NodeId] = ()) -> "Schedule":
        return cls(ScheduleKind.ROUND_ROBIN, tuple(order))

    @classmethod
    def explicit(cls, sequence: Iterable[NodeId]) -> "Schedule":
        seq = tuple(sequence)
        if not seq:
            raise ValueError("explicit schedule needs at least one node")
        return cls(ScheduleKind.EXPLICIT, seq)

    @classmethod
    def random(cls, seed: int, fairness_window: Optional[int] = None) -> "Schedule":
        return cls(ScheduleKind.RANDOM, (), seed, fairness_window)

    @classmethod
    def parse(cls, text: str) -> "Schedule":
        """``round-robin``, ``random:<seed>[:<window>]`` or ``a,b,c`` (repeated)."""
        text = text.strip()
        if text in ("round-robin", "rr"):
            return cls.round_robin()
        if text.startswith("random"):
            parts = text.split(":")
            seed = int(parts[1]) if len(parts) > 1 and parts[1] else 0
            window = int(parts[2]) if len(parts) > 2 else None
            return cls.random(seed, window)
        return cls.explicit(x.strip() for x in text.split(",") if x.strip())

    def describe(self) -> str:
        if self.kind is ScheduleKind.RANDOM:
            w = "" if self.fairness_window is None else f":{self.fairness_window}"
            return f"random:{self.seed}{w}"
        if self.kind is ScheduleKind.ROUND_ROBIN and not self.order:
            return "round-robin"
        return ",".join(self.order)

    @property
    def periodic(self) -> bool:
        return self.kind is not ScheduleKind.RANDOM


def fair_random_sequence(nodes: Sequence[NodeId], seed: int, window: int) -> Iterator[NodeId]:
    """Endless random activations in which every node fires at least once in
    every ``window`` consecutive steps.

    Each step draws uniformly among the nodes whose choice keeps all other
    deadlines satisfiable (earliest-deadline feasibility).  Uses Python's
    Mersenne Twister, which is reproducible across platforms for int seeds.
    """
    nodes = list(nodes)
    n = len(nodes)
    if window < n:
        raise ValueError(f"fairness window {window} shorter than node count {n}")
    rng = random.Random(seed)
    deadline = [window - 1] * n
    t = 0
    while True:
        order = sorted(range(n), key=deadline.__getitem__)
        d = [deadline[i] for i in order]
        # removing sorted index j leaves d[i] at slot i (i < j) or i - 1 (i > j)
        prefix_ok = [True] * (n + 1)
        for i in range(n):
            prefix_ok[i + 1] = prefix_ok[i] and d[i] >= t + 1 + i
        suffix_ok = [True] * (n + 1)
        for i in range(n - 1, -1, -1):
            suffix_ok[i] = suffix_ok[i + 1] and d[i] >= t + i
        allowed = [order[j] for j in range(n) if prefix_ok[j] and suffix_ok[j + 1]]
        c = allowed[rng.randrange(len(allowed))]
        deadline[c] = t + window
        t += 1
        yield nodes[c]


def _recording(seq, fired, index):
    for u in seq:
        fired.append(u)
        yield index[u]


# ---------------------------------------------------------------------------
# compilation


class CompiledInstance:
    """Flat integer tables consumed by the kernels.

    Path id 0 is the origin path ``(d)``.  ``ext[u*P + p]`` is the id of
    ``(u) + path p`` when that path is acceptable to ``u`` (else -1).
    ``rank_self[u*P + q]`` ranks ``q`` for ``u``'s own traffic;
    ``rank_out[e*P + q]`` ranks ``q`` for export over edge ``e`` with
    non-exportable or unacceptable paths at ``BIG``; ``expok[e*P + q]`` is the
    raw exportability bit used by conventional mode.
    """

    def __init__(self, inst: Instance):
        report = validate(inst)
        if report.errors:
            raise InvalidInstance(report)
        self.instance = inst
        self.node_ids = list(inst.nodes)
        self.index = {u: i for i, u in enumerate(self.node_ids)}
        self.n = n = len(self.node_ids)
        self.dst = self.index[inst.destination]
        self.mode = _MODE_CODES[inst.mode]

        paths = [(inst.destination,)]
        seen = {paths[0]: 0}
        for key in sorted(inst.rankings, key=lambda k: (k[0], k[1] or "")):
            for p in inst.rankings[key].acceptable:
                if p not in seen:
                    seen[p] = len(paths)
                    paths.append(p)
        self.paths = paths
        self.path_id = seen
        self.P = P = len(paths)

        edges = []
        adj_start = [0]
        for u in self.node_ids:
            for v in inst.neighbors[u]:
                edges.append((u, v))
            adj_start.append(len(edges))
        self.edges = edges
        self.edge_id = {e: i for i, e in enumerate(edges)}
        self.E = E = len(edges)
        self.adj_start = array("i", adj_start)
        self.adj_nbr = array("i", [self.index[v] for _, v in edges])
        self.rev = array("i", [self.edge_id[(v, u)] for u, v in edges])

        ext = array("i", [-1]) * (n * P)
        owned = {u: [] for u in self.node_ids}
        for q, p in enumerate(paths):
            owned[p[0]].append(q)
            if len(p) >= 2 and p[1:] in seen:
                ext[self.index[p[0]] * P + seen[p[1:]]] = q
        self.ext = ext

        rank_self = array("i", [BIG]) * (n * P)
        rank_out = array("i", [BIG]) * (max(E, 1) * P)
        expok = array("i", [0]) * (max(E, 1) * P)
        for u in self.node_ids:
            if u == inst.destination:
                continue
            ui = self.index[u]
            rf = inst.self_ranking(u)
            for q in owned[u]:
                r = rf.rank(paths[q])
                if r is not None:
                    rank_self[ui * P + q] = r
            for v in inst.neighbors[u]:
                e = self.edge_id[(u, v)]
                rf_v = inst.ranking_for(u, v)
                for q in owned[u]:
                    ok = is_exportable(inst, u, v, paths[q])
                    expok[e * P + q] = int(ok)
                    r = rf_v.rank(paths[q])
                    if ok and r is not None:
                        rank_out[e * P + q] = r
        self.rank_self = rank_self
        self.rank_out = rank_out
        self.expok = expok
        self._decoded = {}

    # state translation

    def encode(self, state: ProtocolState) -> tuple:
        out = [-1] * (self.E + self.n)
        pid = self.path_id
        for (u, v), p in state.exported:
            if p:
                if p not in pid:
                    raise ValueError(f"exported path {format_path(p)} is not acceptable to its owner")
                out[self.edge_id[(u, v)]] = pid[p]
        for u, p in state.own:
            if p:
                if p not in pid:
                    raise ValueError(f"selected path {format_path(p)} is not acceptable to its owner")
                out[self.E + self.index[u]] = pid[p]
        return tuple(out)

    def decode(self, code: tuple) -> ProtocolState:
        hit = self._decoded.get(code)
        if hit is not None:
            return hit
        paths = self.paths
        exported = tuple(
            sorted((self.edges[e], paths[code[e]] if code[e] >= 0 else EMPTY) for e in range(self.E))
        )
        own = tuple(
            sorted((u, paths[code[self.E + i]] if code[self.E + i] >= 0 else EMPTY) for i, u in enumerate(self.node_ids))
        )
        state = ProtocolState(exported, own)
        if len(self._decoded) < 100_000:
            self._decoded[code] = state
        return state

    def initial_code(self) -> tuple:
        out = [-1] * (self.E + self.n)
        for e in range(self.adj_start[self.dst], self.adj_start[self.dst + 1]):
            out[e] = 0
        out[self.E + self.dst] = 0
        return tuple(out)

    def pin_destination(self, code: tuple) -> tuple:
        out = list(code)
        for e in range(self.adj_start[self.dst], self.adj_start[self.dst + 1]):
            out[e] = 0
        out[self.E + self.dst] = 0
        return tuple(out)


# ---------------------------------------------------------------------------
# simulator


class Simulator:
    """Runs the dynamics of one instance on a chosen kernel backend."""

    def __init__(self, inst: Instance, kernel=None):
        self.instance = inst
        self.compiled = CompiledInstance(inst)
        self.kernel = kernel or default_kernel

    @property
    def default_max_steps(self) -> int:
        return 1000 * len(self.instance.nodes)

    def initial_state(self) -> ProtocolState:
        """All rib-ins empty except the destination's permanent ``(d)``."""
        return self.compiled.decode(self.compiled.initial_code())

    def state_from_selections(self, selections: Mapping) -> ProtocolState:
        """Conventional-mode state where each node exports its selection
        wherever the export policy allows it."""
        inst = self.instance
        if inst.mode is not Mode.CONVENTIONAL:
            raise ValueError("selection-derived states are defined for conventional mode only")
        d = inst.destination
        own = {u: tuple(selections.get(u, EMPTY)) for u in inst.nodes}
        own[d] = (d,)
        exported = {}
        for u in inst.nodes:
            for v in inst.neighbors[u]:
                p = own[u]
                exported[(u, v)] = p if p and is_exportable(inst, u, v, p) else EMPTY
        return ProtocolState.from_maps(exported, own)

    def candidates(self, state: ProtocolState, u: NodeId) -> set:
        if u == self.instance.destination:
            raise ValueError("the destination has no candidates")
        out = {EMPTY}
        for v, p in state.rib_in(u).items():
            q = extend(p, u)
            if q is not None:
                out.add(q)
        return out

    def activate(self, state: ProtocolState, u: NodeId) -> ProtocolState:
        code, _ = self.kernel.step(self.compiled, self.compiled.encode(state), self.compiled.index[u])
        return self.compiled.decode(code)

    def is_stable(self, state: ProtocolState) -> bool:
        return not self.kernel.unstable_nodes(self.compiled, self.compiled.encode(state))

    def schedule_sequence(self, schedule: Schedule):
        """``(nodes, period)``: one period of a periodic schedule, or an
        endless iterator with period 0."""
        inst = self.instance
        active = [u for u in inst.nodes if u != inst.destination]
        if schedule.kind is ScheduleKind.RANDOM:
            window = schedule.fairness_window or 2 * len(inst.nodes)
            return fair_random_sequence(active, schedule.seed, window), 0
        seq = list(schedule.order) or active
        for u in seq:
            if u not in self.compiled.index:
                raise ValueError(f"schedule names unknown node {u!r}")
        return seq, len(seq)

    def simulate(
        self,
        schedule: Schedule,
        max_steps: Optional[int] = None,
        initial: Optional[ProtocolState] = None,
        record: bool = True,
    ):
        """Run and return ``(Outcome, list[TraceStep])``."""
        if max_steps is None:
            max_steps = self.default_max_steps
        if max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        ck = self.compiled
        seq, period = self.schedule_sequence(schedule)
        start = ck.initial_code() if initial is None else ck.pin_destination(ck.encode(initial))
        index = ck.index
        if period:
            fired = seq
            feed = [index[u] for u in seq]
        else:
            fired = []
            feed = _recording(seq, fired, index)
        code, steps, entry, states = self.kernel.run(ck, start, feed, period, max_steps)

        def node_at(t):
            return fired[t % period] if period else fired[t]

        if code == _kernel_py.CONVERGED:
            outcome = Outcome(OutcomeKind.CONVERGED, steps, state=ck.decode(states[steps]))
        elif code == _kernel_py.CYCLE:
            segment = []
            for s in states[entry:steps]:
                if not segment or segment[-1] != s:
                    segment.append(s)
            if len(segment) > 1 and segment[-1] == segment[0]:
                segment.pop()
            outcome = Outcome(
                OutcomeKind.CYCLE,
                steps,
                states=tuple(ck.decode(s) for s in segment),
                entry_step=entry,
                cycle_schedule=tuple(node_at(t) for t in range(entry, steps)),
            )
        else:
            outcome = Outcome(OutcomeKind.INCONCLUSIVE, steps)

        trace = []
        if record:
            own_slot = ck.E
            for t in range(steps):
                u = node_at(t)
                before, after = states[t], states[t + 1]
                slot = own_slot + ck.index[u]
                trace.append(TraceStep(t + 1, u, ck.decode(after), before != after, before[slot] != after[slot]))
        return outcome, trace

    def run(self, schedule: Schedule, max_steps: Optional[int] = None, initial: Optional[ProtocolState] = None) -> Outcome:
        return self.simulate(schedule, max_steps, initial, record=False)[0]

    def trace(self, schedule: Schedule, max_steps: Optional[int] = None, initial: Optional[ProtocolState] = None) -> list:
        return self.simulate(schedule, max_steps, initial)[1]


# module-level conveniences mirroring the simulator methods


def candidates(inst: Instance, state: ProtocolState, u: NodeId) -> set:
    return Simulator(inst).candidates(state, u)


def activate(inst: Instance, state: ProtocolState, u: NodeId) -> ProtocolState:
    return Simulator(inst).activate(state, u)


def is_stable(inst: Instance, state: ProtocolState) -> bool:
    return Simulator(inst).is_stable(state)


def initial_state(inst: Instance) -> ProtocolState:
    return Simulator(inst).initial_state()


def run(inst: Instance, schedule: Schedule, max_steps: Optional[int] = None, initial=None) -> Outcome:
    return Simulator(inst).run(schedule, max_steps, initial)


def trace(inst: Instance, schedule: Schedule, max_steps: Optional[int] = None, initial=None) -> list:
    return Simulator(inst).trace(schedule, max_steps, initial)


def write_trace(steps: Sequence[TraceStep], fh, nodes: Optional[Sequence[NodeId]] = None) -> None:
    """One JSON record per line; ``nodes`` adds a ``tuple`` rendering field."""
    for s in steps:
        rec = s.to_record()
        if nodes is not None:
            rec["tuple"] = s.state.render(nodes, [s.node] if s.own_changed else ())
        fh.write(json.dumps(rec, sort_keys=True) + "\n")
