"""Core domain types: nodes, relationships, paths, ranking functions, instances.

Paths are plain tuples of node labels ending at the destination, e.g.
``("1", "3", "d")``.  The empty tuple :data:`EMPTY` stands for "no route".
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Mapping, Optional

NodeId = str
Path = tuple
EMPTY: Path = ()

CUSTOMER_OF = "customer-of"
PEER = "peer"


class Mode(str, enum.Enum):
    CONVENTIONAL = "conventional"
    FILTER_FIRST = "filter-first"
    NEIGHBOR_SPECIFIC = "neighbor-specific"

    @classmethod
    def parse(cls, text: str) -> "Mode":
        key = text.strip().lower().replace("_", "-")
        aliases = {"ns": "neighbor-specific", "ns-bgp": "neighbor-specific", "ff": "filter-first"}
        return cls(aliases.get(key, key))


@dataclass(frozen=True)
class Relationship:
    """``kind == "customer-of"`` means *a* is a customer of *b*."""

    a: NodeId
    b: NodeId
    kind: str = PEER

    def __post_init__(self):
        if self.kind not in (CUSTOMER_OF, PEER):
            raise ValueError(f"unknown relationship kind {self.kind!r}")

    @classmethod
    def customer_provider(cls, customer: NodeId, provider: NodeId) -> "Relationship":
        return cls(customer, provider, CUSTOMER_OF)

    @classmethod
    def peer(cls, a: NodeId, b: NodeId) -> "Relationship":
        return cls(a, b, PEER)

    @property
    def pair(self) -> frozenset:
        return frozenset((self.a, self.b))


@dataclass(frozen=True)
class RankingFunction:
    """Strict order over acceptable paths, most preferred first.

    Paths not listed are unacceptable and rank below ``EMPTY``.
    """

    owner: NodeId
    acceptable: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "acceptable", tuple(tuple(p) for p in self.acceptable))

    @cached_property
    def _positions(self) -> dict:
        return {p: i for i, p in enumerate(self.acceptable)}

    def rank(self, path: Path) -> Optional[int]:
        """Position of ``path`` (0 = best), ``None`` if unacceptable."""
        return self._positions.get(tuple(path))

    def is_acceptable(self, path: Path) -> bool:
        return tuple(path) in self._positions

    def best(self, paths: Iterable[Path]) -> Path:
        """Most preferred acceptable path among ``paths``, or ``EMPTY``."""
        best, best_rank = EMPTY, None
        for p in paths:
            r = self._positions.get(p)
            if r is not None and (best_rank is None or r < best_rank):
                best, best_rank = p, r
        return best

    def restricted(self, keep) -> "RankingFunction":
        return RankingFunction(self.owner, tuple(p for p in self.acceptable if keep(p)))


def ranking_key(owner: NodeId, neighbor: Optional[NodeId] = None) -> tuple:
    """Key into :attr:`Instance.rankings`; ``neighbor=None`` is the node's own ranking."""
    return (owner, neighbor)


@dataclass(frozen=True)
class Instance:
    """A routing instance for a single destination.

    ``rankings`` maps ``(owner, None)`` to the node's own ranking function and,
    in neighbor-specific mode, ``(owner, neighbor)`` to the ranking used to pick
    the route exported to that neighbor.
    """

    nodes: tuple
    relationships: tuple
    destination: NodeId
    mode: Mode = Mode.CONVENTIONAL
    rankings: Mapping = field(default_factory=dict)
    export: object = None  # policy.ExportPolicy; None means Gao-Rexford default

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "relationships", tuple(self.relationships))
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "rankings", dict(self.rankings))

    @cached_property
    def neighbors(self) -> dict:
        adj = {n: [] for n in self.nodes}
        for rel in self.relationships:
            for x, y in ((rel.a, rel.b), (rel.b, rel.a)):
                if x in adj and y not in adj[x]:
                    adj[x].append(y)
        return {n: tuple(sorted(vs)) for n, vs in adj.items()}

    @cached_property
    def _relation_table(self) -> dict:
        table = {}
        for rel in self.relationships:
            if rel.kind == PEER:
                table[(rel.a, rel.b)] = "peer"
                table[(rel.b, rel.a)] = "peer"
            else:
                table[(rel.b, rel.a)] = "customer"
                table[(rel.a, rel.b)] = "provider"
        return table

    def relation(self, u: NodeId, v: NodeId) -> Optional[str]:
        """What ``v`` is to ``u``: ``"customer"``, ``"peer"``, ``"provider"`` or ``None``."""
        return self._relation_table.get((u, v))

    def adjacent(self, u: NodeId, v: NodeId) -> bool:
        return (u, v) in self._relation_table

    def ranking_for(self, u: NodeId, v: NodeId) -> RankingFunction:
        """Ranking ``u`` uses to choose the route announced to ``v``."""
        key = (u, v) if self.mode is Mode.NEIGHBOR_SPECIFIC else (u, None)
        try:
            return self.rankings[key]
        except KeyError:
            raise KeyError(f"missing ranking {format_ranking_key(key)} for mode {self.mode.value}") from None

    def self_ranking(self, u: NodeId) -> RankingFunction:
        try:
            return self.rankings[(u, None)]
        except KeyError:
            raise KeyError(f"missing ranking {u} for its own traffic") from None

    def with_mode(self, mode) -> "Instance":
        return replace(self, mode=Mode(mode))

    def as_neighbor_specific(self) -> "Instance":
        """Copy every node's single ranking to each of its neighbors."""
        rankings = dict(self.rankings)
        for u in self.nodes:
            if u == self.destination or (u, None) not in self.rankings:
                continue
            for v in self.neighbors[u]:
                rankings.setdefault((u, v), self.rankings[(u, None)])
        return replace(self, mode=Mode.NEIGHBOR_SPECIFIC, rankings=rankings)


def format_ranking_key(key: tuple) -> str:
    owner, neighbor = key
    return owner if neighbor is None else f"{owner}->{neighbor}"


def extend(neighbor_path: Path, via: NodeId) -> Optional[Path]:
    """Prepend ``via`` to a neighbor's path; ``None`` when rejected (empty or loop)."""
    if not neighbor_path or via in neighbor_path:
        return None
    return (via,) + tuple(neighbor_path)


def format_path(path: Path) -> str:
    return "(" + " ".join(path) + ")"


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    witness: tuple = ()
    severity: str = "error"

    def __str__(self):
        return f"{self.severity}: {self.code}: {self.message}"


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def errors(self) -> list:
        return [v for v in self.violations if v.severity == "error"]

    def add(self, code, message, witness=(), severity="error"):
        self.violations.append(Violation(code, message, tuple(witness), severity))

    def __iter__(self):
        return iter(self.violations)

    def __len__(self):
        return len(self.violations)


def _check_path(inst: Instance, path: Path, owner: NodeId, where: str, report: ValidationReport):
    if not path:
        report.add("empty-path", f"{where}: empty path listed as acceptable", (owner,))
        return
    if path[0] != owner:
        report.add("wrong-owner", f"{where}: path {format_path(path)} does not start at {owner}", (owner, path))
    if path[-1] != inst.destination:
        report.add("wrong-end", f"{where}: path {format_path(path)} does not end at {inst.destination}", (owner, path))
    if len(set(path)) != len(path):
        report.add("not-simple", f"{where}: path {format_path(path)} repeats a node", (owner, path))
    for x in path:
        if x not in inst.neighbors:
            report.add("unknown-node", f"{where}: path {format_path(path)} uses unknown node {x}", (owner, path))
            return
    for x, y in zip(path, path[1:]):
        if not inst.adjacent(x, y):
            report.add(
                "path uses non-edge",
                f"{where}: path {format_path(path)} uses non-edge {x}-{y}",
                (owner, path, (x, y)),
            )


def validate(inst: Instance) -> ValidationReport:
    """Check every structural invariant of ``inst``; never raises."""
    report = ValidationReport()
    if len(set(inst.nodes)) != len(inst.nodes):
        report.add("duplicate-node", "node list contains duplicates")
    nodes = set(inst.nodes)
    if inst.destination not in nodes:
        report.add("destination missing", f"destination {inst.destination!r} not in nodes", (inst.destination,))

    pairs = set()
    for rel in inst.relationships:
        if rel.a == rel.b:
            report.add("self-relationship", f"node {rel.a} related to itself", (rel.a,))
        for x in (rel.a, rel.b):
            if x not in nodes:
                report.add("unknown-node", f"relationship mentions unknown node {x}", (x,))
        if rel.pair in pairs:
            report.add("duplicate-relationship", f"more than one relationship between {rel.a} and {rel.b}", (rel.a, rel.b))
        pairs.add(rel.pair)

    if inst.destination in nodes and not inst.neighbors.get(inst.destination):
        report.add("disconnected", "no node is adjacent to the destination", (inst.destination,), "warning")

    for key, rf in inst.rankings.items():
        owner, neighbor = key
        where = f"ranking {format_ranking_key(key)}"
        if owner not in nodes:
            report.add("unknown-node", f"{where}: unknown owner", (owner,))
            continue
        if rf.owner != owner:
            report.add("wrong-owner", f"{where}: ranking owned by {rf.owner}", (owner, rf.owner))
        if owner == inst.destination:
            report.add("destination-ranking", f"{where}: the destination has no ranking", (owner,))
        if neighbor is not None:
            if inst.mode is not Mode.NEIGHBOR_SPECIFIC:
                report.add("unexpected-ranking", f"{where}: per-neighbor ranking outside neighbor-specific mode", key)
            elif not inst.adjacent(owner, neighbor):
                report.add("not-adjacent", f"{where}: {neighbor} is not a neighbor of {owner}", key)
        if len(set(rf.acceptable)) != len(rf.acceptable):
            report.add("duplicate-path", f"{where}: repeated path (order must be strict)", key)
        for p in rf.acceptable:
            _check_path(inst, p, owner, where, report)

    for u in inst.nodes:
        if u == inst.destination:
            continue
        if (u, None) not in inst.rankings:
            report.add("missing-ranking", f"node {u} has no ranking for its own traffic", (u,))
        if inst.mode is Mode.NEIGHBOR_SPECIFIC:
            for v in inst.neighbors.get(u, ()):
                if (u, v) not in inst.rankings:
                    report.add("missing-ranking", f"node {u} has no ranking for neighbor {v}", (u, v))
    return report
