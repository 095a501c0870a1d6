"""Export policies and static checks of the stability conditions."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Union

import networkx as nx

from .model import CUSTOMER_OF, EMPTY, Instance, Mode, NodeId, Path, format_path

LEARNED_CLASSES = ("customer-learned", "peer-learned", "provider-learned", "origin")


class GaoRexford:
    """Transit only for customers: everything goes to customers, only
    customer-learned (or originated) routes go to peers and providers."""

    def __repr__(self):
        return "GaoRexford()"

    def __eq__(self, other):
        return isinstance(other, GaoRexford)

    def __hash__(self):
        return hash(GaoRexford)


GAO_REXFORD = GaoRexford()


@dataclass(frozen=True)
class ExportRule:
    src: NodeId
    dst: NodeId
    action: str  # "allow" | "deny"
    match: Union[str, Path]  # a learned class or an exact path

    def __post_init__(self):
        if self.action not in ("allow", "deny"):
            raise ValueError(f"export rule action must be allow/deny, got {self.action!r}")
        if isinstance(self.match, str):
            if self.match not in LEARNED_CLASSES:
                raise ValueError(f"unknown match class {self.match!r}")
        else:
            object.__setattr__(self, "match", tuple(self.match))

    def matches(self, inst: Instance, path: Path) -> bool:
        if isinstance(self.match, tuple):
            return path == self.match
        return learned_class(inst, path) == self.match


@dataclass(frozen=True)
class ExplicitPolicy:
    """First matching rule wins; anything unmatched is denied."""

    rules: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))

    def allows(self, inst: Instance, exporter: NodeId, neighbor: NodeId, path: Path) -> bool:
        for rule in self.rules:
            if rule.src == exporter and rule.dst == neighbor and rule.matches(inst, path):
                return rule.action == "allow"
        return False


def learned_class(inst: Instance, path: Path) -> str:
    """How the owner of ``path`` learned it, judged by the first hop."""
    if len(path) == 1:
        return "origin"
    return f"{inst.relation(path[0], path[1])}-learned"


def gao_rexford_allows(inst: Instance, exporter: NodeId, neighbor: NodeId, path: Path) -> bool:
    if not path:
        return False
    if inst.relation(exporter, neighbor) == "customer":
        return True
    if exporter == inst.destination and path == (exporter,):
        return True
    return len(path) > 1 and inst.relation(exporter, path[1]) == "customer"


def is_exportable(inst: Instance, exporter: NodeId, neighbor: NodeId, path: Path) -> bool:
    """Whether ``exporter`` may announce ``path`` to ``neighbor``.

    ``EMPTY`` is a withdrawal and is never "exported".
    """
    if not inst.adjacent(exporter, neighbor):
        raise ValueError(f"{exporter} and {neighbor} are not adjacent")
    path = tuple(path)
    if not path:
        return False
    if path[0] != exporter:
        raise ValueError(f"path {format_path(path)} does not start at exporter {exporter}")
    policy = inst.export if inst.export is not None else GAO_REXFORD
    if isinstance(policy, ExplicitPolicy):
        return policy.allows(inst, exporter, neighbor, path)
    return gao_rexford_allows(inst, exporter, neighbor, path)


# ---------------------------------------------------------------------------
# condition reports


class Condition(str, enum.Enum):
    EXPORT_CONDITION = "export-condition"
    TOPOLOGY_CONDITION = "topology-condition"
    GR_PREFERENCE = "gr-preference"
    NSBGP_SAFETY = "nsbgp-safety"


@dataclass(frozen=True)
class Witness:
    nodes: tuple
    paths: tuple
    explanation: str

    def to_dict(self) -> dict:
        return {"nodes": list(self.nodes), "paths": [list(p) for p in self.paths], "explanation": self.explanation}


@dataclass
class ConditionReport:
    condition: Condition
    passed: bool
    witnesses: list = field(default_factory=list)
    parts: list = field(default_factory=list)

    def __post_init__(self):
        if not self.passed and not self.witnesses:
            raise ValueError("a failing report needs at least one witness")

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def to_dict(self) -> dict:
        out = {
            "condition": self.condition.value,
            "verdict": self.verdict,
            "witnesses": [w.to_dict() for w in self.witnesses],
        }
        if self.parts:
            out["parts"] = [p.to_dict() for p in self.parts]
        return out

    def render(self) -> str:
        lines = [f"{self.condition.value}: {self.verdict.upper()}"]
        lines += [f"  - {w.explanation}" for w in self.witnesses]
        return "\n".join(lines)


def _report(condition, witnesses) -> ConditionReport:
    return ConditionReport(condition, not witnesses, list(witnesses))


def check_topology_condition(inst: Instance) -> ConditionReport:
    """No AS may be its own indirect provider."""
    g = nx.DiGraph()
    g.add_nodes_from(inst.nodes)
    for rel in inst.relationships:
        if rel.kind == CUSTOMER_OF:
            g.add_edge(rel.a, rel.b)  # customer -> provider
    try:
        cycle = [u for u, _ in nx.find_cycle(g)]
    except nx.NetworkXNoCycle:
        return _report(Condition.TOPOLOGY_CONDITION, [])
    start = cycle.index(min(cycle))
    cycle = cycle[start:] + cycle[:start]
    chain = " -> ".join(cycle + [cycle[0]])
    w = Witness(tuple(cycle), (), f"customer-provider cycle {chain} (each node is a customer of the next)")
    return _report(Condition.TOPOLOGY_CONDITION, [w])


def check_gr_preference(inst: Instance) -> ConditionReport:
    """Customer-learned paths must outrank every peer/provider-learned path."""
    if inst.mode is Mode.NEIGHBOR_SPECIFIC:
        raise ValueError("the Gao-Rexford preference condition applies to single-ranking modes only")
    witnesses = []
    for u in inst.nodes:
        rf = inst.rankings.get((u, None))
        if rf is None:
            continue
        classes = [learned_class(inst, p) for p in rf.acceptable]
        for i, p in enumerate(rf.acceptable):
            if classes[i] in ("peer-learned", "provider-learned"):
                for j in range(i + 1, len(rf.acceptable)):
                    if classes[j] == "customer-learned":
                        q = rf.acceptable[j]
                        witnesses.append(
                            Witness(
                                (u,),
                                (q, p),
                                f"node {u} ranks {classes[i]} {format_path(p)} above customer-learned {format_path(q)}",
                            )
                        )
    return _report(Condition.GR_PREFERENCE, witnesses)


def check_export_condition(inst: Instance) -> ConditionReport:
    """Everything a node can ever announce to a neighbor must be Gao-Rexford exportable.

    In neighbor-specific mode the per-neighbor rankings themselves are inspected;
    otherwise the node's single ranking is filtered through the configured policy.
    """
    witnesses = []
    ns = inst.mode is Mode.NEIGHBOR_SPECIFIC
    for u in inst.nodes:
        if u == inst.destination:
            continue
        for v in inst.neighbors[u]:
            rf = inst.rankings.get((u, v) if ns else (u, None))
            if rf is None:
                continue
            for p in rf.acceptable:
                if not ns and not is_exportable(inst, u, v, p):
                    continue
                if not gao_rexford_allows(inst, u, v, p):
                    witnesses.append(
                        Witness(
                            (u, v),
                            (p,),
                            f"node {u} may announce {learned_class(inst, p)} {format_path(p)} "
                            f"to its {inst.relation(u, v)} {v}",
                        )
                    )
    return _report(Condition.EXPORT_CONDITION, witnesses)


def check_nsbgp_safety(inst: Instance) -> ConditionReport:
    """Sufficient condition for NS-BGP safety: acyclic hierarchy plus export condition."""
    if inst.mode is not Mode.NEIGHBOR_SPECIFIC:
        raise ValueError("the NS-BGP safety condition applies to neighbor-specific instances")
    topo = check_topology_condition(inst)
    export = check_export_condition(inst)
    return ConditionReport(
        Condition.NSBGP_SAFETY,
        topo.passed and export.passed,
        topo.witnesses + export.witnesses,
        [topo, export],
    )


def applicable_checks(inst: Instance) -> list:
    reports = [check_topology_condition(inst), check_export_condition(inst)]
    if inst.mode is Mode.NEIGHBOR_SPECIFIC:
        reports.append(check_nsbgp_safety(inst))
    else:
        reports.append(check_gr_preference(inst))
    return reports


def export_policy_to_json(policy) -> Optional[object]:
    if policy is None or isinstance(policy, GaoRexford):
        return "gao-rexford"
    rules = []
    for r in policy.rules:
        match = {"path": list(r.match)} if isinstance(r.match, tuple) else r.match
        rules.append({"from": r.src, "to": r.dst, "action": r.action, "match": match})
    return {"rules": rules}


def export_policy_from_json(data) -> object:
    if data is None or data == "gao-rexford":
        return GAO_REXFORD
    if isinstance(data, str):
        raise ValueError(f"unknown export policy {data!r}")
    if set(data) - {"rules"}:
        raise ValueError(f"unknown export keys {sorted(set(data) - {'rules'})}")
    rules = []
    for i, entry in enumerate(data.get("rules", [])):
        extra = set(entry) - {"from", "to", "action", "match"}
        if extra:
            raise ValueError(f"export rule {i}: unknown keys {sorted(extra)}")
        match = entry["match"]
        if isinstance(match, dict):
            if set(match) != {"path"}:
                raise ValueError(f"export rule {i}: match object must be {{'path': [...]}}")
            match = tuple(match["path"])
        rules.append(ExportRule(entry["from"], entry["to"], entry["action"], match))
    return ExplicitPolicy(tuple(rules))


__all__ = [
    "EMPTY",
    "Condition",
    "ConditionReport",
    "ExplicitPolicy",
    "ExportRule",
    "GAO_REXFORD",
    "GaoRexford",
    "Witness",
    "applicable_checks",
    "check_export_condition",
    "check_gr_preference",
    "check_nsbgp_safety",
    "check_topology_condition",
    "gao_rexford_allows",
    "is_exportable",
    "learned_class",
]
