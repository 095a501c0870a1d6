"""Inside one AS: internal routers, IGP costs, iBGP route dissemination,
hot-potato egress choice, per-ingress-link route assignment and tunnels.

An *offer* is ``(link_id, path)``: an external route learned on an external
link.  A *selection* maps every external link (seen as an ingress link) to
the offer announced over it, or ``None``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Optional

import networkx as nx

from .model import Mode, ValidationReport

RELATIONSHIPS = ("customer", "peer", "provider")


@dataclass(frozen=True)
class ExternalLink:
    link_id: str
    router: str
    neighbor: str
    relationship: str  # what the neighbor is to this AS

    def __post_init__(self):
        if self.relationship not in RELATIONSHIPS:
            raise ValueError(f"link {self.link_id}: unknown relationship {self.relationship!r}")


class DisseminationKind(str, enum.Enum):
    SINGLE_BEST_FULL_MESH = "single-best"
    ROUTE_REFLECTOR = "route-reflector"
    ADD_PATHS = "add-paths"
    RCP_FULL = "rcp"


@dataclass(frozen=True)
class Dissemination:
    """How routes spread between internal routers.

    Session modes announce over ``sessions`` (default: IGP adjacencies) and
    re-announce what they learn, hop by hop.  ``ADD_PATHS`` announces the
    top ``k``; with ``class_best`` it announces the best route plus the best
    customer-learned route instead.  ``RCP_FULL`` gives every router every
    offer.
    """

    kind: DisseminationKind = DisseminationKind.SINGLE_BEST_FULL_MESH
    k: int = 1
    class_best: bool = False
    reflectors: tuple = ()
    clients: Mapping = field(default_factory=dict)  # reflector -> tuple of clients
    sessions: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", DisseminationKind(self.kind))
        object.__setattr__(self, "reflectors", tuple(self.reflectors))
        object.__setattr__(self, "clients", {r: tuple(c) for r, c in dict(self.clients).items()})
        object.__setattr__(self, "sessions", tuple(tuple(s) for s in self.sessions))
        if self.k < 1:
            raise ValueError("add-paths needs k >= 1")

    @classmethod
    def parse(cls, text: str) -> "Dissemination":
        """``single-best``, ``rcp``, ``add-paths:<k>`` or ``two-class``."""
        text = text.strip().lower()
        if text == "two-class":
            return cls(DisseminationKind.ADD_PATHS, k=2, class_best=True)
        if text.startswith("add-paths"):
            k = int(text.split(":", 1)[1]) if ":" in text else 2
            return cls(DisseminationKind.ADD_PATHS, k=k)
        return cls(DisseminationKind(text))

    def describe(self) -> str:
        if self.kind is DisseminationKind.ADD_PATHS:
            return "two-class" if self.class_best else f"add-paths:{self.k}"
        return self.kind.value


@dataclass(frozen=True)
class Classifier:
    """Attributes compared before the hot-potato tie-break; offers with equal
    keys are "equally good"."""

    attributes: tuple = ("relationship", "length")
    relationship_rank: Mapping = field(default_factory=lambda: {"customer": 0, "peer": 1, "provider": 2})

    def key(self, as_: "AsInternal", offer) -> tuple:
        link = as_.link(offer[0])
        out = []
        for attr in self.attributes:
            if attr == "relationship":
                out.append(self.relationship_rank[link.relationship])
            elif attr == "length":
                out.append(len(offer[1]))
            else:
                raise ValueError(f"unknown classifier attribute {attr!r}")
        return tuple(out)


@dataclass(frozen=True)
class AsInternal:
    name: str
    routers: tuple
    igp: Mapping  # (router, router) -> cost, undirected
    external_links: tuple
    offers: Mapping  # link_id -> external path
    dissemination: Dissemination = Dissemination()
    classifier: Classifier = Classifier()
    destination: str = "d"

    def __post_init__(self):
        object.__setattr__(self, "routers", tuple(self.routers))
        object.__setattr__(self, "external_links", tuple(self.external_links))
        object.__setattr__(self, "igp", {tuple(k): v for k, v in dict(self.igp).items()})
        object.__setattr__(self, "offers", {k: tuple(v) for k, v in dict(self.offers).items()})

    @cached_property
    def _links(self) -> dict:
        return {link.link_id: link for link in self.external_links}

    def link(self, link_id: str) -> ExternalLink:
        return self._links[link_id]

    @cached_property
    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.routers)
        for (a, b), cost in self.igp.items():
            g.add_edge(a, b, weight=cost)
        return g

    @cached_property
    def _distances(self) -> dict:
        return dict(nx.all_pairs_dijkstra_path_length(self.graph))

    def distance(self, a: str, b: str) -> float:
        return self._distances[a][b]

    def all_offers(self) -> set:
        return set(self.offers.items())

    def egress_router(self, offer) -> str:
        return self.link(offer[0]).router

    def relationship(self, offer) -> str:
        return self.link(offer[0]).relationship

    @cached_property
    def _visibility(self) -> tuple:
        return _disseminate(self)


def validate_as(as_: AsInternal) -> ValidationReport:
    report = ValidationReport()
    routers = set(as_.routers)
    for (a, b), cost in as_.igp.items():
        for r in (a, b):
            if r not in routers:
                report.add("unknown-router", f"IGP edge {a}-{b} names unknown router {r}", (a, b))
        if not cost > 0:
            report.add("bad-cost", f"IGP edge {a}-{b} has non-positive cost {cost}", (a, b))
    if routers and not nx.is_connected(as_.graph):
        report.add("igp-disconnected", "internal IGP graph is not connected")
    ids = [link.link_id for link in as_.external_links]
    for dup in sorted({i for i in ids if ids.count(i) > 1}):
        report.add("duplicate-link", f"link id {dup} used twice", (dup,))
    for link in as_.external_links:
        if link.router not in routers:
            report.add("unknown-router", f"link {link.link_id} attaches to unknown router {link.router}", (link.link_id,))
    for link_id, path in as_.offers.items():
        if link_id not in set(ids):
            report.add("unknown-link", f"offer on unknown link {link_id}", (link_id,))
        elif not path or path[-1] != as_.destination:
            report.add("bad-offer", f"offer on {link_id} does not end at {as_.destination}", (link_id,))
        elif path[0] != as_.link(link_id).neighbor:
            report.add("bad-offer", f"offer on {link_id} does not start at the link's neighbor", (link_id,))
    diss = as_.dissemination
    for a, b in diss.sessions:
        if a not in routers or b not in routers:
            report.add("unknown-router", f"session {a}-{b} names an unknown router", (a, b))
    if diss.kind is DisseminationKind.ROUTE_REFLECTOR:
        if not diss.reflectors:
            report.add("no-reflectors", "route-reflector mode without reflectors")
        for r in diss.reflectors:
            if r not in routers:
                report.add("unknown-router", f"reflector {r} is not a router", (r,))
        for r, clients in diss.clients.items():
            if r not in diss.reflectors:
                report.add("not-reflector", f"{r} has clients but is not a reflector", (r,))
            for c in clients:
                if c not in routers:
                    report.add("unknown-router", f"client {c} is not a router", (c,))
    return report


# ---------------------------------------------------------------------------
# route preference inside the AS


def _preference(as_: AsInternal, router: str, offer) -> tuple:
    """Sort key: classifier class, then IGP distance to the egress, then link id."""
    return (as_.classifier.key(as_, offer), as_.distance(router, as_.egress_router(offer)), offer[0])


def hot_potato_select(as_: AsInternal, router: str, offers):
    """Best offer in the top classifier class, closest egress first, then smallest link id."""
    offers = list(offers)
    if not offers:
        raise ValueError("hot_potato_select needs at least one offer")
    return min(offers, key=lambda o: _preference(as_, router, o))


# ---------------------------------------------------------------------------
# dissemination


def _sessions(as_: AsInternal) -> dict:
    diss = as_.dissemination
    peers = {r: set() for r in as_.routers}
    if diss.kind is DisseminationKind.ROUTE_REFLECTOR:
        pairs = [(r, c) for r, cs in diss.clients.items() for c in cs]
        refl = list(diss.reflectors)
        pairs += [(a, b) for i, a in enumerate(refl) for b in refl[i + 1:]]
    else:
        pairs = list(diss.sessions) or list(as_.igp)
    for a, b in pairs:
        peers[a].add(b)
        peers[b].add(a)
    return {r: sorted(s) for r, s in peers.items()}


def _may_send(as_: AsInternal, sender: str, receiver: str, ipath: tuple) -> bool:
    """Route-reflection rules; every other mode re-announces freely."""
    diss = as_.dissemination
    if diss.kind is not DisseminationKind.ROUTE_REFLECTOR:
        return True
    learned_from = ipath[-2] if len(ipath) > 1 else None
    if sender in diss.reflectors:
        clients = diss.clients.get(sender, ())
        if learned_from is None or learned_from in clients:
            return True
        return receiver in clients
    return learned_from is None


def _announce(as_: AsInternal, router: str, known: dict) -> dict:
    diss = as_.dissemination
    ranked = sorted(known, key=lambda o: _preference(as_, router, o))
    if diss.kind is DisseminationKind.ADD_PATHS:
        if diss.class_best:
            chosen = ranked[:1]
            cust = [o for o in ranked if as_.relationship(o) == "customer"]
            if cust and cust[0] not in chosen:
                chosen.append(cust[0])
            chosen = chosen[: diss.k]
        else:
            chosen = ranked[: diss.k]
    else:
        chosen = ranked[:1]
    return {o: known[o] for o in chosen}


def _disseminate(as_: AsInternal):
    """Fixed point of hop-by-hop announcements.

    Each announcement carries the internal router path it travelled; a router
    never accepts a route whose path already contains it, so routes cannot
    sustain themselves around loops.  Returns ``(known, announced)`` maps.
    """
    own = {r: {} for r in as_.routers}
    for link_id, path in sorted(as_.offers.items()):
        own[as_.link(link_id).router][(link_id, path)] = (as_.link(link_id).router,)
    if as_.dissemination.kind is DisseminationKind.RCP_FULL:
        everything = {o: () for o in as_.all_offers()}
        return {r: dict(everything) for r in as_.routers}, {r: {} for r in as_.routers}

    peers = _sessions(as_)
    announced = {r: {} for r in as_.routers}
    known = {r: dict(own[r]) for r in as_.routers}
    for _ in range(10 * len(as_.routers) + 100):
        changed = False
        for r in as_.routers:
            k = dict(own[r])
            for s in peers[r]:
                for o, ipath in announced[s].items():
                    if r in ipath or not _may_send(as_, s, r, ipath):
                        continue
                    cand = ipath + (r,)
                    have = k.get(o)
                    if have is None or (len(cand), cand) < (len(have), have):
                        k[o] = cand
            a = _announce(as_, r, k)
            if a != announced[r] or k != known[r]:
                changed = True
                announced[r] = a
                known[r] = k
        if not changed:
            return known, announced
    raise RuntimeError(f"route dissemination in {as_.name} did not settle")


def visible_routes(as_: AsInternal, router: str) -> set:
    """Offers ``router`` knows about under the configured dissemination."""
    known, _ = as_._visibility
    return set(known[router])


def dissemination_overhead(as_: AsInternal) -> dict:
    """Routes each router carries over the internal dissemination, per destination.

    Session modes count what a router announces to its iBGP peers; with a
    route control platform every router is handed every offer.
    """
    known, announced = as_._visibility
    if as_.dissemination.kind is DisseminationKind.RCP_FULL:
        return {r: len(known[r]) for r in as_.routers}
    return {r: len(announced[r]) for r in as_.routers}


# ---------------------------------------------------------------------------
# per-ingress selection


def offer_exportable(as_: AsInternal, offer, ingress: ExternalLink) -> bool:
    """Gao-Rexford export over an ingress link, never back to where it came from."""
    src = as_.link(offer[0])
    if src.neighbor == ingress.neighbor or ingress.neighbor in offer[1]:
        return False
    return ingress.relationship == "customer" or src.relationship == "customer"


def _no_echo(as_: AsInternal, offer, ingress: ExternalLink) -> bool:
    return as_.link(offer[0]).neighbor != ingress.neighbor and ingress.neighbor not in offer[1]


def egress_selection(
    as_: AsInternal,
    mode=Mode.CONVENTIONAL,
    forced: Optional[Mapping] = None,
    preferences: Optional[Mapping] = None,
) -> dict:
    """Route announced over every external link.

    ``forced`` maps a router to the link id of the offer it must treat as its
    single best (conventional mode only).  ``preferences`` maps an ingress
    link to an ordered list of offer link ids (neighbor-specific mode); links
    without one fall back to filter-first selection.
    """
    mode = Mode(mode)
    forced = dict(forced or {})
    preferences = dict(preferences or {})
    out = {}
    for ingress in as_.external_links:
        visible = visible_routes(as_, ingress.router)
        if mode is Mode.CONVENTIONAL:
            if not visible:
                out[ingress.link_id] = None
                continue
            if ingress.router in forced:
                wanted = forced[ingress.router]
                matches = [o for o in visible if o[0] == wanted]
                if not matches:
                    raise ValueError(f"{ingress.router} cannot be forced to {wanted}: not visible there")
                best = matches[0]
            else:
                best = hot_potato_select(as_, ingress.router, visible)
            out[ingress.link_id] = best if offer_exportable(as_, best, ingress) else None
            continue
        allowed = [o for o in visible if offer_exportable(as_, o, ingress)]
        if mode is Mode.NEIGHBOR_SPECIFIC and ingress.link_id in preferences:
            by_link = {o[0]: o for o in allowed}
            picks = [by_link[x] for x in preferences[ingress.link_id] if x in by_link]
            out[ingress.link_id] = picks[0] if picks else None
        else:
            out[ingress.link_id] = hot_potato_select(as_, ingress.router, allowed) if allowed else None
    return out


# ---------------------------------------------------------------------------
# compliance checks


@dataclass
class CheckResult:
    check: str
    passed: bool
    witnesses: list = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def to_dict(self) -> dict:
        return {"check": self.check, "verdict": self.verdict, "witnesses": list(self.witnesses)}


def check_consistent_export(as_: AsInternal, neighbor: str, selection: Mapping) -> CheckResult:
    """Every link to ``neighbor`` gets a route and all of them are equally good."""
    links = [link for link in as_.external_links if link.neighbor == neighbor]
    if len(links) < 2:
        raise ValueError(f"consistent export needs at least two links to {neighbor}, found {len(links)}")
    witnesses = []
    classes = {}
    for link in links:
        offer = selection.get(link.link_id)
        if offer is None:
            witnesses.append(f"{link.link_id}: nothing announced to {neighbor}")
        else:
            classes[link.link_id] = as_.classifier.key(as_, offer)
    if len(set(classes.values())) > 1:
        detail = ", ".join(f"{k}={v}" for k, v in sorted(classes.items()))
        witnesses.append(f"routes announced to {neighbor} are not equally good: {detail}")
    return CheckResult(f"consistent-export:{neighbor}", not witnesses, witnesses)


def check_hot_potato(as_: AsInternal, selection: Mapping) -> CheckResult:
    """Each assigned route exits at the closest egress among the exportable
    top-class offers for that link.  Links with no route are not judged."""
    witnesses = []
    for ingress in as_.external_links:
        offer = selection.get(ingress.link_id)
        if offer is None:
            continue
        allowed = [o for o in visible_routes(as_, ingress.router) if offer_exportable(as_, o, ingress)]
        if not allowed:
            continue
        top = min(as_.classifier.key(as_, o) for o in allowed)
        best = min(as_.distance(ingress.router, as_.egress_router(o)) for o in allowed if as_.classifier.key(as_, o) == top)
        got = as_.distance(ingress.router, as_.egress_router(offer))
        if as_.classifier.key(as_, offer) != top or got > best:
            closest = hot_potato_select(as_, ingress.router, allowed)
            witnesses.append(
                f"{ingress.link_id}: exits via {offer[0]} (IGP {got:g}) but {closest[0]} is closer (IGP {best:g})"
            )
    return CheckResult("hot-potato", not witnesses, witnesses)


@dataclass(frozen=True)
class TunnelTable:
    """Ingress link -> egress link.  Egress routers strip the encapsulation
    before handing packets to the external next hop."""

    entries: Mapping
    decapsulate_at_egress: bool = True


def assign_tunnels(as_: AsInternal, selection: Mapping) -> TunnelTable:
    entries = {link_id: offer[0] for link_id, offer in sorted(selection.items()) if offer is not None}
    return TunnelTable(entries)


def render_checks(results) -> str:
    width = max((len(r.check) for r in results), default=5)
    lines = []
    for r in results:
        lines.append(f"{r.check:<{width}}  {r.verdict}")
        lines += [f"{'':<{width}}    {w}" for w in r.witnesses]
    return "\n".join(lines)
