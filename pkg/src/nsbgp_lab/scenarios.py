"""Canonical instances for the worked examples, plus a seeded random generator.

Relationship data for the gadgets is partly reconstructed; each builder says
which parts are given and which were filled in.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

from .intra_as import AsInternal, Classifier, Dissemination, ExternalLink
from .model import Instance, Mode, RankingFunction, Relationship
from .policy import gao_rexford_allows, learned_class


def _ranking(owner, *paths):
    return RankingFunction(owner, tuple(tuple(p.split()) for p in paths))


def bad_gadget(mode=Mode.CONVENTIONAL) -> Instance:
    """Three nodes around ``d``; each prefers the route through its clockwise
    neighbor over its direct route.

    Given: 1 and 2 are providers of 3.  Filled in: ``d`` is a customer of
    1, 2 and 3, and 1-2 is a peering link.  Full rotational symmetry is
    impossible (every triangle pair would have to be mutual providers), so
    the remaining pair is a peer link, which keeps the hierarchy acyclic.
    """
    mode = Mode(mode)
    rels = (
        Relationship.customer_provider("d", "1"),
        Relationship.customer_provider("d", "2"),
        Relationship.customer_provider("d", "3"),
        Relationship.customer_provider("3", "1"),
        Relationship.customer_provider("3", "2"),
        Relationship.peer("1", "2"),
    )
    rankings = {
        ("1", None): _ranking("1", "1 3 d", "1 d"),
        ("2", None): _ranking("2", "2 1 d", "2 d"),
        ("3", None): _ranking("3", "3 2 d", "3 d"),
    }
    inst = Instance(("1", "2", "3", "d"), rels, "d", Mode.CONVENTIONAL, rankings)
    return inst.as_neighbor_specific() if mode is Mode.NEIGHBOR_SPECIFIC else inst.with_mode(mode)


def fig4_gadget(mode=Mode.NEIGHBOR_SPECIFIC) -> Instance:
    """Node 1 reaches ``d`` through customers 5, 6, 7 and serves customers
    2, 3, 4 that each want a different one of those routes.

    In neighbor-specific mode node 1 ranks a different route first for each
    of 2, 3, 4; in the other modes node 1 has the single ranking
    ``(1 5 d) > (1 6 d) > (1 7 d)`` and every customer gets ``(1 5 d)``.
    All links are customer-provider, so both variants satisfy the
    Gao-Rexford conditions.
    """
    mode = Mode(mode)
    nodes = ("1", "2", "3", "4", "5", "6", "7", "d")
    rels = [Relationship.customer_provider(c, "1") for c in ("2", "3", "4", "5", "6", "7")]
    rels += [Relationship.customer_provider("d", m) for m in ("5", "6", "7")]
    via = ["1 5 d", "1 6 d", "1 7 d"]
    rankings = {("1", None): _ranking("1", *via)}
    for m in ("5", "6", "7"):
        rankings[(m, None)] = _ranking(m, f"{m} d")
    wants = {"2": "5", "3": "6", "4": "7"}
    for c, m in wants.items():
        mine = f"{c} 1 {m} d"
        others = [f"{c} 1 {x} d" for x in ("5", "6", "7") if x != m]
        rankings[(c, None)] = _ranking(c, mine, *others)
    inst = Instance(nodes, tuple(rels), "d", Mode.CONVENTIONAL, rankings)
    if mode is not Mode.NEIGHBOR_SPECIFIC:
        return inst.with_mode(mode)

    ns = inst.as_neighbor_specific()
    rankings = dict(ns.rankings)
    for c, m in wants.items():
        first = f"1 {m} d"
        rankings[("1", c)] = _ranking("1", first, *[p for p in via if p != first])
    # exports toward providers may only carry customer-learned routes
    for key, rf in list(rankings.items()):
        owner, nbr = key
        if nbr is not None:
            rankings[key] = rf.restricted(lambda p, o=owner, v=nbr: gao_rexford_allows(ns, o, v, p))
    return Instance(nodes, tuple(rels), "d", Mode.NEIGHBOR_SPECIFIC, rankings)


def fig3_gadget(mode=Mode.CONVENTIONAL) -> Instance:
    """The single-ranking companion of :func:`fig4_gadget`."""
    return fig4_gadget(mode)


def fig1_gadget(dissemination=None) -> AsInternal:
    """AS 0 with routers R1-R4.

    r1 is learned from Customer 2 at R3 and r2 from Peer 2 at R4.  Peer 1
    connects at R1 and R2, Customer 1 at R2.  The classifier treats customer
    and peer routes as equally good.  IGP costs are reconstructed so that R4
    is R2's closest exit (distance 1 versus 2 to R3) while R3 is R1's (1
    versus 2 to R4).
    """
    links = (
        ExternalLink("R1-Peer1", "R1", "Peer1", "peer"),
        ExternalLink("R2-Peer1", "R2", "Peer1", "peer"),
        ExternalLink("R2-Customer1", "R2", "Customer1", "customer"),
        ExternalLink("R3-Customer2", "R3", "Customer2", "customer"),
        ExternalLink("R4-Peer2", "R4", "Peer2", "peer"),
    )
    return AsInternal(
        name="AS0",
        routers=("R1", "R2", "R3", "R4"),
        igp={("R1", "R2"): 1, ("R1", "R3"): 1, ("R2", "R4"): 1, ("R3", "R4"): 5},
        external_links=links,
        offers={"R3-Customer2": ("Customer2", "d"), "R4-Peer2": ("Peer2", "d")},
        dissemination=dissemination or Dissemination(),
        classifier=Classifier(relationship_rank={"customer": 0, "peer": 0, "provider": 1}),
    )


def fig5_as(dissemination=None) -> AsInternal:
    """AS Z with four routes to D.

    Reconstructed wiring: the routes from R6 (customer) and R7 (peer) arrive
    at R3, those from R8 (peer) and R9 (provider) at R4.  R5 sits between
    R3/R4 and the ingress routers R1 and R2, nearer to R4.  Customers C1 and
    C2 attach at R1.  Customer and peer routes are equally good, provider
    routes worse.
    """
    links = (
        ExternalLink("R1-C1", "R1", "C1", "customer"),
        ExternalLink("R1-C2", "R1", "C2", "customer"),
        ExternalLink("R3-R6", "R3", "R6", "customer"),
        ExternalLink("R3-R7", "R3", "R7", "peer"),
        ExternalLink("R4-R8", "R4", "R8", "peer"),
        ExternalLink("R4-R9", "R4", "R9", "provider"),
    )
    return AsInternal(
        name="Z",
        routers=("R1", "R2", "R3", "R4", "R5"),
        igp={("R1", "R5"): 1, ("R2", "R5"): 1, ("R3", "R5"): 2, ("R4", "R5"): 1},
        external_links=links,
        offers={
            "R3-R6": ("R6", "D"),
            "R3-R7": ("R7", "D"),
            "R4-R8": ("R8", "D"),
            "R4-R9": ("R9", "D"),
        },
        dissemination=dissemination or Dissemination(),
        classifier=Classifier(relationship_rank={"customer": 0, "peer": 0, "provider": 1}),
        destination="D",
    )


SCENARIOS = {
    "bad-gadget": bad_gadget,
    "fig1": fig1_gadget,
    "fig3": fig3_gadget,
    "fig4": fig4_gadget,
    "fig5": fig5_as,
}


# ---------------------------------------------------------------------------
# random instances


@dataclass(frozen=True)
class RandomConfig:
    safe: bool = True
    paths_min: int = 5
    paths_max: int = 10
    extra_edge_prob: float = 0.35
    peer_prob: float = 0.3
    inject: Optional[str] = None  # "export" | "preference" | "gadget"

    def __post_init__(self):
        if self.inject not in (None, "export", "preference", "gadget"):
            raise ValueError(f"unknown injection {self.inject!r}")
        if self.safe and self.inject is not None:
            raise ValueError("safe=True contradicts an injected violation")
        if not 1 <= self.paths_min <= self.paths_max:
            raise ValueError("need 1 <= paths_min <= paths_max")


def valley_free_paths(inst: Instance, limit: int = 20000) -> dict:
    """Paths each node could learn under Gao-Rexford export, grown outward
    from the destination.  Stops extending once ``limit`` paths exist."""
    out = {u: [] for u in inst.nodes}
    frontier = [(inst.destination,)]
    total = 0
    while frontier and total < limit:
        p = frontier.pop()
        for w in inst.neighbors[p[0]]:
            if w not in p and gao_rexford_allows(inst, p[0], w, p):
                q = (w,) + p
                out[w].append(q)
                frontier.append(q)
                total += 1
    return out


def random_instance(seed: int, n_nodes: int, mode=Mode.NEIGHBOR_SPECIFIC, config: Optional[RandomConfig] = None) -> Instance:
    """Deterministic random instance with ``n_nodes`` nodes including ``d``.

    The customer-provider hierarchy follows a random total order, so the
    topology condition always holds.  Each node accepts a random sample of
    its valley-free paths.  With ``config.safe`` neighbor-specific rankings
    only list paths exportable to that neighbor and single rankings put
    customer-learned paths first.
    """
    config = config or RandomConfig()
    mode = Mode(mode)
    if config.inject == "export" and mode is not Mode.NEIGHBOR_SPECIFIC:
        raise ValueError("export injection needs per-neighbor rankings")
    if n_nodes < 2:
        raise ValueError("need at least the destination and one other node")
    rng = random.Random(seed)
    nodes = tuple(str(i) for i in range(1, n_nodes)) + ("d",)
    level = {u: rng.random() for u in nodes}
    level["d"] = -1.0

    pairs = set()
    order = list(nodes)
    rng.shuffle(order)
    for i in range(1, len(order)):
        pairs.add(frozenset((order[i], order[rng.randrange(i)])))
    for i, a in enumerate(nodes):
        for b in nodes[i + 1:]:
            if rng.random() < config.extra_edge_prob:
                pairs.add(frozenset((a, b)))

    gadget = None
    if config.inject == "gadget":
        if n_nodes < 4:
            raise ValueError("gadget injection needs at least three non-destination nodes")
        gadget = rng.sample([u for u in nodes if u != "d"], 3)
        for i in range(3):
            pairs.add(frozenset((gadget[i], gadget[(i + 1) % 3])))
            pairs.add(frozenset((gadget[i], "d")))

    rels = []
    for pair in sorted(pairs, key=sorted):
        a, b = sorted(pair)
        if gadget and a in gadget and b in gadget:
            rels.append(Relationship.peer(a, b))
        elif "d" not in pair and rng.random() < config.peer_prob:
            rels.append(Relationship.peer(a, b))
        else:
            lo, hi = (a, b) if level[a] < level[b] else (b, a)
            rels.append(Relationship.customer_provider(lo, hi))
    base = Instance(nodes, tuple(rels), "d", Mode.CONVENTIONAL, {})

    acceptable = {}
    learnable = valley_free_paths(base)
    for u in nodes:
        if u == "d":
            continue
        paths = sorted(learnable[u])
        rng.shuffle(paths)
        k = rng.randint(config.paths_min, config.paths_max)
        acceptable[u] = paths[:k]
    if gadget:
        for i, u in enumerate(gadget):
            nxt = gadget[(i + 1) % 3]
            acceptable[u] = [(u, nxt, "d"), (u, "d")]

    def ordered(u, paths):
        paths = list(paths)
        rng.shuffle(paths)
        if gadget and u in gadget:
            return acceptable[u]
        if config.inject == "preference":
            paths.sort(key=lambda p: learned_class(base, p) == "customer-learned")
        elif config.safe:
            paths.sort(key=lambda p: learned_class(base, p) != "customer-learned")
        return paths

    rankings = {}
    for u, paths in acceptable.items():
        rankings[(u, None)] = RankingFunction(u, tuple(ordered(u, paths)))
        if mode is Mode.NEIGHBOR_SPECIFIC:
            for v in base.neighbors[u]:
                allowed = [p for p in paths if gao_rexford_allows(base, u, v, p)]
                rng.shuffle(allowed)
                rankings[(u, v)] = RankingFunction(u, tuple(allowed))

    if config.inject == "export" and mode is Mode.NEIGHBOR_SPECIFIC:
        spots = []
        for u, paths in sorted(acceptable.items()):
            bad = [p for p in paths if learned_class(base, p) != "customer-learned"]
            for v in base.neighbors[u]:
                if base.relation(u, v) != "customer" and bad:
                    spots.append((u, v, bad))
        if not spots:
            raise ValueError(f"seed {seed}: no place to inject an export violation")
        u, v, bad = spots[rng.randrange(len(spots))]
        p = bad[rng.randrange(len(bad))]
        rankings[(u, v)] = RankingFunction(u, (p,) + rankings[(u, v)].acceptable)

    return Instance(nodes, tuple(rels), "d", mode, rankings)


__all__ = [
    "RandomConfig",
    "SCENARIOS",
    "bad_gadget",
    "fig1_gadget",
    "fig3_gadget",
    "fig4_gadget",
    "fig5_as",
    "random_instance",
    "valley_free_paths",
]
