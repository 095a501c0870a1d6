"""Per-neighbor ranking functions built from path attributes.

Three ways for an AS to sell customized routes: a fixed menu
(subscription), rankings dictated by the neighbor (total control), or a
weighted blend of neighbor and AS preferences (hybrid).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .model import Instance, Mode, NodeId, Path, RankingFunction
from .policy import gao_rexford_allows, is_exportable

ATTRIBUTES = ("latency_ms", "security_score", "monetary_cost", "hop_count")
HIGHER_IS_BETTER = frozenset({"security_score"})

# the AS's own profile when nothing else is configured for its self ranking
DEFAULT_AS_WEIGHTS = {"latency_ms": 1 / 3, "security_score": 1 / 3, "monetary_cost": 1 / 3}

# scores are compared after rounding so that rescaling noise in the last
# bits cannot reorder paths with mathematically equal scores
_SCORE_DIGITS = 9


@dataclass(frozen=True)
class PathAttributes:
    latency_ms: float
    security_score: float
    monetary_cost: float
    hop_count: int

    def __post_init__(self):
        if not self.latency_ms >= 0:
            raise ValueError(f"latency_ms must be non-negative, got {self.latency_ms}")
        if not 0 <= self.security_score <= 1:
            raise ValueError(f"security_score must lie in [0, 1], got {self.security_score}")
        if not self.monetary_cost >= 0:
            raise ValueError(f"monetary_cost must be non-negative, got {self.monetary_cost}")
        if not (isinstance(self.hop_count, int) and self.hop_count >= 1):
            raise ValueError(f"hop_count must be a positive integer, got {self.hop_count}")

    def get(self, attribute: str) -> float:
        if attribute not in ATTRIBUTES:
            raise ValueError(f"unknown attribute {attribute!r}")
        return getattr(self, attribute)


class MenuItem(str, enum.Enum):
    SHORTEST_PATH = "shortest-path"
    MOST_SECURE = "most-secure"
    LEAST_EXPENSIVE = "least-expensive"


_MENU_ATTRIBUTE = {
    MenuItem.SHORTEST_PATH: "hop_count",
    MenuItem.MOST_SECURE: "security_score",
    MenuItem.LEAST_EXPENSIVE: "monetary_cost",
}


class ModelKind(str, enum.Enum):
    SUBSCRIPTION = "subscription"
    TOTAL_CONTROL = "total-control"
    HYBRID = "hybrid"


def _check_weights(party: str, weights: Mapping, blend: float) -> None:
    for a, w in weights.items():
        if a not in ATTRIBUTES:
            raise ValueError(f"{party} weights name unknown attribute {a!r}")
        if w < 0:
            raise ValueError(f"{party} weight for {a} is negative")
    if blend == 0 and not weights:
        return
    if not math.isclose(sum(weights.values()), 1.0, abs_tol=1e-9):
        raise ValueError(f"{party} weights must sum to 1, got {sum(weights.values())}")


@dataclass(frozen=True)
class ServiceModel:
    kind: ModelKind
    menu_item: Optional[MenuItem] = None
    neighbor_ranking: Optional[RankingFunction] = None
    weight: float = 0.5
    neighbor_weights: Mapping = field(default_factory=dict)
    as_weights: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        if self.kind is ModelKind.SUBSCRIPTION:
            if self.menu_item is None:
                raise ValueError("subscription needs a menu item")
            object.__setattr__(self, "menu_item", MenuItem(self.menu_item))
        elif self.kind is ModelKind.TOTAL_CONTROL:
            if self.neighbor_ranking is None:
                raise ValueError("total control needs the neighbor's ranking")
        else:
            if not 0 <= self.weight <= 1:
                raise ValueError(f"hybrid weight must lie in [0, 1], got {self.weight}")
            object.__setattr__(self, "neighbor_weights", dict(self.neighbor_weights))
            object.__setattr__(self, "as_weights", dict(self.as_weights))
            _check_weights("neighbor", self.neighbor_weights, self.weight)
            _check_weights("AS", self.as_weights, 1 - self.weight)

    @classmethod
    def subscription(cls, item) -> "ServiceModel":
        return cls(ModelKind.SUBSCRIPTION, menu_item=MenuItem(item))

    @classmethod
    def total_control(cls, ranking: RankingFunction) -> "ServiceModel":
        return cls(ModelKind.TOTAL_CONTROL, neighbor_ranking=ranking)

    @classmethod
    def hybrid(cls, weight: float, neighbor_weights=None, as_weights=None) -> "ServiceModel":
        return cls(ModelKind.HYBRID, weight=weight, neighbor_weights=neighbor_weights or {}, as_weights=as_weights or {})


def _normalized(attribute: str, paths, attrs) -> dict:
    """Min-max rescale to [0, 1] with 1 = best; a constant attribute maps to 1."""
    raw = {p: attrs[p].get(attribute) for p in paths}
    lo, hi = min(raw.values()), max(raw.values())
    if hi == lo:
        return {p: 1.0 for p in paths}
    if attribute in HIGHER_IS_BETTER:
        return {p: (x - lo) / (hi - lo) for p, x in raw.items()}
    return {p: (hi - x) / (hi - lo) for p, x in raw.items()}


def hybrid_scores(model: ServiceModel, paths, attrs) -> dict:
    paths = list(paths)
    names = set(model.neighbor_weights) | set(model.as_weights)
    norm = {a: _normalized(a, paths, attrs) for a in names}
    scores = {}
    for p in paths:
        mine = sum(w * norm[a][p] for a, w in model.neighbor_weights.items())
        theirs = sum(w * norm[a][p] for a, w in model.as_weights.items())
        scores[p] = model.weight * mine + (1 - model.weight) * theirs
    return scores


def build_ranking(
    model: ServiceModel,
    owner: NodeId,
    neighbor: Optional[NodeId],
    candidate_paths,
    attrs: Mapping,
) -> RankingFunction:
    """Ranking ``owner`` applies for ``neighbor`` over ``candidate_paths``.

    The caller passes only paths exportable to ``neighbor``.  Ties are broken
    by hop count, then by the path itself.
    """
    paths = sorted(set(map(tuple, candidate_paths)))
    missing = [p for p in paths if p not in attrs]
    if missing:
        raise KeyError(f"no attributes for {len(missing)} candidate path(s), first {' '.join(missing[0])}")

    def tie(p):
        return (attrs[p].hop_count, p)

    if model.kind is ModelKind.TOTAL_CONTROL and model.neighbor_ranking.owner != owner:
        raise ValueError(f"ranking belongs to {model.neighbor_ranking.owner}, not {owner}")
    if not paths:
        return RankingFunction(owner)
    if model.kind is ModelKind.TOTAL_CONTROL:
        ranking = model.neighbor_ranking
        keep = set(paths)
        return RankingFunction(owner, tuple(p for p in ranking.acceptable if p in keep))
    if model.kind is ModelKind.SUBSCRIPTION:
        attribute = _MENU_ATTRIBUTE[model.menu_item]
        sign = -1 if attribute in HIGHER_IS_BETTER else 1
        order = sorted(paths, key=lambda p: (sign * attrs[p].get(attribute), tie(p)))
        return RankingFunction(owner, tuple(order))
    scores = hybrid_scores(model, paths, attrs)
    order = sorted(paths, key=lambda p: (-round(scores[p], _SCORE_DIGITS), tie(p)))
    return RankingFunction(owner, tuple(order))


def _acceptable(inst: Instance, u: NodeId) -> list:
    paths = set()
    for (owner, _), rf in inst.rankings.items():
        if owner == u:
            paths.update(rf.acceptable)
    return sorted(paths)


def _exportable(inst: Instance, u: NodeId, v: NodeId, p: Path) -> bool:
    return is_exportable(inst, u, v, p) and gao_rexford_allows(inst, u, v, p)


def apply_service_models(
    inst: Instance,
    assignments: Mapping,
    attrs: Mapping,
    owner: Optional[NodeId] = None,
    self_model: Optional[ServiceModel] = None,
) -> Instance:
    """Neighbor-specific instance where ``owner`` ranks routes per neighbor
    according to each neighbor's service model.

    ``assignments`` maps a neighbor to its :class:`ServiceModel` (or
    ``(owner, neighbor)`` pairs when ``owner`` is not given).  Neighbors
    without an assignment get the owner's self ranking.  The owner's self
    ranking comes from ``self_model``, by default an AS-only weighted sum with
    :data:`DEFAULT_AS_WEIGHTS`.  Every other node keeps its ranking, cut down
    per neighbor to Gao-Rexford exportable paths.
    """
    per_owner = {}
    for key, model in assignments.items():
        if isinstance(key, tuple):
            u, v = key
        elif owner is None:
            raise ValueError("plain neighbor keys need an owner")
        else:
            u, v = owner, key
        if not inst.adjacent(u, v):
            raise ValueError(f"{v} is not a neighbor of {u}")
        per_owner.setdefault(u, {})[v] = model
    if owner is not None:
        per_owner.setdefault(owner, {})

    base = inst if inst.mode is Mode.NEIGHBOR_SPECIFIC else inst.as_neighbor_specific()
    rankings = {}
    for (u, v), rf in base.rankings.items():
        if v is None or u in per_owner:
            rankings[(u, v)] = rf
        else:
            rankings[(u, v)] = rf.restricted(lambda p, u=u, v=v: _exportable(base, u, v, p))
    for u, models in per_owner.items():
        paths = _acceptable(inst, u)
        me = self_model or ServiceModel.hybrid(0.0, as_weights=DEFAULT_AS_WEIGHTS)
        rankings[(u, None)] = build_ranking(me, u, None, paths, attrs)
        for v in base.neighbors[u]:
            cands = [p for p in paths if _exportable(base, u, v, p)]
            if v in models:
                rankings[(u, v)] = build_ranking(models[v], u, v, cands, attrs)
            else:
                rankings[(u, v)] = rankings[(u, None)].restricted(lambda p, keep=set(cands): p in keep)
    return Instance(inst.nodes, inst.relationships, inst.destination, Mode.NEIGHBOR_SPECIFIC, rankings, inst.export)


def fig4_attributes() -> dict:
    """Attribute records for node 1's three routes in the fig4 gadget."""
    return {
        ("1", "5", "d"): PathAttributes(10, 0.5, 5, 2),
        ("1", "6", "d"): PathAttributes(30, 0.9, 8, 2),
        ("1", "7", "d"): PathAttributes(50, 0.6, 1, 2),
    }


def fig4_assignments() -> dict:
    """Three customers of node 1 on three different service models."""
    return {
        "2": ServiceModel.subscription(MenuItem.MOST_SECURE),
        "3": ServiceModel.subscription(MenuItem.LEAST_EXPENSIVE),
        "4": ServiceModel.hybrid(1.0, neighbor_weights={"latency_ms": 1.0}),
    }
