"""JSON file formats: instances, single-AS configurations, path attributes
and service assignments.  Parsers reject unknown keys and report where a
problem was found; every ``dump_*`` output parses back to an equal object.
"""

from __future__ import annotations

import json
from pathlib import Path as FsPath

from .intra_as import AsInternal, Classifier, Dissemination, DisseminationKind, ExternalLink
from .model import Instance, Mode, RankingFunction, Relationship
from .policy import GaoRexford, export_policy_from_json, export_policy_to_json
from .service_models import MenuItem, ModelKind, PathAttributes, ServiceModel

INSTANCE_KEYS = {"nodes", "destination", "relationships", "mode", "rankings", "export"}
AS_KEYS = {
    "name",
    "destination",
    "mode",
    "routers",
    "igp",
    "external_links",
    "offers",
    "dissemination",
    "classifier",
    "forced",
    "preferences",
}


class FormatError(ValueError):
    """Malformed input; ``where`` locates the problem (file and JSON path)."""

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where
        self.message = message


def _load(source) -> tuple:
    """``(data, label)`` from a filesystem path, a JSON string or parsed data."""
    if isinstance(source, (dict, list)):
        return source, "<data>"
    if isinstance(source, FsPath) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        label = str(source)
        try:
            text = FsPath(source).read_text()
        except OSError as exc:
            raise FormatError(label, f"cannot read file: {exc.strerror}") from exc
    else:
        label, text = "<string>", source
    try:
        return json.loads(text), label
    except json.JSONDecodeError as exc:
        raise FormatError(f"{label}:{exc.lineno}:{exc.colno}", f"invalid JSON: {exc.msg}") from exc


def _object(data, where: str, allowed: set, required=()) -> dict:
    if not isinstance(data, dict):
        raise FormatError(where, f"expected an object, got {type(data).__name__}")
    extra = sorted(set(data) - allowed)
    if extra:
        raise FormatError(where, f"unknown key(s) {', '.join(extra)}")
    for key in required:
        if key not in data:
            raise FormatError(where, f"missing key {key!r}")
    return data


def _path(value, where: str) -> tuple:
    if isinstance(value, str):
        value = value.split()
    if not isinstance(value, list) or not all(isinstance(x, str) for x in value):
        raise FormatError(where, "a path is an array of node names")
    return tuple(value)


def _split_ranking_key(key: str):
    for sep in ("->", "→"):
        if sep in key:
            owner, nbr = key.split(sep, 1)
            return owner.strip(), nbr.strip()
    return key.strip(), None


# ---------------------------------------------------------------------------
# instances


def instance_from_json(data, where: str = "<data>") -> Instance:
    data = _object(data, where, INSTANCE_KEYS, ("nodes", "destination", "rankings"))
    nodes = data["nodes"]
    if not isinstance(nodes, list) or not all(isinstance(n, str) for n in nodes):
        raise FormatError(f"{where}.nodes", "expected an array of strings")
    rels = []
    for i, entry in enumerate(data.get("relationships", [])):
        at = f"{where}.relationships[{i}]"
        entry = _object(entry, at, {"a", "b", "kind"}, ("a", "b", "kind"))
        try:
            rels.append(Relationship(entry["a"], entry["b"], entry["kind"]))
        except ValueError as exc:
            raise FormatError(at, str(exc)) from exc
    try:
        mode = Mode.parse(data.get("mode", "conventional"))
    except ValueError as exc:
        raise FormatError(f"{where}.mode", f"unknown mode {data.get('mode')!r}") from exc
    rankings_data = data["rankings"]
    if not isinstance(rankings_data, dict):
        raise FormatError(f"{where}.rankings", "expected an object")
    rankings = {}
    for key, paths in rankings_data.items():
        at = f"{where}.rankings[{key!r}]"
        if not isinstance(paths, list):
            raise FormatError(at, "expected an array of paths")
        owner, nbr = _split_ranking_key(key)
        ranked = tuple(_path(p, f"{at}[{j}]") for j, p in enumerate(paths))
        rankings[(owner, nbr)] = RankingFunction(owner, ranked)
    try:
        export = export_policy_from_json(data.get("export"))
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"{where}.export", str(exc)) from exc
    if isinstance(export, GaoRexford):
        export = None  # the model's own spelling of the default
    return Instance(tuple(nodes), tuple(rels), data["destination"], mode, rankings, export)


def load_instance(source) -> Instance:
    data, label = _load(source)
    return instance_from_json(data, label)


def instance_to_json(inst: Instance) -> dict:
    rankings = {}
    for (owner, nbr), rf in sorted(inst.rankings.items(), key=lambda kv: (kv[0][0], kv[0][1] or "")):
        key = owner if nbr is None else f"{owner}->{nbr}"
        rankings[key] = [list(p) for p in rf.acceptable]
    return {
        "nodes": list(inst.nodes),
        "destination": inst.destination,
        "relationships": [{"a": r.a, "b": r.b, "kind": r.kind} for r in inst.relationships],
        "mode": inst.mode.value,
        "rankings": rankings,
        "export": export_policy_to_json(inst.export),
    }


# ---------------------------------------------------------------------------
# single-AS configurations


def _dissemination_from_json(value, where: str) -> Dissemination:
    if isinstance(value, str):
        try:
            return Dissemination.parse(value)
        except ValueError as exc:
            raise FormatError(where, f"unknown dissemination {value!r}") from exc
    value = _object(value, where, {"kind", "k", "class_best", "reflectors", "clients", "sessions"}, ("kind",))
    try:
        return Dissemination(
            DisseminationKind(value["kind"]),
            k=value.get("k", 1),
            class_best=value.get("class_best", False),
            reflectors=value.get("reflectors", ()),
            clients=value.get("clients", {}),
            sessions=value.get("sessions", ()),
        )
    except ValueError as exc:
        raise FormatError(where, str(exc)) from exc


def _dissemination_to_json(diss: Dissemination):
    if diss == Dissemination(diss.kind) and diss.kind is not DisseminationKind.ADD_PATHS:
        return diss.kind.value
    out = {"kind": diss.kind.value}
    if diss.kind is DisseminationKind.ADD_PATHS:
        out["k"] = diss.k
        out["class_best"] = diss.class_best
    if diss.reflectors:
        out["reflectors"] = list(diss.reflectors)
        out["clients"] = {r: list(c) for r, c in diss.clients.items()}
    if diss.sessions:
        out["sessions"] = [list(s) for s in diss.sessions]
    return out


def as_from_json(data, where: str = "<data>") -> tuple:
    """``(AsInternal, options)``; options hold ``mode``, ``forced`` and ``preferences``."""
    data = _object(data, where, AS_KEYS, ("routers", "igp", "external_links", "offers"))
    igp = {}
    for i, edge in enumerate(data["igp"]):
        at = f"{where}.igp[{i}]"
        edge = _object(edge, at, {"a", "b", "cost"}, ("a", "b", "cost"))
        igp[(edge["a"], edge["b"])] = edge["cost"]
    links = []
    for i, entry in enumerate(data["external_links"]):
        at = f"{where}.external_links[{i}]"
        entry = _object(entry, at, {"link_id", "router", "neighbor", "relationship"}, ("link_id", "router", "neighbor", "relationship"))
        try:
            links.append(ExternalLink(entry["link_id"], entry["router"], entry["neighbor"], entry["relationship"]))
        except ValueError as exc:
            raise FormatError(at, str(exc)) from exc
    offers = {k: _path(v, f"{where}.offers[{k!r}]") for k, v in _object(data["offers"], f"{where}.offers", set(data["offers"])).items()}
    diss = _dissemination_from_json(data.get("dissemination", "single-best"), f"{where}.dissemination")
    classifier = Classifier()
    if "classifier" in data:
        at = f"{where}.classifier"
        c = _object(data["classifier"], at, {"attributes", "relationship_rank"})
        classifier = Classifier(
            tuple(c.get("attributes", classifier.attributes)),
            dict(c.get("relationship_rank", classifier.relationship_rank)),
        )
    as_ = AsInternal(
        name=data.get("name", "AS"),
        routers=tuple(data["routers"]),
        igp=igp,
        external_links=tuple(links),
        offers=offers,
        dissemination=diss,
        classifier=classifier,
        destination=data.get("destination", "d"),
    )
    try:
        mode = Mode.parse(data.get("mode", "conventional"))
    except ValueError as exc:
        raise FormatError(f"{where}.mode", f"unknown mode {data.get('mode')!r}") from exc
    options = {
        "mode": mode,
        "forced": dict(data.get("forced", {})),
        "preferences": {k: list(v) for k, v in data.get("preferences", {}).items()},
    }
    return as_, options


def load_as(source) -> tuple:
    data, label = _load(source)
    return as_from_json(data, label)


def as_to_json(as_: AsInternal, mode=None, forced=None, preferences=None) -> dict:
    out = {
        "name": as_.name,
        "destination": as_.destination,
        "routers": list(as_.routers),
        "igp": [{"a": a, "b": b, "cost": c} for (a, b), c in as_.igp.items()],
        "external_links": [
            {"link_id": l.link_id, "router": l.router, "neighbor": l.neighbor, "relationship": l.relationship}
            for l in as_.external_links
        ],
        "offers": {k: list(v) for k, v in as_.offers.items()},
        "dissemination": _dissemination_to_json(as_.dissemination),
        "classifier": {
            "attributes": list(as_.classifier.attributes),
            "relationship_rank": dict(as_.classifier.relationship_rank),
        },
    }
    if mode is not None:
        out["mode"] = Mode(mode).value
    if forced:
        out["forced"] = dict(forced)
    if preferences:
        out["preferences"] = {k: list(v) for k, v in preferences.items()}
    return out


# ---------------------------------------------------------------------------
# path attributes and service assignments

_ATTR_FIELDS = ("latency_ms", "security_score", "monetary_cost", "hop_count")


def attributes_from_json(data, where: str = "<data>") -> dict:
    """``{"1 5 d": {"latency_ms": .., "security_score": .., ...}, ...}``.

    ``hop_count`` defaults to the number of links in the path.
    """
    data = _object(data, where, set(data) if isinstance(data, dict) else set())
    out = {}
    for key, rec in data.items():
        at = f"{where}[{key!r}]"
        path = _path(key, at)
        rec = _object(rec, at, set(_ATTR_FIELDS), _ATTR_FIELDS[:3])
        try:
            out[path] = PathAttributes(
                rec["latency_ms"], rec["security_score"], rec["monetary_cost"], rec.get("hop_count", len(path) - 1)
            )
        except ValueError as exc:
            raise FormatError(at, str(exc)) from exc
    return out


def load_attributes(source) -> dict:
    data, label = _load(source)
    return attributes_from_json(data, label)


def attributes_to_json(attrs: dict) -> dict:
    return {
        " ".join(p): {f: getattr(a, f) for f in _ATTR_FIELDS} for p, a in sorted(attrs.items())
    }


def _model_from_json(entry, where: str, owner: str) -> ServiceModel:
    entry = _object(entry, where, {"model", "item", "ranking", "weight", "neighbor_weights", "as_weights"}, ("model",))
    try:
        kind = ModelKind(entry["model"])
        if kind is ModelKind.SUBSCRIPTION:
            return ServiceModel.subscription(MenuItem(entry.get("item")))
        if kind is ModelKind.TOTAL_CONTROL:
            ranking = tuple(_path(p, f"{where}.ranking[{j}]") for j, p in enumerate(entry.get("ranking", [])))
            return ServiceModel.total_control(RankingFunction(owner, ranking))
        return ServiceModel.hybrid(entry.get("weight", 0.5), entry.get("neighbor_weights"), entry.get("as_weights"))
    except ValueError as exc:
        raise FormatError(where, str(exc)) from exc


def assignments_from_json(data, where: str = "<data>") -> tuple:
    """``{"owner": "1", "self": {...}?, "assignments": {"2": {"model": ...}}}``
    to ``(owner, assignments, self_model)``."""
    data = _object(data, where, {"owner", "self", "assignments"}, ("owner", "assignments"))
    owner = data["owner"]
    models = {
        nbr: _model_from_json(entry, f"{where}.assignments[{nbr!r}]", owner)
        for nbr, entry in _object(data["assignments"], f"{where}.assignments", set(data["assignments"])).items()
    }
    self_model = _model_from_json(data["self"], f"{where}.self", owner) if "self" in data else None
    return owner, models, self_model


def load_assignments(source) -> tuple:
    data, label = _load(source)
    return assignments_from_json(data, label)


def _model_to_json(model: ServiceModel) -> dict:
    if model.kind is ModelKind.SUBSCRIPTION:
        return {"model": model.kind.value, "item": model.menu_item.value}
    if model.kind is ModelKind.TOTAL_CONTROL:
        return {"model": model.kind.value, "ranking": [list(p) for p in model.neighbor_ranking.acceptable]}
    return {
        "model": model.kind.value,
        "weight": model.weight,
        "neighbor_weights": dict(model.neighbor_weights),
        "as_weights": dict(model.as_weights),
    }


def assignments_to_json(owner: str, assignments: dict, self_model=None) -> dict:
    out = {"owner": owner, "assignments": {k: _model_to_json(m) for k, m in assignments.items()}}
    if self_model is not None:
        out["self"] = _model_to_json(self_model)
    return out


def dump(data, fh) -> None:
    json.dump(data, fh, indent=2, sort_keys=False)
    fh.write("\n")
