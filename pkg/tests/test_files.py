import io
import json

import pytest

from nsbgp_lab.files import (
    FormatError,
    as_to_json,
    assignments_from_json,
    assignments_to_json,
    attributes_to_json,
    dump,
    instance_to_json,
    load_as,
    load_assignments,
    load_attributes,
    load_instance,
)
from nsbgp_lab.intra_as import Dissemination, DisseminationKind
from nsbgp_lab.model import Mode
from nsbgp_lab.policy import ExplicitPolicy, ExportRule
from nsbgp_lab.scenarios import RandomConfig, bad_gadget, fig1_gadget, fig4_gadget, fig5_as, random_instance
from nsbgp_lab.service_models import ServiceModel, fig4_assignments, fig4_attributes

from conftest import ranking


def roundtrip(data):
    buf = io.StringIO()
    dump(data, buf)
    return buf.getvalue()


@pytest.mark.parametrize(
    "inst",
    [
        bad_gadget(),
        bad_gadget(Mode.FILTER_FIRST),
        bad_gadget(Mode.NEIGHBOR_SPECIFIC),
        fig4_gadget(),
        fig4_gadget(Mode.CONVENTIONAL),
        random_instance(3, 6),
        random_instance(4, 5, Mode.CONVENTIONAL, RandomConfig(safe=False)),
    ],
    ids=["bad", "bad-ff", "bad-ns", "fig4", "fig3", "rand-ns", "rand-conv"],
)
def test_instance_roundtrip(inst):
    assert load_instance(roundtrip(instance_to_json(inst))) == inst


def test_instance_roundtrip_through_file(tmp_path):
    f = tmp_path / "g.json"
    f.write_text(roundtrip(instance_to_json(bad_gadget())))
    assert load_instance(str(f)) == bad_gadget()
    assert load_instance(f) == bad_gadget()


def test_explicit_export_policy_roundtrip():
    rules = (ExportRule("1", "2", "allow", ("1", "d")), ExportRule("1", "3", "deny", "peer-learned"))
    inst = bad_gadget()
    inst = type(inst)(inst.nodes, inst.relationships, "d", inst.mode, inst.rankings, ExplicitPolicy(rules))
    assert load_instance(instance_to_json(inst)) == inst


def test_arrow_and_string_paths_accepted():
    data = {
        "nodes": ["u", "v", "d"],
        "destination": "d",
        "relationships": [{"a": "d", "b": "u", "kind": "customer-of"}, {"a": "u", "b": "v", "kind": "peer"}],
        "mode": "neighbor-specific",
        "rankings": {"u": ["u d"], "u→v": [["u", "d"]], "u->d": []},
    }
    inst = load_instance(data)
    assert inst.mode is Mode.NEIGHBOR_SPECIFIC
    assert inst.ranking_for("u", "v") == ranking("u", "u d")
    assert inst.self_ranking("u") == ranking("u", "u d")


def test_unknown_key_is_located():
    data = instance_to_json(bad_gadget())
    data["colour"] = "blue"
    with pytest.raises(FormatError, match="unknown key"):
        load_instance(data)


def test_bad_relationship_is_located():
    data = instance_to_json(bad_gadget())
    data["relationships"][2]["kind"] = "sibling"
    with pytest.raises(FormatError) as err:
        load_instance(data)
    assert err.value.where.endswith("relationships[2]")


def test_missing_key():
    data = instance_to_json(bad_gadget())
    del data["rankings"]
    with pytest.raises(FormatError, match="missing key 'rankings'"):
        load_instance(data)


def test_bad_mode():
    data = instance_to_json(bad_gadget())
    data["mode"] = "fastest"
    with pytest.raises(FormatError, match="unknown mode"):
        load_instance(data)


def test_non_string_path():
    data = instance_to_json(bad_gadget())
    data["rankings"]["1"][0] = [1, 3]
    with pytest.raises(FormatError, match="array of node names"):
        load_instance(data)


def test_invalid_json_reports_line_and_column(tmp_path):
    f = tmp_path / "broken.json"
    f.write_text('{\n  "nodes": [1,\n}\n')
    with pytest.raises(FormatError) as err:
        load_instance(str(f))
    assert err.value.where.startswith(f"{f}:3:")


def test_missing_file():
    with pytest.raises(FormatError, match="cannot read file"):
        load_instance("/nonexistent/x.json")


@pytest.mark.parametrize("build", [fig1_gadget, fig5_as])
@pytest.mark.parametrize(
    "diss",
    [
        None,
        Dissemination(DisseminationKind.RCP_FULL),
        Dissemination.parse("two-class"),
        Dissemination(DisseminationKind.ADD_PATHS, k=3),
    ],
)
def test_as_roundtrip(build, diss):
    as_ = build(diss)
    loaded, options = load_as(roundtrip(as_to_json(as_, mode=Mode.FILTER_FIRST)))
    assert loaded == as_
    assert options["mode"] is Mode.FILTER_FIRST


def test_as_options_roundtrip():
    data = as_to_json(fig1_gadget(), mode="conventional", forced={"R2": "R3-Customer2"},
                      preferences={"R2-Peer1": ["R4-Peer2", "R3-Customer2"]})
    _, options = load_as(data)
    assert options["forced"] == {"R2": "R3-Customer2"}
    assert options["preferences"] == {"R2-Peer1": ["R4-Peer2", "R3-Customer2"]}


def test_as_defaults():
    as_, options = load_as({"routers": ["A"], "igp": [], "external_links": [], "offers": {}})
    assert as_.destination == "d"
    assert as_.dissemination == Dissemination()
    assert options["mode"] is Mode.CONVENTIONAL


def test_as_bad_link_is_located():
    data = as_to_json(fig5_as())
    data["external_links"][1]["relationship"] = "sibling"
    with pytest.raises(FormatError) as err:
        load_as(data)
    assert err.value.where.endswith("external_links[1]")


def test_as_unknown_dissemination():
    data = as_to_json(fig5_as())
    data["dissemination"] = "gossip"
    with pytest.raises(FormatError, match="unknown dissemination"):
        load_as(data)


def test_attributes_roundtrip(tmp_path):
    attrs = fig4_attributes()
    f = tmp_path / "a.json"
    f.write_text(roundtrip(attributes_to_json(attrs)))
    assert load_attributes(str(f)) == attrs


def test_attribute_hop_count_defaults_to_path_length():
    attrs = load_attributes({"1 5 d": {"latency_ms": 1, "security_score": 0.2, "monetary_cost": 3}})
    assert attrs[("1", "5", "d")].hop_count == 2


def test_attribute_out_of_range_is_located():
    with pytest.raises(FormatError) as err:
        load_attributes({"1 5 d": {"latency_ms": 1, "security_score": 2, "monetary_cost": 3}})
    assert "security_score" in err.value.message


def test_assignments_roundtrip():
    models = dict(fig4_assignments())
    models["5"] = ServiceModel.total_control(ranking("1", "1 6 d", "1 5 d"))
    me = ServiceModel.hybrid(0.0, as_weights={"monetary_cost": 1.0})
    owner, loaded, self_model = load_assignments(roundtrip(assignments_to_json("1", models, me)))
    assert owner == "1"
    assert loaded == models
    assert self_model == me


def test_assignment_weights_must_sum_to_one():
    data = {"owner": "1", "assignments": {"2": {"model": "hybrid", "weight": 1.0, "neighbor_weights": {"latency_ms": 0.4}}}}
    with pytest.raises(FormatError) as err:
        assignments_from_json(data)
    assert "assignments['2']" in err.value.where


def test_dump_is_deterministic():
    a = roundtrip(instance_to_json(random_instance(11, 6)))
    b = roundtrip(instance_to_json(random_instance(11, 6)))
    assert a == b
    json.loads(a)
