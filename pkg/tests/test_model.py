import pytest
from conftest import ranking

from nsbgp_lab.model import (
    EMPTY,
    Instance,
    Mode,
    RankingFunction,
    Relationship,
    extend,
    format_path,
    validate,
)
from nsbgp_lab.scenarios import bad_gadget, fig4_gadget


def codes(report):
    return {v.code for v in report}


class TestExtend:
    def test_prepends(self):
        assert extend(("2", "d"), "3") == ("3", "2", "d")

    def test_loop_rejected(self):
        assert extend(("1", "3", "d"), "3") is None

    def test_empty_rejected(self):
        assert extend(EMPTY, "3") is None


def test_format_path():
    assert format_path(("1", "3", "d")) == "(1 3 d)"
    assert format_path(EMPTY) == "()"


class TestRankingFunction:
    def test_rank_and_best(self):
        rf = ranking("1", "1 3 d", "1 d")
        assert rf.rank(("1", "d")) == 1
        assert rf.best([("1", "d"), ("1", "3", "d")]) == ("1", "3", "d")

    def test_unlisted_paths_are_never_chosen(self):
        rf = ranking("2", "2 1 d", "2 d")
        assert rf.rank(("2", "1", "3", "d")) is None
        assert rf.best([("2", "1", "3", "d")]) == EMPTY

    def test_restricted_keeps_order(self):
        rf = ranking("1", "1 5 d", "1 6 d", "1 7 d")
        assert rf.restricted(lambda p: p[1] != "6").acceptable == (("1", "5", "d"), ("1", "7", "d"))


class TestModeParse:
    @pytest.mark.parametrize("text, mode", [
        ("conventional", Mode.CONVENTIONAL),
        ("FILTER_FIRST", Mode.FILTER_FIRST),
        ("ff", Mode.FILTER_FIRST),
        ("ns", Mode.NEIGHBOR_SPECIFIC),
        ("ns-bgp", Mode.NEIGHBOR_SPECIFIC),
    ])
    def test_aliases(self, text, mode):
        assert Mode.parse(text) is mode

    def test_unknown(self):
        with pytest.raises(ValueError):
            Mode.parse("hot-potato")


def test_relation_is_symmetric_consistent():
    inst = bad_gadget()
    for u in inst.nodes:
        for v in inst.neighbors[u]:
            back = {"customer": "provider", "provider": "customer", "peer": "peer"}[inst.relation(u, v)]
            assert inst.relation(v, u) == back
    assert inst.relation("3", "1") == "provider"
    assert inst.relation("1", "2") == "peer"
    assert inst.relation("1", "1") is None


class TestValidate:
    def test_builders_are_clean(self, chain):
        for inst in (bad_gadget(), bad_gadget(Mode.FILTER_FIRST), bad_gadget(Mode.NEIGHBOR_SPECIFIC),
                     fig4_gadget(), fig4_gadget(Mode.CONVENTIONAL), chain):
            assert validate(inst).ok, list(validate(inst))

    def test_non_edge(self):
        inst = Instance(
            ("1", "2", "d"),
            (Relationship.customer_provider("d", "1"), Relationship.customer_provider("d", "2")),
            "d",
            Mode.CONVENTIONAL,
            {("1", None): ranking("1", "1 2 d"), ("2", None): ranking("2", "2 d")},
        )
        assert "path uses non-edge" in codes(validate(inst))

    def test_destination_missing(self, chain):
        inst = Instance(("u", "d"), chain.relationships, "z", Mode.CONVENTIONAL, {})
        assert "destination missing" in codes(validate(inst))

    def test_path_shape_errors(self, chain):
        bad = {("u", None): RankingFunction("u", (("x", "d"), ("u",), ("u", "d", "u", "d"), ("u", "d"), ("u", "d")))}
        found = codes(validate(Instance(chain.nodes, chain.relationships, "d", Mode.CONVENTIONAL, bad)))
        assert {"wrong-owner", "wrong-end", "not-simple", "duplicate-path", "unknown-node"} <= found

    def test_relationship_errors(self):
        rels = (Relationship.peer("a", "a"), Relationship.peer("a", "d"), Relationship.customer_provider("d", "a"))
        found = codes(validate(Instance(("a", "d"), rels, "d", Mode.CONVENTIONAL, {("a", None): ranking("a", "a d")})))
        assert {"self-relationship", "duplicate-relationship"} <= found

    def test_disconnected_is_only_a_warning(self):
        inst = Instance(("a", "b", "d"), (Relationship.peer("a", "b"),), "d", Mode.CONVENTIONAL,
                        {("a", None): RankingFunction("a"), ("b", None): RankingFunction("b")})
        report = validate(inst)
        assert "disconnected" in codes(report)
        assert not report.errors

    def test_neighbor_specific_needs_every_ranking(self):
        inst = bad_gadget(Mode.NEIGHBOR_SPECIFIC)
        rankings = dict(inst.rankings)
        del rankings[("3", "d")]
        report = validate(Instance(inst.nodes, inst.relationships, "d", Mode.NEIGHBOR_SPECIFIC, rankings))
        assert any(v.code == "missing-ranking" and v.witness == ("3", "d") for v in report)

    def test_per_neighbor_ranking_outside_ns(self):
        inst = bad_gadget(Mode.NEIGHBOR_SPECIFIC).with_mode(Mode.FILTER_FIRST)
        assert "unexpected-ranking" in codes(validate(inst))

    def test_missing_self_ranking(self, chain):
        inst = Instance(chain.nodes, chain.relationships, "d", Mode.CONVENTIONAL, {})
        assert "missing-ranking" in codes(validate(inst))

    def test_ranking_for_destination(self, chain):
        rankings = dict(chain.rankings)
        rankings[("d", None)] = RankingFunction("d")
        assert "destination-ranking" in codes(validate(Instance(chain.nodes, chain.relationships, "d", Mode.CONVENTIONAL, rankings)))


def test_ranking_for_missing_key_raises(chain):
    with pytest.raises(KeyError):
        chain.with_mode(Mode.NEIGHBOR_SPECIFIC).ranking_for("u", "d")


def test_as_neighbor_specific_copies_single_ranking():
    inst = bad_gadget().as_neighbor_specific()
    assert inst.mode is Mode.NEIGHBOR_SPECIFIC
    for v in inst.neighbors["1"]:
        assert inst.ranking_for("1", v) == inst.self_ranking("1")
