import pytest
import networkx as nx
from hypothesis import given, settings
from hypothesis import strategies as st

from nsbgp_lab.engine import OutcomeKind, Schedule, Simulator
from nsbgp_lab.model import Mode
from nsbgp_lab.oracle import (
    SearchSpaceExceeded,
    StateBudgetExceeded,
    Verdict,
    enumerate_stable_states,
    exhaustive_search,
    state_digest,
)
from nsbgp_lab.scenarios import RandomConfig, bad_gadget, fig4_gadget, random_instance


def P(text):
    return tuple(text.split())


def own(state):
    return tuple(state.own_selection(u) for u in ("1", "2", "3"))


class TestStableStates:
    def test_bad_gadget_conventional_has_none(self):
        assert enumerate_stable_states(bad_gadget()) == set()

    @pytest.mark.parametrize("mode", [Mode.FILTER_FIRST, Mode.NEIGHBOR_SPECIFIC])
    def test_bad_gadget_fixed_has_exactly_one(self, mode):
        (state,) = enumerate_stable_states(bad_gadget(mode))
        assert own(state) == (P("1 3 d"), P("2 d"), P("3 2 d"))
        assert state.export("3", "1") == P("3 d")

    def test_chain(self, chain):
        (state,) = enumerate_stable_states(chain)
        assert state.own_selection("u") == ("u", "d")

    def test_limit(self):
        with pytest.raises(SearchSpaceExceeded):
            enumerate_stable_states(bad_gadget(), limit=26)
        assert enumerate_stable_states(bad_gadget(), limit=27) == set()

    def test_fig4_ns_exports_differ(self):
        (state,) = enumerate_stable_states(fig4_gadget())
        assert len({state.export("1", c) for c in "234"}) == 3


class TestExhaustiveSearch:
    def test_bad_gadget_conventional_cycles(self):
        result = exhaustive_search(bad_gadget())
        assert result.verdict is Verdict.CYCLE_FOUND
        seen = {own(s) for s in result.witness.states}
        assert (P("1 3 d"), P("2 d"), P("3 d")) in seen
        assert (P("1 d"), P("2 1 d"), P("3 2 d")) in seen

    def test_witness_replays(self):
        inst = bad_gadget()
        w = exhaustive_search(inst).witness
        sim = Simulator(inst)
        state = sim.initial_state()
        for u in w.prefix:
            state = sim.activate(state, u)
        assert state == w.states[0]
        visited = [state]
        for u in w.cycle:
            state = sim.activate(state, u)
            visited.append(state)
        assert state == w.states[0]
        assert set(visited) == set(w.states)

    @pytest.mark.parametrize("mode", [Mode.FILTER_FIRST, Mode.NEIGHBOR_SPECIFIC])
    def test_bad_gadget_fixed_is_safe(self, mode):
        result = exhaustive_search(bad_gadget(mode))
        assert result.safe and result.witness is None
        assert result.graph.stable_states() == enumerate_stable_states(bad_gadget(mode))

    def test_out_degree_is_node_count(self):
        inst = bad_gadget()
        graph = exhaustive_search(inst).graph
        for v in graph.vertices:
            assert len(graph.successors(v)) == len(inst.nodes)

    def test_budget(self):
        with pytest.raises(StateBudgetExceeded):
            exhaustive_search(bad_gadget(), max_states=5)

    def test_graphml_export(self, tmp_path):
        graph = exhaustive_search(bad_gadget(Mode.FILTER_FIRST)).graph
        out = tmp_path / "g.graphml"
        graph.write_graphml(out)
        g = nx.read_graphml(out)
        assert g.number_of_nodes() == len(graph.vertices)
        assert state_digest(graph.initial) in g.nodes
        assert {d["node"] for _, _, d in g.edges(data=True)} == {"1", "2", "3", "d"}


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 5), st.sampled_from(list(Mode)), st.booleans())
def test_stable_states_match_state_graph(seed, n, mode, safe):
    inst = random_instance(seed, n, mode, RandomConfig(safe=safe, paths_min=2, paths_max=4))
    result = exhaustive_search(inst)
    stable = enumerate_stable_states(inst)
    assert result.graph.stable_states() <= stable
    sim = Simulator(inst)
    for s in stable:
        assert sim.is_stable(s)
    for v in result.graph.vertices:
        assert sim.is_stable(v) == (v in stable)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 5))
def test_safe_verdict_means_engine_converges(seed, n):
    inst = random_instance(seed, n, Mode.NEIGHBOR_SPECIFIC, RandomConfig(safe=False, paths_min=2, paths_max=4))
    if not exhaustive_search(inst).safe:
        return
    sim = Simulator(inst)
    for k in range(5):
        assert sim.run(Schedule.random(k)).kind is OutcomeKind.CONVERGED
