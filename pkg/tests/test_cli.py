import json
import os
import subprocess
import sys

import pytest

from nsbgp_lab.cli import SCHEMA, main
from nsbgp_lab.files import as_to_json, assignments_to_json, attributes_to_json, dump, instance_to_json
from nsbgp_lab.model import Mode
from nsbgp_lab.scenarios import bad_gadget, fig1_gadget, fig4_gadget, fig5_as, random_instance
from nsbgp_lab.service_models import fig4_assignments, fig4_attributes


def write(tmp_path, name, data):
    f = tmp_path / name
    with open(f, "w") as fh:
        dump(data, fh)
    return str(f)


@pytest.fixture
def gadget(tmp_path):
    return write(tmp_path, "bad_gadget.json", instance_to_json(bad_gadget()))


@pytest.fixture
def fig1(tmp_path):
    return write(tmp_path, "fig1.json", as_to_json(fig1_gadget()))


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestRun:
    def test_cycle_exit_2(self, capsys, gadget):
        code, out, _ = run(capsys, "run", gadget, "--mode", "conventional", "--schedule", "1,3,1,2,3,1,2")
        assert code == 2
        assert "cycle of 6 states" in out
        assert "(1 3 d)" in out

    def test_filter_first_converges(self, capsys, gadget):
        code, out, _ = run(capsys, "run", gadget, "--mode", "filter-first", "--schedule", "round-robin")
        assert code == 0
        assert "CONVERGED" in out

    def test_defaults_echoed(self, capsys, gadget):
        _, out, _ = run(capsys, "run", gadget, "--mode", "filter-first")
        assert "schedule: round-robin" in out
        assert "max-steps: " in out

    def test_inconclusive_exit_3(self, capsys, gadget):
        code, _, _ = run(capsys, "run", gadget, "--schedule", "random:1", "--max-steps", "2")
        assert code == 3

    def test_broken_path_exit_1(self, capsys, tmp_path):
        data = instance_to_json(bad_gadget())
        data["rankings"]["1"][0] = ["1", "2", "3", "1", "d"]
        code, _, err = run(capsys, "run", write(tmp_path, "broken.json", data))
        assert code == 1
        assert "broken.json" in err

    def test_invalid_json_exit_1(self, capsys, tmp_path):
        f = tmp_path / "bad.json"
        f.write_text("{nope")
        code, _, err = run(capsys, "run", str(f))
        assert code == 1
        assert "bad.json:1:" in err

    def test_bad_mode_and_schedule_exit_1(self, capsys, gadget):
        assert run(capsys, "run", gadget, "--mode", "fast")[0] == 1
        assert run(capsys, "run", gadget, "--schedule", "1,9")[0] == 1

    def test_trace_file(self, capsys, gadget, tmp_path):
        out = tmp_path / "trace.jsonl"
        run(capsys, "run", gadget, "--schedule", "1,3,1,2,3,1,2", "--trace", str(out))
        records = [json.loads(line) for line in out.read_text().splitlines()]
        assert len(records) >= 7

    def test_json_report(self, capsys, gadget):
        code, out, _ = run(capsys, "run", gadget, "--schedule", "1,3,1,2,3,1,2", "--json")
        report = json.loads(out)
        assert code == 2
        assert report["schema"] == SCHEMA
        assert report["command"] == "run"
        assert report["outcome"] == "cycle"
        assert len(report["cycle"]) == 6

    def test_byte_identical(self, capsys, gadget):
        a = run(capsys, "run", gadget, "--schedule", "random:3", "--json")
        b = run(capsys, "run", gadget, "--schedule", "random:3", "--json")
        assert a == b


class TestCheck:
    def test_safe_random_exit_0(self, capsys, tmp_path):
        f = write(tmp_path, "safe.json", instance_to_json(random_instance(7, 6)))
        assert run(capsys, "check", f)[0] == 0

    def test_topology_cycle_exit_4(self, capsys, tmp_path):
        data = instance_to_json(bad_gadget())
        data["relationships"] = [
            {"a": "d", "b": "1", "kind": "customer-of"},
            {"a": "d", "b": "2", "kind": "customer-of"},
            {"a": "d", "b": "3", "kind": "customer-of"},
            {"a": "1", "b": "2", "kind": "customer-of"},
            {"a": "2", "b": "3", "kind": "customer-of"},
            {"a": "3", "b": "1", "kind": "customer-of"},
        ]
        code, out, _ = run(capsys, "check", write(tmp_path, "loop.json", data))
        assert code == 4
        assert "topology" in out and "FAIL" in out

    def test_preference_violation_listed(self, capsys, gadget):
        code, out, _ = run(capsys, "check", gadget, "--json")
        report = json.loads(out)
        assert code == 4
        failed = [c for c in report["checks"] if c["verdict"] == "fail"]
        assert failed and all(c["witnesses"] for c in failed)


class TestOracle:
    def test_conventional(self, capsys, gadget):
        code, out, _ = run(capsys, "oracle", gadget)
        assert code == 2
        assert out.startswith("0 stable states, CYCLE_FOUND")

    def test_filter_first(self, capsys, gadget):
        code, out, _ = run(capsys, "oracle", gadget, "--mode", "filter-first")
        assert code == 0
        assert out.startswith("1 stable state, SAFE")

    def test_budget_flag(self, capsys, gadget):
        assert run(capsys, "oracle", gadget, "--budget", "2")[0] == 3

    def test_budget_env(self, capsys, gadget, monkeypatch):
        monkeypatch.setenv("NSBGP_LAB_BUDGET", "2")
        code, out, _ = run(capsys, "oracle", gadget, "--json")
        assert code == 3
        assert json.loads(out)["budget"] == 2

    def test_graphml(self, capsys, gadget, tmp_path):
        g = tmp_path / "g.graphml"
        run(capsys, "oracle", gadget, "--graph", str(g))
        assert "graphml" in g.read_text()


class TestAs:
    def test_fig1_conventional(self, capsys, fig1):
        code, out, _ = run(capsys, "as", fig1, "--mode", "conventional", "--check", "consistent-export",
                           "--neighbor", "Peer1")
        assert code == 4
        assert "FAIL" in out

    def test_fig1_filter_first(self, capsys, fig1):
        code, out, _ = run(capsys, "as", fig1, "--mode", "filter-first", "--json")
        report = json.loads(out)
        assert code == 0
        assert all(c["verdict"] == "PASS" for c in report["checks"])
        assert report["selection"]["R1-Peer1"][0] == "R3-Customer2"
        assert report["selection"]["R2-Peer1"][0] == "R3-Customer2"
        assert report["selection"]["R2-Customer1"][0] == "R4-Peer2"

    def test_fig1_forced(self, capsys, fig1):
        code, out, _ = run(capsys, "as", fig1, "--force", "R2=R3-Customer2", "--json")
        checks = {c["check"]: c["verdict"] for c in json.loads(out)["checks"]}
        assert code == 4
        assert checks == {"consistent-export:Peer1": "PASS", "hot-potato": "FAIL"}

    def test_fig5_single_best(self, capsys, tmp_path):
        f = write(tmp_path, "fig5.json", as_to_json(fig5_as()))
        code, out, _ = run(capsys, "as", f, "--disseminate", "single-best", "--check", "hot-potato", "--json")
        vis = json.loads(out)["visibility"]
        assert (vis["R5"], vis["R1"], vis["R2"]) == (2, 1, 1)

    def test_fig5_rcp_and_tunnels(self, capsys, tmp_path):
        f = write(tmp_path, "fig5.json", as_to_json(fig5_as()))
        code, out, _ = run(capsys, "as", f, "--disseminate", "rcp", "--mode", "neighbor-specific", "--tunnels",
                           "--check", "hot-potato", "--json")
        report = json.loads(out)
        assert set(report["visibility"].values()) == {4}
        assert "tunnels" in report

    def test_bad_force_exit_1(self, capsys, fig1):
        assert run(capsys, "as", fig1, "--force", "R2")[0] == 1
        assert run(capsys, "as", fig1, "--force", "R2=nowhere")[0] == 1

    def test_bad_dissemination_exit_1(self, capsys, fig1):
        assert run(capsys, "as", fig1, "--disseminate", "gossip")[0] == 1


class TestSweep:
    def test_safe_no_cycles(self, capsys):
        code, out, _ = run(capsys, "sweep", "--seeds", "0..19", "--nodes", "6", "--schedules", "3", "--json")
        summary = json.loads(out)["summary"]
        assert code == 0
        assert summary["instances"] == 20 and summary["cycles"] == 0

    def test_gadget_injection_finds_cycles(self, capsys):
        code, out, _ = run(capsys, "sweep", "--seeds", "0..4", "--mode", "conventional", "--unsafe",
                           "--inject", "gadget", "--schedules", "2", "--json")
        assert json.loads(out)["summary"]["cycles"] >= 1

    def test_empty_range(self, capsys):
        code, out, _ = run(capsys, "sweep", "--seeds", "5..4", "--json")
        summary = json.loads(out)["summary"]
        assert code == 0
        assert summary["instances"] == 0 and summary["runs"] == 0

    def test_parallel_matches_serial(self, capsys):
        serial = run(capsys, "sweep", "--seeds", "0..7", "--schedules", "2", "--json")
        parallel = run(capsys, "sweep", "--seeds", "0..7", "--schedules", "2", "--jobs", "2", "--json")
        assert serial == parallel


class TestScenarioAndServices:
    @pytest.mark.parametrize("name", ["bad-gadget", "fig1", "fig3", "fig4", "fig5"])
    def test_scenario_dump(self, capsys, name):
        code, out, _ = run(capsys, "scenario", name)
        assert code == 0
        json.loads(out)

    def test_scenario_bad_mode(self, capsys):
        assert run(capsys, "scenario", "bad-gadget", "--mode", "fastest")[0] == 1

    def test_scenario_feeds_run(self, capsys, tmp_path):
        f = tmp_path / "g.json"
        assert run(capsys, "scenario", "bad-gadget", "--mode", "neighbor-specific", "--out", str(f))[0] == 0
        assert run(capsys, "run", str(f))[0] == 0

    def test_services(self, capsys, tmp_path):
        inst = write(tmp_path, "i.json", instance_to_json(fig4_gadget(Mode.CONVENTIONAL)))
        attrs = write(tmp_path, "a.json", attributes_to_json(fig4_attributes()))
        assign = write(tmp_path, "s.json", assignments_to_json("1", fig4_assignments()))
        out_file = tmp_path / "out.json"
        code, out, _ = run(capsys, "services", inst, attrs, assign, "--out", str(out_file), "--json")
        report = json.loads(out)
        assert code == 0
        assert report["rankings"]["2"][0] == "(1 6 d)"
        assert report["rankings"]["3"][0] == "(1 7 d)"
        assert report["rankings"]["4"][0] == "(1 5 d)"
        assert run(capsys, "run", str(out_file))[0] == 0


def test_module_entry_point_and_backend_env(gadget):
    env = dict(os.environ, NSBGP_LAB_KERNEL="python")
    proc = subprocess.run([sys.executable, "-m", "nsbgp_lab", "oracle", gadget, "--mode", "filter-first"],
                          capture_output=True, text=True, env=env)
    assert proc.returncode == 0
    assert proc.stdout.startswith("1 stable state, SAFE")
