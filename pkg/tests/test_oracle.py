"""The per-tick reference scheduler and dataflow equivalence."""

import random

import pytest

from cosim.errors import ScenarioError
from cosim.oracle import CompareReport, compare_traces, naive_step_count, oracle_run

from conftest import ramp_collector_doc, random_scenario, run_doc


class TestOracleBasics:
    def test_step_call_count_is_sims_times_until(self):
        doc = ramp_collector_doc(until=3)
        trace = oracle_run(doc, 3)
        assert trace.total_step_calls == 6
        assert trace.per_sim_step_calls == {"ramp-0": 3, "col-0": 3}
        assert naive_step_count(2, 3) == 6

    def test_ramp_collector_observations(self):
        doc = ramp_collector_doc(until=3)
        trace = oracle_run(doc, 3)
        assert trace.observations[("col-0", 0)] == {"Collector-0": {"in": [["ramp-0.Ramp-0", 0.0]]}}
        assert trace.observations[("col-0", 2)] == {"Collector-0": {"in": [["ramp-0.Ramp-0", 2.0]]}}

    def test_weak_edge_refused(self):
        doc = ramp_collector_doc()
        doc["connections"][0]["weak"] = True
        with pytest.raises(ScenarioError, match="weak"):
            oracle_run(doc, 3)

    def test_negotiator_refused(self):
        doc = ramp_collector_doc()
        doc["simulators"].append({"sid": "n", "builtin": "negotiator", "params": {}})
        with pytest.raises(ScenarioError, match="per-tick"):
            oracle_run(doc, 3)

    def test_cycle_refused(self):
        doc = {
            "world": {"until": 3},
            "simulators": [
                {"sid": "a", "builtin": "delay_net", "params": {}},
                {"sid": "b", "builtin": "delay_net", "params": {}},
            ],
            "entities": [
                {"sid": "a", "model": "Node", "num": 1, "params": {"latency": 0}},
                {"sid": "b", "model": "Node", "num": 1, "params": {"latency": 0}},
            ],
            "connections": [
                {"src": "a.Node-0", "src_attr": "delivery", "dest": "b.Node-0", "dest_attr": "send"},
                {"src": "b.Node-0", "src_attr": "delivery", "dest": "a.Node-0", "dest_attr": "send"},
            ],
        }
        with pytest.raises(ScenarioError, match="acyclic"):
            oracle_run(doc, 3)


class TestCompare:
    def test_identical_dataflow_is_equal(self):
        doc = ramp_collector_doc(until=3)
        _world, result = run_doc(doc)
        report = compare_traces(result.dataflow, oracle_run(doc, 3))
        assert report == CompareReport(equal=True)

    def test_perturbed_value_names_sid_tick_attr(self):
        doc = ramp_collector_doc(until=9)
        _world, result = run_doc(doc)
        oracle = oracle_run(doc, 9)
        oracle.observations[("col-0", 7)]["Collector-0"]["in"][0][1] = 123.0
        report = compare_traces(result.dataflow, oracle)
        assert not report.equal
        assert report.first_divergence == ("col-0", 7, "in")

    def test_differing_step_counts_equal_dataflow(self):
        # the efficiency scenario: the main path steps the net 20x, the
        # oracle 10000x, but dataflow agrees exactly
        doc = {
            "world": {"until": 1000},
            "simulators": [
                {"sid": "src", "builtin": "ramp", "params": {}},
                {"sid": "net", "builtin": "delay_net", "params": {}},
                {"sid": "col", "builtin": "collector", "params": {}},
            ],
            "entities": [
                {"sid": "src", "model": "Ramp", "num": 1, "params": {"step_size": 100}},
                {"sid": "net", "model": "Node", "num": 1, "params": {"latency": 50}},
                {"sid": "col", "model": "Collector", "num": 1, "params": {}},
            ],
            "connections": [
                {"src": "src.Ramp-0", "src_attr": "out", "dest": "net.Node-0", "dest_attr": "send"},
                {"src": "net.Node-0", "src_attr": "delivery", "dest": "col.Collector-0", "dest_attr": "in"},
            ],
        }
        _world, result = run_doc(doc)
        oracle = oracle_run(doc, 1000)
        assert result.step_counts["net"] == 20
        assert oracle.per_sim_step_calls["net"] == 1000
        assert compare_traces(result.dataflow, oracle).equal


class TestRandomizedEquivalence:
    @pytest.mark.parametrize("seed", range(40))
    def test_dataflow_matches_oracle(self, seed):
        rng = random.Random(1000 + seed)
        doc = random_scenario(rng)
        until = doc["world"]["until"]
        _world, result = run_doc(doc)
        report = compare_traces(result.dataflow, oracle_run(doc, until))
        assert report.equal, (
            f"seed {seed}: divergence at {report.first_divergence}\nscenario: {doc}"
        )

    @pytest.mark.parametrize("seed", range(40))
    def test_no_superdense_iterations_without_weak_edges(self, seed):
        rng = random.Random(2000 + seed)
        doc = random_scenario(rng)
        _world, result = run_doc(doc)
        assert all(r.iteration == 0 for r in result.records)
