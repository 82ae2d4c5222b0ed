import numpy as np
import pytest

from conftest import naive_kcut_values
from entropy_bench.exact import branch_and_bound_maxkcut
from entropy_bench.graph import Graph, complete_bipartite, complete_graph, cut_value, gen_gnp
from entropy_bench.heuristics import (ConfigurationError, SaParams, TabuParams, TrialSummary, run_trials,
                                      simulated_annealing, tabu_search, trace_csv)

SOLVERS = [(simulated_annealing, SaParams), (tabu_search, TabuParams)]


class TestExamples:
    def test_sa_bipartite(self):
        assert simulated_annealing(complete_bipartite(3, 3), 2).best_value == 9

    def test_tabu_bipartite_fast(self):
        res = tabu_search(complete_bipartite(3, 3), 2)
        assert res.best_value == 9
        assert res.iterations <= 20

    @pytest.mark.parametrize("solver,params", SOLVERS)
    def test_empty_graph(self, solver, params):
        for k in (2, 3, 4):
            assert solver(Graph(6, ()), k, params(seed=1)).best_value == 0

    def test_single_vertex_tabu(self):
        res = tabu_search(Graph(1, ()), 2)
        assert res.best_value == 0 and res.iterations == 0


class TestProperties:
    @pytest.mark.parametrize("solver,params", SOLVERS)
    def test_witness_and_trace(self, solver, params):
        for s in range(6):
            g = gen_gnp(15, 0.5, s)
            for k in (2, 3, 4):
                res = solver(g, k, params(seed=s))
                assert cut_value(g, res.witness) == res.best_value
                assert all(a <= b for a, b in zip(res.trace, res.trace[1:]))
                assert res.trace[-1] == res.best_value

    @pytest.mark.parametrize("solver,params", SOLVERS)
    def test_incremental_bookkeeping(self, solver, params):
        for s in range(4):
            g = gen_gnp(12, 0.4, s)
            for k in (2, 3, 4):
                assert solver(g, k, params(seed=s), check=True).bookkeeping_errors == 0

    @pytest.mark.parametrize("solver,params", SOLVERS)
    def test_deterministic(self, solver, params):
        g = gen_gnp(20, 0.5, 3)
        a, b = solver(g, 3, params(seed=11)), solver(g, 3, params(seed=11))
        assert a.trace == b.trace and a.witness == b.witness

    def test_frozen_sa_is_hill_climbing(self):
        g = gen_gnp(20, 0.5, 2)
        res = simulated_annealing(g, 2, SaParams(t_initial=1e-9, t_final=1e-9, moves_per_temperature=5000, seed=4))
        assert res.worsening_accepted == 0
        assert len(res.trace) == 1

    def test_hot_sa_accepts_worsening(self):
        res = simulated_annealing(gen_gnp(20, 0.5, 2), 2, SaParams(seed=4))
        assert res.worsening_accepted > 0

    def test_never_beats_oracle(self):
        for s in range(5):
            g = gen_gnp(9, 0.5, s)
            opt = naive_kcut_values(g, 3).max()
            assert tabu_search(g, 3, TabuParams(seed=s)).best_value <= opt
            assert simulated_annealing(g, 3, SaParams(seed=s)).best_value <= opt


class TestValidation:
    @pytest.mark.parametrize("bad", [
        SaParams(t_initial=0.01, t_final=10),
        SaParams(t_final=0),
        SaParams(cooling=1.0),
        SaParams(moves_per_temperature=0),
    ])
    def test_sa_params(self, bad):
        with pytest.raises(ConfigurationError):
            simulated_annealing(complete_graph(3), 2, bad)

    def test_tabu_params(self):
        with pytest.raises(ConfigurationError):
            tabu_search(complete_graph(3), 2, TabuParams(tenure=0))

    def test_k_too_small(self):
        with pytest.raises(ConfigurationError):
            tabu_search(complete_graph(3), 1)

    def test_unknown_algorithm(self):
        with pytest.raises(ConfigurationError):
            run_trials("ga", complete_graph(3), 2, 1, 2)


class TestTrials:
    def test_tabu_k4(self):
        s = run_trials("tabu", complete_graph(4), 4, 10, 6)
        assert s.success_rate == 1.0 and s.best == 6

    def test_sa_k3_against_oracle(self):
        g = gen_gnp(12, 0.5, 77)
        opt = branch_and_bound_maxkcut(g, 3).best_value
        s = run_trials("sa", g, 3, 100, opt)
        assert s.success_rate > 0
        assert s.best <= opt

    def test_worker_independence(self):
        g = gen_gnp(16, 0.5, 1)
        a = run_trials("sa", g, 2, 12, 0, master_seed=5, workers=1)
        b = run_trials("sa", g, 2, 12, 0, master_seed=5, workers=4)
        assert a.values == b.values

    def test_param_overrides(self):
        s = run_trials("tabu", gen_gnp(10, 0.5, 1), 2, 3, 0, params={"tenure": 3, "max_iterations": 5})
        assert s.trials == 3

    def test_csv(self):
        s = run_trials("tabu", complete_graph(4), 2, 4, 4)
        row = s.csv_row(2).split(",")
        assert len(row) == len(TrialSummary.CSV_HEADER.split(","))
        assert row[0] == "tabu" and row[3] == "4"

    def test_sa_planted_mean(self, paper30):
        s = run_trials("sa", paper30, 2, 100, 146)
        assert 140 <= s.mean <= 146

    def test_trace_csv(self):
        res = tabu_search(complete_bipartite(2, 2), 2)
        text = trace_csv(res)
        assert text.startswith("iteration,incumbent\n")
