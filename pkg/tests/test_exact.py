import numpy as np
import pytest

from conftest import naive_dos, naive_kcut_values
from entropy_bench import _kernels as K
from entropy_bench.exact import (CapacityError, DensityOfStates, branch_and_bound_maxkcut, brute_force_maxcut,
                                 density_of_states_exact, dos_monte_carlo, maxcut_and_dos)
from entropy_bench.graph import Graph, Partition, complete_graph, cut_value, cycle_graph, gen_gnp
from entropy_bench.planting import planted_witnesses


class TestBruteForce:
    def test_small_examples(self):
        assert brute_force_maxcut(complete_graph(4)).best_value == 4
        assert brute_force_maxcut(cycle_graph(5)).best_value == 4

    def test_witness_matches_value(self):
        for s in range(5):
            g = gen_gnp(14, 0.5, s)
            sol = brute_force_maxcut(g)
            assert sol.proven_optimal
            assert cut_value(g, sol.witness) == sol.best_value

    def test_agrees_with_naive(self):
        for s in range(10):
            g = gen_gnp(10, 0.5, 100 + s)
            assert brute_force_maxcut(g).best_value == naive_kcut_values(g, 2).max()

    def test_capacity(self):
        with pytest.raises(CapacityError):
            brute_force_maxcut(Graph(33, ()))

    def test_single_vertex(self):
        sol = brute_force_maxcut(Graph(1, ()))
        assert sol.best_value == 0 and sol.witness.labels == (0,)


class TestDensityOfStates:
    def test_examples(self):
        assert density_of_states_exact(complete_graph(3)).counts == {0: 1, 2: 3}
        assert density_of_states_exact(Graph(4, ())).counts == {0: 8}

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_naive_recount(self, seed):
        g = gen_gnp(12, 0.5, seed)
        assert density_of_states_exact(g).counts == naive_dos(g)

    def test_conservation_and_max(self):
        for n in (5, 9, 16):
            g = gen_gnp(n, 0.5, n)
            sol, dos = maxcut_and_dos(g)
            assert dos.total == 2 ** (n - 1) == dos.config_space_size
            assert dos.max_cut() == sol.best_value

    def test_parallel_chunks_agree(self):
        g = gen_gnp(22, 0.5, 3)
        assert density_of_states_exact(g, workers=1).counts == density_of_states_exact(g, workers=8).counts

    def test_gray_spot_check_every_step(self):
        g = gen_gnp(11, 0.5, 8)
        counts = np.zeros(g.m + 1, np.int64)
        _, _, bad = K.gray_walk(g.bitsets, g.n, 0, 1 << (g.n - 1), counts, 1)
        assert bad == 0

    def test_csv_and_metadata_round_trip(self, tmp_path):
        dos = density_of_states_exact(gen_gnp(8, 0.5, 1))
        dos.save(tmp_path / "d.csv")
        text = (tmp_path / "d.csv").read_text()
        assert text.startswith("k,count\n") and "\r" not in text
        back = DensityOfStates.load(tmp_path / "d.csv")
        assert back.counts == dos.counts and back.n == 8 and back.kind == "exact"


class TestBranchAndBound:
    def test_small_examples(self):
        assert branch_and_bound_maxkcut(complete_graph(4), 3).best_value == 5
        assert branch_and_bound_maxkcut(complete_graph(4), 4).best_value == 6

    @pytest.mark.parametrize("k", [2, 3, 4])
    def test_matches_naive(self, k):
        for s in range(8):
            g = gen_gnp(8, 0.5, 1000 * k + s)
            sol = branch_and_bound_maxkcut(g, k)
            assert sol.proven_optimal
            assert sol.best_value == naive_kcut_values(g, k).max()
            assert cut_value(g, sol.witness) == sol.best_value

    def test_k2_matches_brute_force(self):
        for s in range(4):
            g = gen_gnp(18, 0.5, s)
            assert branch_and_bound_maxkcut(g, 2).best_value == brute_force_maxcut(g).best_value

    def test_monotone_in_k(self):
        g = gen_gnp(10, 0.5, 5)
        vals = [branch_and_bound_maxkcut(g, k).best_value for k in (2, 3, 4, 5)]
        assert vals == sorted(vals)

    def test_budget_exhaustion_reported(self):
        g = gen_gnp(40, 0.5, 1)
        sol = branch_and_bound_maxkcut(g, 3, time_budget=0.0)
        assert not sol.proven_optimal
        assert cut_value(g, sol.witness) == sol.best_value

    def test_incumbent_seed(self):
        g = gen_gnp(10, 0.5, 9)
        plain = branch_and_bound_maxkcut(g, 3)
        seeded = branch_and_bound_maxkcut(g, 3, incumbent=plain.witness)
        assert seeded.best_value == plain.best_value
        assert cut_value(g, seeded.witness) == seeded.best_value
        assert seeded.nodes_explored <= plain.nodes_explored


class TestMonteCarlo:
    def test_k3_probability(self):
        dos = dos_monte_carlo(complete_graph(3), 2, 10**6, seed=42)
        assert dos.total == 10**6
        assert abs(dos.counts[2] / dos.total - 0.75) <= 0.002

    def test_single_label(self):
        dos = dos_monte_carlo(gen_gnp(6, 0.5, 1), 1, 100, seed=1)
        assert dos.counts == {0: 100}

    def test_matches_exact_ordered_distribution(self):
        g = gen_gnp(7, 0.5, 2)
        vals = naive_kcut_values(g, 3)
        exact = np.bincount(vals, minlength=g.m + 1) / vals.size
        dos = dos_monte_carlo(g, 3, 400_000, seed=5)
        emp = np.array([dos.counts.get(k, 0) for k in range(g.m + 1)]) / dos.total
        assert 0.5 * np.abs(emp - exact).sum() < 0.01

    def test_deterministic_across_workers(self):
        g = gen_gnp(12, 0.5, 3)
        a = dos_monte_carlo(g, 3, 3_000_000, seed=7, workers=1)
        b = dos_monte_carlo(g, 3, 3_000_000, seed=7, workers=4)
        assert a.counts == b.counts

    def test_injection_kept_separate(self, paper30):
        wit = planted_witnesses(paper30)[4]
        dos = dos_monte_carlo(paper30, 4, 1000, seed=1, inject=wit)
        assert dos.total == 1000
        assert dos.injected == {cut_value(paper30, wit[0]): 1}
        assert dos.scaled()[max(dos.counts)] > 0

    def test_planted_k3_shape(self, paper30):
        dos = dos_monte_carlo(paper30, 3, 10**6, seed=42)
        ks = np.array(dos.support())
        c = np.array([dos.counts[k] for k in ks])
        mode = ks[np.argmax(c)]
        # uniform 3-labelling cuts each edge with probability 2/3
        assert abs(mode - 2 * paper30.m / 3) <= 3
        left, right = c[: np.argmax(c)], c[np.argmax(c):]
        assert np.all(np.diff(left) >= -0.02 * c.max()) and np.all(np.diff(right) <= 0.02 * c.max())
