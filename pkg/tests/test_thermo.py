import json
import math
import warnings

import numpy as np
import pytest

from entropy_bench._util import mix_seed
from entropy_bench.exact import density_of_states_exact
from entropy_bench.graph import Graph, complete_graph, cut_value, gen_gnp
from entropy_bench.thermo import (CutHistogram, InsufficientDataError, chi2_reduced, fit_beta, gibbs_sample,
                                  gibbs_sample_chains, metropolis_trajectory, predicted_cut_distribution,
                                  total_variation)

K3_DOS = {0: 1, 2: 3}


def synthetic(dos, beta, total):
    p = predicted_cut_distribution(dos, beta)
    return CutHistogram({k: int(round(total * q)) for k, q in p.items() if round(total * q) > 0})


class TestPredicted:
    def test_beta_zero_proportional(self):
        p = predicted_cut_distribution(K3_DOS, 0.0)
        assert p == pytest.approx({0: 0.25, 2: 0.75}, abs=1e-15)

    def test_two_level_closed_form(self):
        p = predicted_cut_distribution(K3_DOS, 1.0)
        e2 = math.exp(2)
        assert p[2] == pytest.approx(3 * e2 / (1 + 3 * e2), rel=1e-14)

    def test_invariances(self):
        dos = density_of_states_exact(gen_gnp(10, 0.5, 1)).counts
        base = predicted_cut_distribution(dos, 0.8)
        scaled = predicted_cut_distribution({k: 7 * c for k, c in dos.items()}, 0.8)
        shifted = predicted_cut_distribution({k + 5: c for k, c in dos.items()}, 0.8)
        for k in base:
            assert scaled[k] == pytest.approx(base[k], rel=1e-12)
            assert shifted[k + 5] == pytest.approx(base[k], rel=1e-12)
        assert sum(base.values()) == pytest.approx(1.0, abs=1e-12)

    def test_no_overflow(self):
        p = predicted_cut_distribution({0: 1, 500: 10**9}, 20.0)
        assert p[500] == pytest.approx(1.0) and all(np.isfinite(list(p.values())))

    def test_empty(self):
        with pytest.raises(ValueError):
            predicted_cut_distribution({3: 0}, 1.0)

    def test_mean_increases_with_beta(self):
        dos = density_of_states_exact(gen_gnp(12, 0.5, 2)).counts
        means = [sum(k * p for k, p in predicted_cut_distribution(dos, b).items()) for b in (0, 0.5, 1, 2, 4)]
        assert all(a < b for a, b in zip(means, means[1:]))


class TestSampler:
    def test_k3_hot(self):
        h = gibbs_sample(complete_graph(3), 5.0, 100_000, seed=1)
        target = 3 * math.exp(10) / (1 + 3 * math.exp(10))
        assert abs(h.counts.get(2, 0) / h.total - target) <= 0.01

    @pytest.mark.parametrize("beta", [0.0, 1.0])
    def test_matches_prediction(self, beta):
        g = gen_gnp(10, 0.5, 3)
        dos = density_of_states_exact(g)
        h = gibbs_sample(g, beta, 50_000, seed=9)
        assert total_variation(h.proportions(), predicted_cut_distribution(dos, beta)) <= 0.02

    def test_detailed_balance(self):
        g = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 2)])
        beta = 0.7
        states = metropolis_trajectory(g, beta, 400_000, seed=5)
        n_states = 1 << g.n
        flux = np.zeros((n_states, n_states))
        np.add.at(flux, (states[:-1], states[1:]), 1)
        visits = np.bincount(states, minlength=n_states) / states.size
        cuts = np.array([cut_value(g, [(s >> v) & 1 for v in range(g.n)]) for s in range(n_states)])
        pi = np.exp(beta * cuts) / np.exp(beta * cuts).sum()
        assert np.abs(visits - pi).max() < 0.01
        # forward and backward flux agree within Poisson noise
        for a in range(n_states):
            for b in range(a + 1, n_states):
                f, r = flux[a, b], flux[b, a]
                if f + r:
                    assert abs(f - r) <= 4 * math.sqrt(f + r) + 1

    def test_single_flip_moves(self):
        states = metropolis_trajectory(gen_gnp(6, 0.5, 1), 0.3, 2000, seed=2)
        steps = np.bitwise_xor(states[:-1], states[1:])
        assert all(s == 0 or (s & (s - 1)) == 0 for s in steps)

    def test_chains_deterministic(self):
        g = gen_gnp(10, 0.5, 4)
        a = gibbs_sample_chains(g, 1.0, 9_999, 4, seed=3, workers=1)
        b = gibbs_sample_chains(g, 1.0, 9_999, 4, seed=3, workers=4)
        assert a.counts == b.counts and a.total == 9_999

    def test_validation(self):
        with pytest.raises(ValueError):
            gibbs_sample(complete_graph(3), -1.0, 10)
        with pytest.raises(ValueError):
            gibbs_sample(complete_graph(3), 1.0, 0)


class TestChi2:
    def test_exact_match(self):
        assert chi2_reduced([1, 2, 3], [1, 2, 3], [1, 1, 1]) == 0.0

    def test_one_sigma_off(self):
        obs = [10.0] * 11
        pred = [10.0] * 10 + [12.0]
        sig = [1.0] * 10 + [2.0]
        assert chi2_reduced(obs, pred, sig) == pytest.approx(0.1)

    def test_dof(self):
        with pytest.raises(ValueError):
            chi2_reduced([1.0], [1.0], [1.0])


class TestFit:
    dos = density_of_states_exact(gen_gnp(10, 0.5, 11))

    def test_synthetic_exact(self):
        fit = fit_beta(self.dos, synthetic(self.dos, 2.0, 10_000))
        assert abs(fit.beta - 2.0) <= 0.05
        assert fit.chi2_reduced < 0.1
        assert fit.dof == len(fit.residuals) - 1

    def test_uniform_limit(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            fit = fit_beta(self.dos, synthetic(self.dos, 0.0, 10_000))
        assert abs(fit.beta) <= 0.05

    def test_boundary_warns(self):
        with pytest.warns(UserWarning):
            fit_beta(self.dos, synthetic(self.dos, 0.0, 10_000))

    def test_round_trip(self):
        g = gen_gnp(10, 0.5, 12)
        dos = density_of_states_exact(g)
        fit = fit_beta(dos, gibbs_sample(g, 1.0, 10_000, seed=4))
        assert 0.9 <= fit.beta <= 1.1

    def test_wide_histogram(self, paper30):
        # many bins: chi2 flattens once predicted mass passes the observed range
        dos = density_of_states_exact(paper30)
        fit = fit_beta(dos, gibbs_sample(paper30, 0.3, 10_000, seed=1))
        assert abs(fit.beta - 0.3) <= 3 * fit.beta_stderr + 0.01
        assert fit.chi2_reduced < 3

    def test_recovers_within_three_stderr(self):
        # independent draws: the multinomial covariance behind beta_stderr assumes them
        misses = 0
        for rep in range(50):
            g = gen_gnp(10, 0.5, mix_seed(7, rep))
            dos = density_of_states_exact(g)
            p = predicted_cut_distribution(dos, 1.0)
            draw = np.random.default_rng(mix_seed(8, rep)).multinomial(10_000, list(p.values()))
            hist = CutHistogram({k: int(c) for k, c in zip(p, draw) if c})
            fit = fit_beta(dos, hist)
            misses += abs(fit.beta - 1.0) > 3 * fit.beta_stderr
        assert misses == 0

    def test_insufficient(self):
        with pytest.raises(InsufficientDataError):
            fit_beta(K3_DOS, CutHistogram({2: 50, 0: 1}))

    def test_report(self):
        fit = fit_beta(self.dos, synthetic(self.dos, 1.0, 5000))
        rep = json.loads(fit.to_json())
        assert set(rep) >= {"beta", "chi2_reduced", "dof", "bins"}
        assert set(rep["bins"][0]) == {"k", "observed", "predicted", "sigma", "residual"}
        assert rep["chi2_reduced"] >= 0


class TestHistogram:
    def test_csv_round_trip(self, tmp_path):
        h = CutHistogram.from_values([3, 3, 5, 7, 7, 7])
        (tmp_path / "h.csv").write_text(h.to_csv())
        assert CutHistogram.load(tmp_path / "h.csv") == h
        assert h.to_csv().startswith("k,frequency\n")

    def test_merge(self):
        a = CutHistogram({1: 2, 3: 1}).merge(CutHistogram({3: 4}))
        assert a.counts == {1: 2, 3: 5} and a.total == 7

    def test_bad_header(self):
        with pytest.raises(ValueError):
            CutHistogram.from_csv("cut,n\n1,2\n")
