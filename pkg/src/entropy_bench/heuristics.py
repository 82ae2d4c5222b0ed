"""Simulated annealing and tabu search over k-way partitions, plus a trial harness."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import _kernels as K
from ._util import mix_seed, parallel_map, to_kernel_seed
from .graph import Graph, Partition


class ConfigurationError(ValueError):
    pass


@dataclass
class SaParams:
    t_initial: float = 10.0
    t_final: float = 0.01
    cooling: float = 0.95
    moves_per_temperature: int | None = None  # None -> 10 * n
    seed: int = 0

    def validate(self) -> None:
        # t_initial == t_final is allowed: a single fixed-temperature stage
        if not (self.t_initial >= self.t_final > 0):
            raise ConfigurationError("need t_initial >= t_final > 0")
        if not 0 < self.cooling < 1:
            raise ConfigurationError("cooling ratio must lie in (0, 1)")
        if self.moves_per_temperature is not None and self.moves_per_temperature < 1:
            raise ConfigurationError("moves_per_temperature must be >= 1")


@dataclass
class TabuParams:
    tenure: int = 7
    max_iterations: int = 500
    seed: int = 0

    def validate(self) -> None:
        if self.tenure < 1:
            raise ConfigurationError("tenure must be >= 1")
        if self.max_iterations < 0:
            raise ConfigurationError("max_iterations must be >= 0")


@dataclass
class SolverResult:
    best_value: int
    witness: Partition
    trace: list[int]
    wall_time: float
    iterations: int
    seed: int
    bookkeeping_errors: int = 0
    worsening_accepted: int = 0


@dataclass
class TrialSummary:
    algorithm: str
    trials: int
    best: int
    mean: float
    success_rate: float
    mean_time: float
    reference_optimum: int
    values: list[int] = field(default_factory=list, repr=False)
    times: list[float] = field(default_factory=list, repr=False)

    CSV_HEADER = "algorithm,k,trials,best,mean,success_rate,mean_time_s,reference_optimum"

    def csv_row(self, k: int) -> str:
        return (
            f"{self.algorithm},{k},{self.trials},{self.best},{self.mean:.4f},"
            f"{self.success_rate:.4f},{self.mean_time:.6f},{self.reference_optimum}"
        )

    def to_dict(self) -> dict:
        return asdict(self)


def simulated_annealing(g: Graph, k: int, params: SaParams | None = None, check: bool = False) -> SolverResult:
    """Anneal from a uniform random k-labelling with geometric cooling.

    Each move relabels a random vertex to a random different label and is
    accepted with probability ``min(1, exp(delta / T))``. ``trace`` holds the
    best value after each temperature stage. With ``check`` every accepted
    move is re-verified against a full recount (count in
    ``bookkeeping_errors``).
    """
    params = params or SaParams()
    params.validate()
    if k < 2:
        raise ConfigurationError("k must be >= 2")
    moves = params.moves_per_temperature or 10 * g.n
    indptr, indices = g.csr
    t0 = time.perf_counter()
    best, labels, trace, n_moves, bad, worse = K.sa_kernel(
        indptr, indices, k, float(params.t_initial), float(params.t_final),
        float(params.cooling), moves, to_kernel_seed(params.seed), check,
    )
    wall = time.perf_counter() - t0
    return SolverResult(int(best), Partition.of(labels, k), trace.tolist(), wall, int(n_moves),
                        params.seed, int(bad), int(worse))


def tabu_search(g: Graph, k: int, params: TabuParams | None = None, check: bool = False) -> SolverResult:
    """Best-improvement tabu search over single-vertex relabellings.

    Reverting a vertex to the label it just left is forbidden for ``tenure``
    iterations unless the move beats the best value seen so far. Ties go to
    the lowest ``(vertex, label)``. Stops early once every edge is cut.
    """
    params = params or TabuParams()
    params.validate()
    if k < 2:
        raise ConfigurationError("k must be >= 2")
    indptr, indices = g.csr
    t0 = time.perf_counter()
    best, labels, trace, iters, bad = K.tabu_kernel(
        indptr, indices, k, g.m, params.tenure, params.max_iterations,
        to_kernel_seed(params.seed), check,
    )
    wall = time.perf_counter() - t0
    return SolverResult(int(best), Partition.of(labels, k), trace.tolist(), wall, int(iters),
                        params.seed, int(bad))


ALGORITHMS: dict[str, Callable] = {
    "sa": simulated_annealing,
    "tabu": tabu_search,
}


def _make_params(name: str, overrides: dict, seed: int):
    if name == "sa":
        return SaParams(**{**overrides, "seed": seed})
    if name == "tabu":
        return TabuParams(**{**overrides, "seed": seed})
    raise ConfigurationError(f"unknown algorithm {name!r}; choose from {sorted(ALGORITHMS)}")


def run_trials(
    algorithm: str,
    g: Graph,
    k: int,
    trials: int,
    reference_optimum: int,
    master_seed: int = 42,
    params: dict | None = None,
    workers: int | None = None,
) -> TrialSummary:
    """Run ``trials`` independent seeded runs and aggregate best, mean, success rate and time.

    Trial ``i`` uses ``mix_seed(master_seed, i)``, so the summary does not
    depend on how trials are scheduled across workers.
    """
    name = algorithm.lower()
    if name not in ALGORITHMS:
        raise ConfigurationError(f"unknown algorithm {algorithm!r}; choose from {sorted(ALGORITHMS)}")
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    overrides = dict(params or {})
    solver = ALGORITHMS[name]
    # compile outside the timed region
    solver(Graph(2, ((0, 1),)), k, _make_params(name, overrides, 0))

    def one(i: int) -> SolverResult:
        return solver(g, k, _make_params(name, overrides, mix_seed(master_seed, i)))

    results = parallel_map(one, range(trials), workers=workers)
    values = [r.best_value for r in results]
    times = [r.wall_time for r in results]
    return TrialSummary(
        algorithm=name,
        trials=trials,
        best=max(values),
        mean=float(np.mean(values)),
        success_rate=sum(v >= reference_optimum for v in values) / trials,
        mean_time=float(np.mean(times)),
        reference_optimum=reference_optimum,
        values=values,
        times=times,
    )


def trace_csv(result: SolverResult) -> str:
    rows = ["iteration,incumbent"] + [f"{i},{v}" for i, v in enumerate(result.trace)]
    return "\n".join(rows) + "\n"
