"""Exact Max-Cut by enumeration, density of states, and Max-k-Cut branch and bound."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels as K
from ._util import mix_seed, parallel_map, resolve_workers, to_kernel_seed
from .graph import Graph, Partition, cut_value

MAX_ENUM_N = 32
CHECK_EVERY = 1 << 16
MIN_CHUNK = 1 << 20


class CapacityError(ValueError):
    """Instance too large for exhaustive enumeration."""


class EnumerationMismatch(RuntimeError):
    """Incremental Gray-code bookkeeping disagreed with a from-scratch recount."""


@dataclass
class DensityOfStates:
    """Configuration counts per cut value.

    For ``kind == "exact"`` (k = 2 only) configurations are bipartitions with
    complements identified, so ``sum(counts) == 2**(n-1)``. Monte-Carlo DOS
    tally ordered labellings from the ``k**n`` space and sum to ``samples``;
    ``injected`` holds planted witness cut values kept apart from the uniform
    tallies.
    """

    n: int
    k: int
    counts: dict[int, int]
    kind: str = "exact"
    samples: int | None = None
    config_space_size: int = 0
    seed: int | None = None
    injected: dict[int, int] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def support(self) -> list[int]:
        return sorted(k for k, c in self.counts.items() if c > 0)

    def max_cut(self) -> int:
        return max(self.support())

    def scaled(self) -> dict[int, float]:
        """Counts rescaled to the full configuration space (identity for exact DOS)."""
        if self.kind == "exact":
            return {k: float(c) for k, c in self.counts.items()}
        f = self.config_space_size / self.total
        return {k: c * f for k, c in self.counts.items()}

    def metadata(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "kind": self.kind,
            "samples": self.samples,
            "config_space_size": self.config_space_size,
            "seed": self.seed,
            "configuration_space": (
                "bipartitions with complements identified (vertex 0 pinned)"
                if self.kind == "exact"
                else "ordered labellings, no label-permutation quotient"
            ),
        }

    def to_csv(self) -> str:
        rows = ["k,count"] + [f"{k},{self.counts[k]}" for k in sorted(self.counts)]
        return "\n".join(rows) + "\n"

    def save(self, csv_path: str | Path, meta_path: str | Path | None = None) -> None:
        csv_path = Path(csv_path)
        csv_path.write_text(self.to_csv(), newline="\n")
        meta_path = Path(meta_path) if meta_path else csv_path.with_suffix(".meta.json")
        meta = self.metadata()
        if self.injected:
            meta["injected"] = {str(k): v for k, v in sorted(self.injected.items())}
        meta_path.write_text(json.dumps(meta, indent=2) + "\n")

    @classmethod
    def from_csv(cls, text: str, meta: dict | None = None) -> "DensityOfStates":
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        if not lines or lines[0].replace(" ", "") != "k,count":
            raise ValueError("DOS CSV must start with header 'k,count'")
        counts = {}
        for ln in lines[1:]:
            a, b = ln.split(",")
            counts[int(a)] = int(b)
        meta = meta or {}
        total = sum(counts.values())
        return cls(
            n=int(meta.get("n", 0)),
            k=int(meta.get("k", 2)),
            counts=counts,
            kind=meta.get("kind", "exact"),
            samples=meta.get("samples"),
            config_space_size=int(meta.get("config_space_size", total)),
            seed=meta.get("seed"),
        )

    @classmethod
    def load(cls, csv_path: str | Path) -> "DensityOfStates":
        csv_path = Path(csv_path)
        meta_path = csv_path.with_suffix(".meta.json")
        meta = json.loads(meta_path.read_text()) if meta_path.exists() else None
        return cls.from_csv(csv_path.read_text(), meta)


@dataclass
class ExactSolution:
    best_value: int
    witness: Partition
    proven_optimal: bool
    nodes_explored: int
    wall_time: float


def _mask_to_labels(mask: int, n: int) -> Partition:
    return Partition(tuple((mask >> v) & 1 for v in range(n)), 2)


def _enumerate(g: Graph, workers: int | None = None):
    if g.n > MAX_ENUM_N:
        raise CapacityError(f"exhaustive 2-cut enumeration supports n <= {MAX_ENUM_N}, got {g.n}")
    total = 1 << (g.n - 1)
    adj = g.bitsets
    w = resolve_workers(workers)
    # split on the top bits of the configuration index; each chunk >= MIN_CHUNK
    chunks = 1
    while chunks < w and total // (chunks * 2) >= MIN_CHUNK:
        chunks *= 2
    step = total // chunks

    def run(i):
        counts = np.zeros(g.m + 1, np.int64)
        best, state, bad = K.gray_walk(adj, g.n, i * step, (i + 1) * step, counts, CHECK_EVERY)
        return counts, int(best), int(state), int(bad)

    parts = parallel_map(run, range(chunks), workers=w)
    counts = sum(p[0] for p in parts)
    bad = sum(p[3] for p in parts)
    if bad:
        raise EnumerationMismatch(f"{bad} Gray-code spot checks disagreed with recomputation")
    best, state = max(((p[1], p[2]) for p in parts), key=lambda t: t[0])
    return counts, best, state, total


def brute_force_maxcut(g: Graph, workers: int | None = None) -> ExactSolution:
    """Exact Max-Cut by walking all 2**(n-1) bipartitions in Gray-code order."""
    t0 = time.perf_counter()
    _, best, state, total = _enumerate(g, workers)
    return ExactSolution(best, _mask_to_labels(state, g.n), True, total, time.perf_counter() - t0)


def density_of_states_exact(g: Graph, workers: int | None = None) -> DensityOfStates:
    counts, _, _, total = _enumerate(g, workers)
    return DensityOfStates(
        n=g.n,
        k=2,
        counts={int(k): int(c) for k, c in enumerate(counts) if c},
        kind="exact",
        config_space_size=total,
    )


def maxcut_and_dos(g: Graph, workers: int | None = None) -> tuple[ExactSolution, DensityOfStates]:
    """Both results from a single enumeration pass."""
    t0 = time.perf_counter()
    counts, best, state, total = _enumerate(g, workers)
    sol = ExactSolution(best, _mask_to_labels(state, g.n), True, total, time.perf_counter() - t0)
    dos = DensityOfStates(g.n, 2, {int(k): int(c) for k, c in enumerate(counts) if c}, "exact",
                          config_space_size=total)
    return sol, dos


def branch_and_bound_maxkcut(
    g: Graph,
    k: int,
    time_budget: float = 60.0,
    incumbent: Partition | None = None,
) -> ExactSolution:
    """Depth-first branch and bound for Max-k-Cut.

    Vertices are fixed in order of decreasing degree (ties by index). A node
    is pruned when crossing edges so far plus every edge with an unassigned
    endpoint cannot beat the incumbent. Label symmetry is broken by letting
    each vertex use at most one label beyond those already in use.

    ``incumbent`` seeds the lower bound, e.g. with a tabu search result.
    The search checks the clock every few thousand nodes and stops once
    ``time_budget`` seconds have elapsed, returning ``proven_optimal=False``.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if g.n > 64:
        raise CapacityError(f"branch and bound supports n <= 64, got {g.n}")
    t0 = time.perf_counter()
    n = g.n
    deg = g.degrees()
    order = np.array(sorted(range(n), key=lambda v: (-deg[v], v)), np.int64)
    lab = np.full(n, -1, np.int64)
    cross = np.zeros(n + 1, np.int64)
    rem = np.zeros(n + 1, np.int64)
    rem[0] = g.m
    maxused = np.full(n + 1, -1, np.int64)
    masks = np.zeros(k, np.uint64)
    assigned = np.zeros(1, np.uint64)
    depth = np.zeros(1, np.int64)
    best_labels = np.zeros(n, np.int64)
    if incumbent is not None:
        best = np.array([cut_value(g, incumbent) - 1], np.int64)
        fallback = (cut_value(g, incumbent), incumbent)
    else:
        best = np.array([-1], np.int64)
        fallback = None
    nodes = 0
    finished = False
    budget = 1 << 14
    while True:
        done_nodes, finished = K.bnb_run(g.bitsets, order, k, lab, cross, rem, maxused, masks,
                                         assigned, depth, best, best_labels, budget)
        nodes += int(done_nodes)
        if finished or time.perf_counter() - t0 >= time_budget:
            break
        budget = min(budget * 2, 1 << 22)
    value = int(best[0])
    if fallback is not None and value < fallback[0]:
        value, witness = fallback
    else:
        witness = Partition(tuple(int(x) for x in best_labels), k)
    return ExactSolution(value, witness, bool(finished), nodes, time.perf_counter() - t0)


def dos_monte_carlo(
    g: Graph,
    k: int,
    samples: int,
    seed: int,
    inject: list[Partition] | None = None,
    workers: int | None = None,
) -> DensityOfStates:
    """Histogram of cut values over uniformly random ordered k-labellings.

    ``inject`` adds planted witness partitions to the separate ``injected``
    tally so that extreme values the sampler will never hit still appear in
    reports.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if k < 1:
        raise ValueError("k must be >= 1")
    w = resolve_workers(workers)
    # stream layout depends only on the sample count so any worker count agrees
    streams = max(1, min(256, samples // 1_000_000))
    per = [samples // streams + (1 if i < samples % streams else 0) for i in range(streams)]

    def run(i):
        counts = np.zeros(g.m + 1, np.int64)
        K.mc_tally(g.bitsets, g.n, g.m, k, per[i], to_kernel_seed(mix_seed(seed, i)), counts)
        return counts

    counts = sum(parallel_map(run, range(streams), workers=w))
    injected: dict[int, int] = {}
    if inject:
        for part in inject:
            c = cut_value(g, part)
            injected[c] = injected.get(c, 0) + 1
    return DensityOfStates(
        n=g.n,
        k=k,
        counts={int(c): int(v) for c, v in enumerate(counts) if v},
        kind="monte-carlo",
        samples=samples,
        config_space_size=k ** g.n,
        seed=seed,
        injected=injected,
    )
